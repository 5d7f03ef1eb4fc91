#include <doctest.h>

#include <set>

#include "nemesys/grounder.hpp"
#include "nemesys/infer.hpp"
#include "nemesys/meta.hpp"
#include "nemesys/parser.hpp"

using namespace nemesys;

namespace {

GroundSpace ground(const std::string& program_text, const std::string& interpreter,
                   GroundingConfig cfg = {}) {
  Program p = parse_program(program_text);
  MetaFactSet mfs = lift_program(p);
  MetaProgram mp = load_interpreter(interpreter);
  return build_ground_space(mp, p, mfs, cfg);
}

int count_pred(const GroundSpace& s, const std::string& pred, int arity) {
  int n = 0;
  for (const Term& a : s.table.atoms())
    if (a.name() == pred && a.arity() == arity) ++n;
  return n;
}

}  // namespace

TEST_CASE("edge program ground space matches the typed enumeration") {
  GroundSpace s = ground("edge(a,b). edge(b,c). connected(X,Y) :- edge(X,Y).", "naive");

  // 9 edge + 9 connected object atoms, all present as solve/1 entries.
  CHECK(s.report.object_atoms == 18);
  CHECK(count_pred(s, "solve", 1) == 18 + 1);  // + solve(true)
  CHECK(count_pred(s, "clause", 2) == 9 + 2);  // rule instances + two facts

  // Reserved entries and their invariants.
  CHECK(s.table.atom(GroundAtomTable::kTop) == GroundAtomTable::top_atom());
  CHECK(s.table.atom(GroundAtomTable::kBot) == GroundAtomTable::bot_atom());
  CHECK(!s.table.find(parse_term("solve(edge(a,b))")).value_or(-1) == 0);
}

TEST_CASE("empty program grounds to the reserved atoms only") {
  CHECK(ground("", "naive").table.size() == 2);
  CHECK(ground("", "causal").table.size() == 2);
}

TEST_CASE("peano pools close up to the term depth bound") {
  GroundingConfig cfg;
  cfg.term_depth = 2;
  GroundSpace s = ground("#dtype nat {0}.\n#pred count/1 [nat].\ncount(0).", "naive", cfg);
  CHECK(count_pred(s, "solve", 1) == 3 + 1);  // count(0..2) + solve(true)
}

TEST_CASE("grounding is deterministic") {
  auto fingerprint = [](const GroundSpace& s) {
    std::string acc;
    for (const Term& a : s.table.atoms()) acc += render(a) + ";";
    for (const IndexTensor& t : s.tensors)
      for (int32_t v : t.data) acc += std::to_string(v) + ",";
    for (const SeedValue& v : s.seeds)
      acc += std::to_string(v.index) + "=" + std::to_string(v.value) + ";";
    return acc;
  };
  const char* text = "edge(a,b). edge(b,c). 0.7: connected(X,Y) :- edge(X,Y).";
  CHECK(fingerprint(ground(text, "naive")) == fingerprint(ground(text, "naive")));
  CHECK(fingerprint(ground(text, "lrp2")) == fingerprint(ground(text, "lrp2")));
}

TEST_CASE("fact rule grounding points at the lifted fact and solve(true)") {
  GroundSpace s = ground("edge(a,b). edge(b,c). connected(X,Y) :- edge(X,Y).", "naive");
  MetaProgram mp = load_interpreter("naive");
  const Clause& solve_clause = mp.rules[2];  // solve(A) :- clause(A,B), solve(B)

  auto rows = ground_rule(solve_clause, s.table, mp, GroundingConfig{});
  int j_fact = s.table.find(parse_term("solve(edge(a,b))")).value();
  int idx_clause = s.table.find(parse_term("clause(edge(a,b),true)")).value();
  int idx_true = s.table.find(parse_term("solve(true)")).value();

  bool found = false;
  for (auto& [j, row] : rows) {
    if (j == j_fact) {
      REQUIRE(row.size() == 2);
      CHECK(row[0] == idx_clause);
      CHECK(row[1] == idx_true);
      found = true;
    }
  }
  CHECK(found);
}

TEST_CASE("tensor padding invariants") {
  GroundingConfig cfg;
  cfg.l_cap = 3;  // force one slot of padding on two-atom bodies
  GroundSpace s = ground("edge(a,b). edge(b,c). connected(X,Y) :- edge(X,Y).", "naive", cfg);

  // Padding soundness under the product/softor semantics: a padded body
  // slot contributes factor 1, a dead substitution contributes 0.
  Valuation v = initial_valuation(s);
  for (const IndexTensor& t : s.tensors) {
    CHECK(t.body_len == 3);
    CHECK(static_cast<int>(t.data.size()) == t.num_atoms * t.num_subst * t.body_len);
    std::vector<double> b = gather_eval(v, t);
    for (int j = 0; j < t.num_atoms; ++j) {
      for (int k = 0; k < t.num_subst; ++k) {
        bool dead = true;
        for (int l = 0; l < t.body_len; ++l) dead = dead && t.at(j, k, l) == GroundAtomTable::kBot;
        if (dead) CHECK(b[static_cast<size_t>(j) * t.num_subst + k] == 0.0);
      }
    }
  }

  // Rows for heads that do not unify stay all-false.
  const IndexTensor& compound_rule = s.tensors[0];  // solve((A,B)) :- ...
  int j = s.table.find(parse_term("clause(edge(a,b),true)")).value();
  for (int k = 0; k < compound_rule.num_subst; ++k)
    for (int l = 0; l < compound_rule.body_len; ++l)
      CHECK(compound_rule.at(j, k, l) == GroundAtomTable::kBot);
}

TEST_CASE("explosion guard aborts with a size report") {
  GroundingConfig cfg;
  cfg.max_ground_atoms = 10;
  CHECK_THROWS_AS(ground("edge(a,b). edge(b,c). connected(X,Y) :- edge(X,Y).", "naive", cfg),
                  GroundingError);
}

TEST_CASE("recursive list positions ground through the chase") {
  GroundingConfig cfg;
  cfg.term_depth = 4;
  cfg.li_max_depth = 3;
  GroundSpace s = ground(
      "edge(a,b). edge(b,a). edge(b,c).\n"
      "path(A,A,[]).\n"
      "path(A,C,[edge(A,B)|P]) :- edge(A,B), path(B,C,P).",
      "depth", cfg);

  // The two-hop instance exists even though lists are not pool-typed.
  CHECK(s.table.find(parse_term("clause(path(a,c,[edge(a,b),edge(b,c)]),"
                                "(edge(a,b),path(b,c,[edge(b,c)])))"))
            .has_value());
  CHECK(s.table.find(parse_term("li(path(a,c,[edge(a,b),edge(b,c)]),3)")).has_value());
}

TEST_CASE("seed values carry clause and fact weights") {
  GroundSpace s = ground("0.5: night. 0.9: sleep :- night. 0.8: light :- night.", "causal");
  auto seed_of = [&](const std::string& text) {
    int idx = s.table.find(parse_term(text)).value();
    for (const SeedValue& v : s.seeds)
      if (v.index == idx) return v.value;
    return -1.0;
  };
  CHECK(seed_of("assert_probs(night)") == doctest::Approx(0.5));
  CHECK(seed_of("assert_probs((sleep:-night))") == doctest::Approx(0.9));
  CHECK(seed_of("assert_probs((light:-night))") == doctest::Approx(0.8));
}
