#include "nemesys/meta.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nemesys/parser.hpp"

namespace nemesys {

MetaFactSet lift_program(const Program& p) {
  MetaFactSet out;
  for (const Clause& c : p.clauses) {
    Clause meta;
    meta.weight = c.weight;
    meta.head = Atom("clause", {c.head.to_term(), c.body_term()});
    out.clause_facts.push_back(std::move(meta));
    if (c.is_fact()) out.fact_weights.push_back({c.head.to_term(), c.weight});
  }
  return out;
}

Program unlift(const MetaFactSet& mfs) {
  Program p;
  for (const Clause& meta : mfs.clause_facts) {
    if (meta.head.pred != "clause" || meta.head.arity() != 2)
      throw std::runtime_error("not a clause/2 meta-fact: " + render(meta.head));
    Clause c;
    c.weight = meta.weight;
    c.head = Atom::from_term(meta.head.args[0]);
    Term body = meta.head.args[1];
    while (body.is_pair()) {
      c.body.push_back(Atom::from_term(body.args()[0]));
      body = body.args()[1];
    }
    if (!(body.is_constant() && body.name() == "true"))
      c.body.push_back(Atom::from_term(body));
    p.clauses.push_back(std::move(c));
  }
  p.finalize();
  return p;
}

namespace {

// Canonical listings for the built-in interpreters. These are pinned by
// golden files under tests/golden; edit both together.
const char* kNaiveText =
    "solve(true).\n"
    "solve((A,B)) :- solve(A), solve(B).\n"
    "solve(A) :- clause(A,B), solve(B).\n";

const char* kProofTreeText =
    "solve(A,(A:-true)).\n"
    "solve((A,B),(ProofA,ProofB)) :- solve(A,ProofA), solve(B,ProofB).\n"
    "solve(A,(A:-ProofB)) :- clause(A,B), solve(B,ProofB).\n";

const char* kLrp2Text =
    "rp(Goal,Body,Atom) :- assert_probs((Goal:-Body)), assert_probs(Body), rpf(Body,Atom).\n"
    "rpf((Atom,Tail),Atom) :- assert_probs(Atom).\n"
    "rpf((Head,Tail),Atom) :- rpf(Tail,Atom).\n"
    "rpf((Head,Tail),Atom) :- clause(Head,Body), rpf(Body,Atom).\n"
    "rpf((Head,Tail),Atom) :- clause(Head,Body), rpf(Tail,Atom).\n"
    "rpf(Atom,Atom) :- assert_probs(Atom).\n"
    "rpf(AtomB,Atom) :- norelate(AtomB,Atom).\n"
    "rp(Goal,(Proof,Proofs),Atom) :- rp(Goal,Proof,Atom).\n"
    "rp(Goal,(Proof,Proofs),Atom) :- rp(Goal,Proofs,Atom).\n";

const char* kDepthText =
    "li((A,B),Dpt) :- li(A,Dpt), li(B,Dpt).\n"
    "li(A,succ(Dpt)) :- clause(A,B), li(B,Dpt).\n";

const char* kPlannerText =
    "plan(Start,New,Goal,[Action|Stack]) :- move(Action,Old,New), "
    "condition_met(Old,Current), change_state(Current,New), plan(Start,Current,Goal,Stack).\n"
    "planf(Start,Goal,Stack) :- plan(Start,Current,Goal,Stack), equal(Current,Goal).\n";

const char* kCausalText =
    "prob(Head) :- assert_probs((Head:-Body)), probs(Body).\n"
    "probs((Atom,Tail)) :- prob(Atom), probs(Tail).\n"
    "prob(Atom) :- assert_probs(Atom).\n"
    "probs(Atom) :- prob(Atom).\n"
    "probs_do(Atom,Atom) :- do(Atom).\n"
    "probs_do(Head,Atom) :- assert_probs((Head:-Body)), probs_do(Body,Atom), "
    "distinct(Head,Atom).\n"
    "probs_do((Head,Tail),Atom) :- probs_do(Head,Atom), probs_do(Tail,Atom).\n"
    "probs_do((Head,Tail),Head) :- probs_do(Head,Head), probs(Tail).\n"
    "probs_do(Atom,DoAtom) :- prob(Atom), unaffected(Atom,DoAtom).\n";

// Candidate pool for meta-structure learning: the naive and proof-tree
// pairs plus the three probability rules.
const char* kMultitaskText =
    "solve((A,B)) :- solve(A), solve(B).\n"
    "solve(A) :- clause(A,B), solve(B).\n"
    "solve((A,B),(ProofA,ProofB)) :- solve(A,ProofA), solve(B,ProofB).\n"
    "solve(A,(A:-ProofB)) :- clause(A,B), solve(B,ProofB).\n"
    "prob(Head) :- assert_probs((Head:-Body)), probs(Body).\n"
    "probs((Atom,Tail)) :- prob(Atom), probs(Tail).\n"
    "prob(Atom) :- assert_probs(Atom).\n";

const std::set<std::string> kReserved = {
    "clause", "solve",    "rp",   "rpf",   "assert_probs", "norelate",
    "do",     "distinct", "unaffected", "prob", "probs", "probs_do", "li",
    "plan",   "planf",    "move", "equal", "condition_met", "change_state"};

MetaProgram make(const std::string& name, const char* text,
                 std::set<std::string> builtins, std::set<SeedKind> seeds,
                 std::map<std::pair<std::string, int>, std::vector<ArgSort>> sorts) {
  MetaProgram mp;
  mp.name = name;
  mp.text = text;
  mp.builtins = std::move(builtins);
  mp.seeds = std::move(seeds);
  mp.sorts = std::move(sorts);
  Program parsed = parse_program(text);
  mp.rules = parsed.clauses;
  return mp;
}

MetaProgram build_interpreter(const std::string& name) {
  using S = ArgSort;
  if (name == "naive") {
    return make("naive", kNaiveText, {"clause"},
                {SeedKind::ClauseFacts, SeedKind::SolveTrue},
                {{{"solve", 1}, {S::Conjish}}});
  }
  if (name == "prooftree") {
    return make("prooftree", kProofTreeText, {"clause"},
                {SeedKind::ClauseFacts, SeedKind::ProofBase},
                {{{"solve", 2}, {S::Conjish, S::Free}}});
  }
  if (name == "lrp2") {
    return make("lrp2", kLrp2Text, {"clause", "assert_probs", "norelate"},
                {SeedKind::ClauseFacts, SeedKind::AssertProbs},
                {{{"rp", 3}, {S::Atomish, S::Conjish, S::Atomish}},
                 {{"rpf", 2}, {S::Conjish, S::Atomish}}});
  }
  if (name == "depth") {
    return make("depth", kDepthText, {"clause"},
                {SeedKind::ClauseFacts, SeedKind::LiTrue},
                {{{"li", 2}, {S::Conjish, S::Nat}}});
  }
  if (name == "planner") {
    return make("planner", kPlannerText,
                {"move", "equal", "condition_met", "change_state"},
                {SeedKind::PlanBase}, {});
  }
  if (name == "causal") {
    return make("causal", kCausalText,
                {"assert_probs", "do", "distinct", "unaffected"},
                {SeedKind::AssertProbs, SeedKind::DoSites},
                {{{"prob", 1}, {S::Atomish}},
                 {{"probs", 1}, {S::Conjish}},
                 {{"probs_do", 2}, {S::Conjish, S::Atomish}}});
  }
  if (name == "multitask") {
    return make("multitask", kMultitaskText, {"clause", "assert_probs"},
                {SeedKind::ClauseFacts, SeedKind::SolveTrue, SeedKind::ProofBase,
                 SeedKind::AssertProbs, SeedKind::ProbsFacts},
                {{{"solve", 1}, {S::Conjish}},
                 {{"solve", 2}, {S::Conjish, S::Free}},
                 {{"prob", 1}, {S::Atomish}},
                 {{"probs", 1}, {S::Conjish}}});
  }
  throw std::runtime_error("unknown interpreter: " + name);
}

}  // namespace

std::vector<ArgSort> MetaProgram::sorts_for(const std::string& pred, int arity) const {
  auto it = sorts.find({pred, arity});
  if (it != sorts.end()) return it->second;
  return std::vector<ArgSort>(arity, ArgSort::Free);
}

const std::vector<std::string>& builtin_interpreter_names() {
  static const std::vector<std::string> names = {
      "naive", "prooftree", "lrp2", "depth", "planner", "causal", "multitask"};
  return names;
}

bool is_reserved_predicate(const std::string& name) { return kReserved.count(name) > 0; }

MetaProgram load_interpreter(const std::string& name_or_path) {
  for (const std::string& n : builtin_interpreter_names())
    if (n == name_or_path) return build_interpreter(n);

  std::ifstream in(name_or_path);
  if (!in) throw std::runtime_error("unknown interpreter name: " + name_or_path);
  std::ostringstream buf;
  buf << in.rdbuf();
  MetaProgram mp;
  mp.name = name_or_path;
  mp.text = buf.str();
  Program parsed = parse_program(mp.text);
  mp.rules = parsed.clauses;
  mp.builtins = {"clause"};
  mp.seeds = {SeedKind::ClauseFacts, SeedKind::SolveTrue};
  return mp;
}

std::vector<Atom> make_goal_atoms(const Atom& goal, const MetaProgram& mp,
                                  const GoalOptions& opts) {
  Term g = goal.to_term();
  if (mp.name == "prooftree") return {Atom("solve", {g, Term::variable("Proof")})};
  if (mp.name == "lrp2")
    return {Atom("rp", {g, Term::variable("Proof"), Term::variable("Atom")})};
  if (mp.name == "depth") return {Atom("li", {g, Term::peano(opts.max_depth)})};
  if (mp.name == "causal") {
    std::vector<Atom> out{Atom("prob", {g})};
    if (opts.do_site) out.push_back(Atom("probs_do", {g, *opts.do_site}));
    return out;
  }
  if (mp.name == "planner")
    return {Atom("planf", {Term::variable("Start"), Term::variable("Goal"),
                           Term::variable("Stack")})};
  return {Atom("solve", {g})};
}

}  // namespace nemesys
