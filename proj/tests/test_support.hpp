#ifndef NEMESYS_TEST_SUPPORT_HPP
#define NEMESYS_TEST_SUPPORT_HPP

#include <algorithm>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "nemesys/parser.hpp"
#include "nemesys/program.hpp"
#include "nemesys/term.hpp"

namespace nemesys::test {

// Random ground-ish term generator for property tests.
inline Term random_term(std::mt19937& rng, int max_depth, bool allow_vars = true) {
  std::uniform_int_distribution<int> pick(0, 9);
  std::uniform_int_distribution<int> nargs(1, 2);
  int r = pick(rng);
  if (max_depth <= 0 || r < 4) {
    static const char* consts[] = {"a", "b", "c", "d"};
    return Term::constant(consts[pick(rng) % 4]);
  }
  if (allow_vars && r < 6) {
    static const char* vars[] = {"X", "Y", "Z"};
    return Term::variable(vars[pick(rng) % 3]);
  }
  static const char* funcs[] = {"f", "g", "h"};
  int n = nargs(rng);
  std::vector<Term> args;
  for (int i = 0; i < n; ++i) args.push_back(random_term(rng, max_depth - 1, allow_vars));
  return Term::compound(funcs[pick(rng) % 3], std::move(args));
}

// Independent boolean forward chainer over object-level programs. Used
// as the reference for derivable-set comparisons; it never touches the
// tensor pipeline.
class BoolChainer {
 public:
  explicit BoolChainer(const Program& program) : program_(program) {}

  // Fixpoint of the immediate-consequence operator from the weighted
  // facts (weight > 0 counts as present), bounded by `max_rounds`.
  std::set<std::string> derive(int max_rounds = 64) const {
    std::set<std::string> known;
    std::vector<Term> known_terms;
    for (const Clause& c : program_.clauses) {
      if (c.is_fact() && c.weight > 0.0 && c.head.is_ground()) {
        if (known.insert(render(c.head)).second) known_terms.push_back(c.head.to_term());
      }
    }
    for (int round = 0; round < max_rounds; ++round) {
      bool changed = false;
      for (const Clause& c : program_.clauses) {
        if (c.is_fact()) continue;
        std::vector<Substitution> partial{Substitution{}};
        for (const Atom& b : c.body) {
          std::vector<Substitution> next;
          for (const Substitution& s : partial) {
            for (const Term& k : known_terms) {
              if (auto s2 = unify(b.to_term(), k, s)) next.push_back(*s2);
            }
          }
          partial = std::move(next);
          if (partial.empty()) break;
        }
        for (const Substitution& s : partial) {
          Atom h = s.apply(c.head);
          if (!h.is_ground()) continue;
          if (known.insert(render(h)).second) {
            known_terms.push_back(h.to_term());
            changed = true;
          }
        }
      }
      if (!changed) break;
    }
    return known;
  }

 private:
  const Program& program_;
};

// Random small object programs: flat constants, a few predicates, a few
// clauses. Shapes are constrained so the typed ground space stays small
// (at most a few dozen ground atoms).
inline Program random_program(std::mt19937& rng, bool boolean_weights = true) {
  std::uniform_int_distribution<int> pick(0, 1000000);
  auto choice = [&](int n) { return pick(rng) % n; };

  int nconsts = 2 + choice(2);                   // 2..3 constants
  std::vector<std::string> consts;
  for (int i = 0; i < nconsts; ++i) consts.push_back(std::string(1, char('a' + i)));

  struct Pred {
    std::string name;
    int arity;
  };
  std::vector<Pred> preds;
  int npreds = 2 + choice(2);                    // 2..3 predicates
  for (int i = 0; i < npreds; ++i)
    preds.push_back({"p" + std::to_string(i), 1 + choice(2)});

  std::string text;
  int nfacts = 1 + choice(3);
  for (int i = 0; i < nfacts; ++i) {
    const Pred& p = preds[choice(npreds)];
    std::string fact = p.name + "(";
    for (int k = 0; k < p.arity; ++k) {
      if (k) fact += ",";
      fact += consts[choice(nconsts)];
    }
    fact += ")";
    if (boolean_weights) {
      text += fact + ".\n";
    } else {
      double w = 0.1 + 0.8 * (pick(rng) % 1000) / 1000.0;
      text += std::to_string(w) + ": " + fact + ".\n";
    }
  }

  // Safe rules only: every head variable occurs in the body.
  int nrules = 1 + choice(4) % 3;                // 1..3 rules
  static const char* vars[] = {"X", "Y"};
  for (int i = 0; i < nrules; ++i) {
    std::string body;
    std::set<std::string> body_vars;
    int nbody = 1 + choice(2);
    for (int b = 0; b < nbody; ++b) {
      if (b) body += ", ";
      const Pred& p = preds[choice(npreds)];
      body += p.name + "(";
      for (int k = 0; k < p.arity; ++k) {
        if (k) body += ",";
        const char* v = vars[choice(2)];
        body_vars.insert(v);
        body += v;
      }
      body += ")";
    }
    std::vector<std::string> bound(body_vars.begin(), body_vars.end());
    const Pred& h = preds[choice(npreds)];
    std::string rule = h.name + "(";
    for (int k = 0; k < h.arity; ++k) {
      if (k) rule += ",";
      rule += bound[choice(static_cast<int>(bound.size()))];
    }
    rule += ") :- " + body;
    if (!boolean_weights) {
      double w = 0.5 + 0.5 * (pick(rng) % 1000) / 1000.0;
      rule = std::to_string(w) + ": " + rule;
    }
    text += rule + ".\n";
  }
  return parse_program(text);
}

}  // namespace nemesys::test

#endif
