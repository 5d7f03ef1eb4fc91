#ifndef NEMESYS_META_HPP
#define NEMESYS_META_HPP

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "nemesys/program.hpp"
#include "nemesys/term.hpp"

namespace nemesys {

// Object program reified as meta-level facts: every clause H :- B1,..,Bn
// becomes a weighted clause(H, (B1,(..,Bn))) fact, every object fact F a
// clause(F, true) fact.
struct MetaFactSet {
  std::vector<Clause> clause_facts;                // clause/2 meta-facts
  std::vector<std::pair<Term, double>> fact_weights;  // reified fact -> weight
};

MetaFactSet lift_program(const Program& p);
// Inverse of lift_program up to clause order; used to check losslessness.
Program unlift(const MetaFactSet& mfs);

// Grounding guard for a meta-predicate argument position.
enum class ArgSort {
  Free,     // anything the closure produces (proof terms, stacks)
  Atomish,  // ground object atoms or `true`
  Conjish,  // Atomish plus reified body conjunctions
  Nat,      // peano numerals up to the term-depth bound
};

// Families of initial-valuation entries the converter contributes for a
// given interpreter, besides the lifted clause/2 facts.
enum class SeedKind {
  ClauseFacts,  // clause/2 ground instances, weighted
  SolveTrue,    // solve(true) = 1
  ProofBase,    // solve(F,(F:-true)) = fact weight
  AssertProbs,  // assert_probs leaves from clause/fact weights
  ProbsFacts,   // probs(F) = fact weight (pools without the probs bridge)
  LiTrue,       // li(true,d) = 1 for every depth in range
  PlanBase,     // plan(start,start,goal,[]) = 1
  DoSites,      // do(site) = intervention value, trainable
};

struct MetaProgram {
  std::string name;
  std::vector<Clause> rules;
  std::set<std::string> builtins;  // reserved predicate names
  std::map<std::pair<std::string, int>, std::vector<ArgSort>> sorts;
  std::set<SeedKind> seeds;
  std::string text;  // canonical listing; byte-stable against the golden files

  std::vector<ArgSort> sorts_for(const std::string& pred, int arity) const;
};

// One of the built-in interpreters (naive, prooftree, lrp2, depth,
// planner, causal, multitask) or a path to a user meta-program file.
MetaProgram load_interpreter(const std::string& name_or_path);

const std::vector<std::string>& builtin_interpreter_names();

// Reserved predicates with engine-provided semantics.
bool is_reserved_predicate(const std::string& name);

struct GoalOptions {
  int max_depth = 3;                  // depth interpreter budget
  std::optional<Term> do_site;        // causal intervention site
};

// Meta-level query atoms to read out after inference for `goal`.
std::vector<Atom> make_goal_atoms(const Atom& goal, const MetaProgram& mp,
                                  const GoalOptions& opts = {});

}  // namespace nemesys

#endif
