#ifndef NEMESYS_GROUNDER_HPP
#define NEMESYS_GROUNDER_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "nemesys/builtins.hpp"
#include "nemesys/meta.hpp"
#include "nemesys/program.hpp"
#include "nemesys/term.hpp"

namespace nemesys {

struct GroundingConfig {
  // Max functor nesting admitted for any argument of a derived atom;
  // also closes peano datatype pools.
  int term_depth = 10;
  // Rewrite budget for both the object-level chase and the meta closure.
  int max_rounds = 30;
  // Explosion guard; NEMESYS_MAX_GROUND_ATOMS overrides via the CLI.
  long max_ground_atoms = 20000;
  long max_pool_per_predicate = 5000;
  long max_clause_instances = 1000;  // typed enumeration; the chase covers the rest
  // 0 means computed from the grounding.
  int s_cap = 0;
  int l_cap = 0;
  double norelate_epsilon = 0.01;
  int li_max_depth = 3;
  std::vector<Term> do_sites;
  std::map<Term, double> do_values;  // default 0.5 when absent
  std::optional<PlannerGrid> grid;
  std::optional<std::pair<Term, Term>> plan_endpoints;  // start/goal state
};

class GroundingError : public std::runtime_error {
 public:
  explicit GroundingError(const std::string& what) : std::runtime_error(what) {}
};

// Ordered Herbrand base with reserved entries: index 0 is the constant
// true atom, index 1 the constant false atom. Both are unparseable
// names, so user atoms can never collide.
class GroundAtomTable {
 public:
  static constexpr int kTop = 0;
  static constexpr int kBot = 1;

  GroundAtomTable();

  int add(const Term& atom);  // returns the existing index if present
  std::optional<int> find(const Term& atom) const;
  const Term& atom(int index) const { return atoms_[index]; }
  int size() const { return static_cast<int>(atoms_.size()); }
  const std::vector<Term>& atoms() const { return atoms_; }

  static Term top_atom();
  static Term bot_atom();

 private:
  std::vector<Term> atoms_;
  std::unordered_map<Term, int, TermHash> index_;
};

// Per-rule integer tensor of body-atom indices: entry (j,k,l) is the
// index of the l-th subgoal deriving atom j under the k-th substitution.
// Dead rows point at the false atom, body padding at the true atom.
struct IndexTensor {
  int rule_id = 0;
  int num_atoms = 0;  // G
  int num_subst = 0;  // S
  int body_len = 0;   // L
  std::vector<int32_t> data;

  int32_t at(int j, int k, int l) const {
    return data[(static_cast<size_t>(j) * num_subst + k) * body_len + l];
  }
  int32_t& at(int j, int k, int l) {
    return data[(static_cast<size_t>(j) * num_subst + k) * body_len + l];
  }
};

struct SeedValue {
  int index = 0;
  Term atom;
  double value = 0.0;
  bool trainable = false;  // do-site leaves
};

struct GroundingReport {
  int object_atoms = 0;
  int ground_atoms = 0;
  int closure_rounds = 0;
  int clause_instances = 0;
  int dropped_depth = 0;
  int dropped_sort = 0;
  int max_substitutions = 0;
  int max_body_len = 0;
  std::map<std::string, int> atoms_per_predicate;
};

struct GroundSpace {
  GroundAtomTable table;
  std::vector<Clause> tensor_rules;  // rules with bodies, listing order
  std::vector<IndexTensor> tensors;  // aligned with tensor_rules
  std::vector<SeedValue> seeds;
  GroundingReport report;
};

// Build the depth-bounded Herbrand base for `mp` over the lifted object
// program and compile every meta-rule into its index tensor.
GroundSpace build_ground_space(const MetaProgram& mp, const Program& object_program,
                               const MetaFactSet& lifted, const GroundingConfig& cfg);

// Groundings of one rule against a frozen table: (head index,
// body-index list) pairs with a stable order. Exposed for tests.
std::vector<std::pair<int, std::vector<int>>> ground_rule(const Clause& rule,
                                                          const GroundAtomTable& table,
                                                          const MetaProgram& mp,
                                                          const GroundingConfig& cfg);

}  // namespace nemesys

#endif
