#ifndef NEMESYS_BUILTINS_HPP
#define NEMESYS_BUILTINS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nemesys/term.hpp"

namespace nemesys {

// Per-axis grid view used by the planner builtins: states are
// axis_pred(Object, X) with peano X in [min_pos, max_pos].
struct PlannerGrid {
  std::string axis_pred = "pos_hori";
  bool horizontal = true;
  int min_pos = 1;
  int max_pos = 5;
};

// Pools and parameters the constraint builtins enumerate against.
struct BuiltinContext {
  const std::vector<Term>* object_atoms = nullptr;  // ground object atoms
  const std::vector<Term>* conj_pool = nullptr;     // reified conjunction terms
  std::vector<Term> do_sites;
  // Per do-site descendant closure over the clause dependency graph;
  // null means permissive (tensor building validates against the table).
  const std::map<Term, std::vector<Term>>* do_descendants = nullptr;
  std::optional<PlannerGrid> grid;
  double norelate_epsilon = 0.01;
};

struct BuiltinBinding {
  Substitution subst;
  double value = 1.0;
};

// True for predicates the grounder satisfies itself instead of joining
// against derived atoms: norelate/2, distinct/2, unaffected/2, equal/2,
// move/3, condition_met/2, change_state/2.
bool is_constraint_builtin(const std::string& pred, int arity);

// Enumerate satisfying ground extensions of `goal` under `subst`. The
// returned bindings ground every variable of the goal; `value` is the
// leaf valuation the satisfied instance carries.
std::vector<BuiltinBinding> eval_builtin(const Atom& goal, const Substitution& subst,
                                         const BuiltinContext& ctx);

}  // namespace nemesys

#endif
