#include "nemesys/builtins.hpp"

#include <algorithm>
#include <stdexcept>

namespace nemesys {

namespace {

bool in_grid(const Term& state, const PlannerGrid& grid) {
  if (!state.is_compound() || state.name() != grid.axis_pred || state.arity() != 2)
    return false;
  auto n = state.args()[1].peano_value();
  return n && *n >= grid.min_pos && *n <= grid.max_pos;
}

void push_if(std::vector<BuiltinBinding>& out, const Atom& goal, const Substitution& s,
             const std::vector<Term>& ground_args, double value) {
  Substitution cur = s;
  for (size_t i = 0; i < ground_args.size(); ++i) {
    auto next = unify(goal.args[i], ground_args[i], cur);
    if (!next) return;
    cur = *next;
  }
  out.push_back({std::move(cur), value});
}

// norelate(B,A): epsilon-valued leaf for every distinct ground pair.
std::vector<BuiltinBinding> eval_norelate(const Atom& goal, const Substitution& s,
                                          const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  Term b = s.apply(goal.args[0]);
  Term a = s.apply(goal.args[1]);
  std::vector<Term> b_candidates;
  if (b.is_ground()) {
    b_candidates.push_back(b);
  } else {
    if (ctx.conj_pool) b_candidates.insert(b_candidates.end(), ctx.conj_pool->begin(), ctx.conj_pool->end());
    if (ctx.object_atoms)
      b_candidates.insert(b_candidates.end(), ctx.object_atoms->begin(), ctx.object_atoms->end());
    b_candidates.push_back(Term::constant("true"));
  }
  std::vector<Term> a_candidates;
  if (a.is_ground()) {
    a_candidates.push_back(a);
  } else if (ctx.object_atoms) {
    a_candidates = *ctx.object_atoms;
  }
  for (const Term& bc : b_candidates)
    for (const Term& ac : a_candidates)
      if (!(bc == ac)) push_if(out, goal, s, {bc, ac}, ctx.norelate_epsilon);
  return out;
}

std::vector<BuiltinBinding> eval_distinct(const Atom& goal, const Substitution& s,
                                          const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  Term x = s.apply(goal.args[0]);
  Term y = s.apply(goal.args[1]);
  std::vector<Term> y_candidates;
  if (y.is_ground()) {
    y_candidates.push_back(y);
  } else {
    y_candidates = ctx.do_sites;
  }
  if (!x.is_ground()) return out;  // first argument must be bound
  for (const Term& yc : y_candidates)
    if (!(x == yc)) push_if(out, goal, s, {x, yc}, 1.0);
  return out;
}

// unaffected(Atom, DoSite): the atom is neither the intervention site
// nor one of its descendants in the clause dependency graph.
std::vector<BuiltinBinding> eval_unaffected(const Atom& goal, const Substitution& s,
                                            const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  Term x = s.apply(goal.args[0]);
  Term site = s.apply(goal.args[1]);
  if (!x.is_ground()) return out;
  std::vector<Term> sites;
  if (site.is_ground()) {
    sites.push_back(site);
  } else {
    sites = ctx.do_sites;
  }
  for (const Term& sc : sites) {
    if (x == sc) continue;
    if (ctx.do_descendants) {
      auto it = ctx.do_descendants->find(sc);
      if (it != ctx.do_descendants->end() &&
          std::find(it->second.begin(), it->second.end(), x) != it->second.end())
        continue;
    }
    push_if(out, goal, s, {x, sc}, 1.0);
  }
  return out;
}

std::vector<BuiltinBinding> eval_equal(const Atom& goal, const Substitution& s) {
  std::vector<BuiltinBinding> out;
  Term x = s.apply(goal.args[0]);
  Term y = s.apply(goal.args[1]);
  if (!x.is_ground() && !y.is_ground()) return out;
  if (auto u = unify(x, y, s)) {
    Term gx = u->apply(x);
    if (gx.is_ground()) out.push_back({*u, 1.0});
  }
  return out;
}

// move(Action, Old, New): unit step along the configured axis.
std::vector<BuiltinBinding> eval_move(const Atom& goal, const Substitution& s,
                                      const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  if (!ctx.grid) return out;
  const PlannerGrid& grid = *ctx.grid;
  Term old_state = s.apply(goal.args[1]);

  std::vector<Term> olds;
  if (old_state.is_ground()) {
    if (!in_grid(old_state, grid)) return out;
    olds.push_back(old_state);
  } else {
    Term obj;
    if (old_state.is_compound() && old_state.name() == grid.axis_pred &&
        old_state.arity() == 2 && old_state.args()[0].is_ground()) {
      obj = old_state.args()[0];
    } else {
      return out;  // object id must be known
    }
    for (int x = grid.min_pos; x <= grid.max_pos; ++x)
      olds.push_back(Term::compound(grid.axis_pred, {obj, Term::peano(x)}));
  }

  const char* inc = grid.horizontal ? "move_right" : "move_up";
  const char* dec = grid.horizontal ? "move_left" : "move_down";
  for (const Term& o : olds) {
    Term obj = o.args()[0];
    int x = *o.args()[1].peano_value();
    if (x + 1 <= grid.max_pos)
      push_if(out, goal, s,
              {Term::constant(inc), o, Term::compound(grid.axis_pred, {obj, Term::peano(x + 1)})},
              1.0);
    if (x - 1 >= grid.min_pos)
      push_if(out, goal, s,
              {Term::constant(dec), o, Term::compound(grid.axis_pred, {obj, Term::peano(x - 1)})},
              1.0);
  }
  return out;
}

// condition_met(Old, Current): precondition gate, Current == Old and the
// state lies inside the grid. Binds whichever side is still free.
std::vector<BuiltinBinding> eval_condition_met(const Atom& goal, const Substitution& s,
                                               const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  Term state = s.apply(goal.args[0]);
  if (!state.is_ground()) state = s.apply(goal.args[1]);
  if (!state.is_ground()) return out;
  if (ctx.grid && !in_grid(state, *ctx.grid)) return out;
  push_if(out, goal, s, {state, state}, 1.0);
  return out;
}

// change_state(Current, New): transition gate, the new state must be a
// valid grid state.
std::vector<BuiltinBinding> eval_change_state(const Atom& goal, const Substitution& s,
                                              const BuiltinContext& ctx) {
  std::vector<BuiltinBinding> out;
  Term cur = s.apply(goal.args[0]);
  Term next = s.apply(goal.args[1]);
  if (!cur.is_ground() || !next.is_ground()) return out;
  if (ctx.grid && (!in_grid(cur, *ctx.grid) || !in_grid(next, *ctx.grid))) return out;
  push_if(out, goal, s, {cur, next}, 1.0);
  return out;
}

}  // namespace

bool is_constraint_builtin(const std::string& pred, int arity) {
  return (pred == "norelate" && arity == 2) || (pred == "distinct" && arity == 2) ||
         (pred == "unaffected" && arity == 2) || (pred == "equal" && arity == 2) ||
         (pred == "move" && arity == 3) || (pred == "condition_met" && arity == 2) ||
         (pred == "change_state" && arity == 2);
}

std::vector<BuiltinBinding> eval_builtin(const Atom& goal, const Substitution& subst,
                                         const BuiltinContext& ctx) {
  if (goal.pred == "norelate") return eval_norelate(goal, subst, ctx);
  if (goal.pred == "distinct") return eval_distinct(goal, subst, ctx);
  if (goal.pred == "unaffected") return eval_unaffected(goal, subst, ctx);
  if (goal.pred == "equal") return eval_equal(goal, subst);
  if (goal.pred == "move") return eval_move(goal, subst, ctx);
  if (goal.pred == "condition_met") return eval_condition_met(goal, subst, ctx);
  if (goal.pred == "change_state") return eval_change_state(goal, subst, ctx);
  throw std::runtime_error("not a constraint builtin: " + goal.pred);
}

}  // namespace nemesys
