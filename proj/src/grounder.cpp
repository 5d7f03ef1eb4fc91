#include "nemesys/grounder.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace nemesys {

GroundAtomTable::GroundAtomTable() {
  add(top_atom());
  add(bot_atom());
}

Term GroundAtomTable::top_atom() { return Term::constant("$true"); }
Term GroundAtomTable::bot_atom() { return Term::constant("$false"); }

int GroundAtomTable::add(const Term& atom) {
  auto it = index_.find(atom);
  if (it != index_.end()) return it->second;
  int idx = static_cast<int>(atoms_.size());
  atoms_.push_back(atom);
  index_.emplace(atom, idx);
  return idx;
}

std::optional<int> GroundAtomTable::find(const Term& atom) const {
  auto it = index_.find(atom);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string pred_key(const std::string& name, int arity) {
  return name + "/" + std::to_string(arity);
}

bool args_within_depth(const Term& atom, int bound) {
  for (const Term& a : atom.args())
    if (a.depth() > bound) return false;
  return true;
}

// Datatype pools, peano-closed: a pool made of peano numerals is closed
// under succ up to the term-depth bound.
std::map<std::string, std::vector<Term>> build_pools(const Program& p,
                                                     const GroundingConfig& cfg) {
  std::map<std::string, std::vector<Term>> pools;
  for (const DatatypeDecl& d : p.datatypes) {
    std::set<Term> pool(d.pool.begin(), d.pool.end());
    bool all_peano = !d.pool.empty();
    int max_seen = 0;
    for (const Term& t : d.pool) {
      auto n = t.peano_value();
      all_peano = all_peano && n.has_value();
      if (n) max_seen = std::max(max_seen, *n);
    }
    if (all_peano) {
      for (int n = max_seen + 1; n <= cfg.term_depth; ++n) pool.insert(Term::peano(n));
    }
    pools[d.name] = {pool.begin(), pool.end()};
  }
  return pools;
}

// Datatype of each variable in a clause, read off the declared positions
// it occupies. Unknown positions map to an empty pool name.
std::map<std::string, std::string> variable_types(const Clause& c, const Program& p) {
  std::map<std::string, std::string> types;
  auto scan = [&](const Atom& a) {
    const PredicateDecl* d = p.find_predicate(a.pred, a.arity());
    if (!d) return;
    for (int i = 0; i < a.arity(); ++i)
      if (a.args[i].is_variable() && !types.count(a.args[i].name()))
        types[a.args[i].name()] = d->datatypes[i];
  };
  scan(c.head);
  for (const Atom& b : c.body) scan(b);
  return types;
}

struct ObjectSpace {
  std::vector<Term> atoms;                 // ground object atoms, sorted
  std::vector<Clause> clause_instances;    // ground instances, deduped
  std::map<Term, double> fact_weights;
  std::vector<Term> conj_pool;             // pair terms: bodies, suffixes, proof lists
  int chase_rounds = 0;
};

void add_conj_chain(const Term& t, std::set<Term>& out) {
  const Term* cur = &t;
  while (cur->is_pair()) {
    out.insert(*cur);
    cur = &cur->args()[1];
  }
}

// Enumerate ground instances of `c` over flat datatype pools. Returns
// false (and enumerates nothing) if a variable has no usable pool or the
// instance count would exceed the per-predicate cap.
bool enumerate_instances(const Clause& c, const Program& p,
                         const std::map<std::string, std::vector<Term>>& pools,
                         const GroundingConfig& cfg, std::vector<Clause>& out) {
  auto types = variable_types(c, p);
  std::vector<std::string> vars;
  c.head.to_term().collect_variables(vars);
  for (const Atom& b : c.body) b.to_term().collect_variables(vars);

  long count = 1;
  std::vector<const std::vector<Term>*> var_pools;
  for (const std::string& v : vars) {
    auto ty = types.find(v);
    if (ty == types.end()) return false;
    auto pool = pools.find(ty->second);
    if (pool == pools.end() || pool->second.empty()) return false;
    var_pools.push_back(&pool->second);
    count *= static_cast<long>(pool->second.size());
    if (count > cfg.max_clause_instances) return false;
  }

  std::vector<size_t> pick(vars.size(), 0);
  while (true) {
    Substitution s;
    for (size_t i = 0; i < vars.size(); ++i) s.bind(vars[i], (*var_pools[i])[pick[i]]);
    Clause inst;
    inst.weight = c.weight;
    inst.head = s.apply(c.head);
    for (const Atom& b : c.body) inst.body.push_back(s.apply(b));
    out.push_back(std::move(inst));

    size_t i = 0;
    for (; i < pick.size(); ++i) {
      if (++pick[i] < var_pools[i]->size()) break;
      pick[i] = 0;
    }
    if (i == pick.size()) break;
    if (vars.empty()) break;
  }
  return true;
}

// Object-level bounded chase: derives the reachable ground atoms and the
// ground clause instances that fire along the way. This is what makes
// recursive term positions (path lists, stacks) finite and real.
ObjectSpace build_object_space(const Program& p, const GroundingConfig& cfg) {
  ObjectSpace os;
  auto pools = build_pools(p, cfg);

  std::set<Term> atom_set;       // full typed + derivable space (the table side)
  std::set<Term> derivable_set;  // chase joins run against these only
  std::set<std::pair<Term, Term>> instance_keys;
  std::vector<Clause> instances;

  auto add_instance = [&](const Clause& inst) {
    std::pair<Term, Term> key{inst.head.to_term(), inst.body_term()};
    if (instance_keys.insert(key).second) instances.push_back(inst);
  };

  // Typed enumeration of every clause; facts seed the chase.
  std::vector<Term> known;
  for (const Clause& c : p.clauses) {
    std::vector<Clause> inst;
    if (!enumerate_instances(c, p, pools, cfg, inst)) continue;
    for (Clause& i : inst) {
      if (!args_within_depth(i.head.to_term(), cfg.term_depth)) continue;
      add_instance(i);
      if (i.is_fact() && atom_set.insert(i.head.to_term()).second) {
        derivable_set.insert(i.head.to_term());
        known.push_back(i.head.to_term());
      }
    }
  }

  // Full typed atom space per predicate, so underivable atoms keep an
  // index (classification and learning read zeros off them).
  for (const PredicateDecl& d : p.predicates) {
    long count = 1;
    std::vector<const std::vector<Term>*> arg_pools;
    bool ok = true;
    for (const std::string& dt : d.datatypes) {
      auto pool = pools.find(dt);
      if (pool == pools.end() || pool->second.empty()) {
        ok = false;
        break;
      }
      arg_pools.push_back(&pool->second);
      count *= static_cast<long>(pool->second.size());
      if (count > cfg.max_pool_per_predicate) {
        ok = false;
        break;
      }
    }
    if (!ok) continue;
    std::vector<size_t> pick(d.arity, 0);
    while (true) {
      std::vector<Term> args;
      for (int i = 0; i < d.arity; ++i) args.push_back((*arg_pools[i])[pick[i]]);
      Term atom = Term::compound(d.name, std::move(args));
      if (args_within_depth(atom, cfg.term_depth)) atom_set.insert(atom);
      int i = 0;
      for (; i < d.arity; ++i) {
        if (++pick[i] < arg_pools[i]->size()) break;
        pick[i] = 0;
      }
      if (i == d.arity) break;
      if (d.arity == 0) break;
    }
  }

  // Chase rule firings to a bounded fixpoint.
  std::vector<const Clause*> rules = p.rules();
  for (int round = 0; round < cfg.max_rounds; ++round) {
    bool changed = false;
    for (const Clause* rc : rules) {
      Clause r = rename_variables(*rc, "#r");
      std::vector<Substitution> partial{Substitution{}};
      for (size_t bi = 0; bi < r.body.size(); ++bi) {
        std::vector<Substitution> next;
        for (const Substitution& s : partial) {
          Term goal = s.apply(r.body[bi]).to_term();
          for (const Term& k : known) {
            if (auto s2 = unify(goal, k, s)) next.push_back(*s2);
          }
        }
        partial = std::move(next);
        if (partial.empty()) break;
      }
      for (const Substitution& s : partial) {
        Atom head = s.apply(r.head);
        if (!head.is_ground()) continue;
        if (!args_within_depth(head.to_term(), cfg.term_depth)) continue;
        Clause inst;
        inst.weight = r.weight;
        inst.head = head;
        bool ok = true;
        for (const Atom& b : r.body) {
          Atom gb = s.apply(b);
          ok = ok && gb.is_ground();
          inst.body.push_back(gb);
        }
        if (!ok) continue;
        add_instance(inst);
        atom_set.insert(head.to_term());
        if (derivable_set.insert(head.to_term()).second) {
          known.push_back(head.to_term());
          changed = true;
        }
        if (static_cast<long>(derivable_set.size()) > cfg.max_ground_atoms)
          throw GroundingError("object atom space exceeds ceiling (" +
                               std::to_string(cfg.max_ground_atoms) + ")");
      }
    }
    os.chase_rounds = round + 1;
    if (!changed) break;
  }

  for (const Clause& inst : instances) {
    if (inst.is_fact()) {
      auto [it, fresh] = os.fact_weights.try_emplace(inst.head.to_term(), inst.weight);
      if (!fresh) it->second = std::max(it->second, inst.weight);
    }
  }

  // Stable order everywhere downstream.
  os.atoms.assign(atom_set.begin(), atom_set.end());
  std::sort(instances.begin(), instances.end(), [](const Clause& a, const Clause& b) {
    if (int c = a.head.to_term().compare(b.head.to_term()); c != 0) return c < 0;
    return a.body_term().compare(b.body_term()) < 0;
  });
  os.clause_instances = std::move(instances);

  std::set<Term> conj;
  std::map<Term, std::vector<Term>> bodies_by_head;
  for (const Clause& inst : os.clause_instances) {
    add_conj_chain(inst.body_term(), conj);
    bodies_by_head[inst.head.to_term()].push_back(inst.body_term());
  }
  // Multi-proof lists: right-nested pairs of every body deriving a head.
  for (auto& [head, bodies] : bodies_by_head) {
    if (bodies.size() < 2) continue;
    Term list = bodies.back();
    for (auto it = bodies.rbegin() + 1; it != bodies.rend(); ++it)
      list = Term::pair(*it, list);
    add_conj_chain(list, conj);
  }
  os.conj_pool.assign(conj.begin(), conj.end());
  return os;
}

struct WorkingSpace {
  GroundAtomTable table;
  std::map<std::string, std::vector<int>> by_pred;
  std::map<std::string, std::vector<int>> by_pred_arg0;  // pred/arity|arg0
  std::map<Term, SeedValue> seeds;
  BuiltinContext ctx;

  static std::string arg0_key(const Term& atom) {
    return pred_key(atom.name(), atom.arity()) + "|" + render(atom.args()[0]);
  }

  int insert(const Term& atom) {
    auto existing = table.find(atom);
    if (existing) return *existing;
    int idx = table.add(atom);
    by_pred[pred_key(atom.name(), atom.arity())].push_back(idx);
    if (atom.arity() > 0) by_pred_arg0[arg0_key(atom)].push_back(idx);
    return idx;
  }

  void seed(const Term& atom, double value, bool trainable = false) {
    insert(atom);
    auto it = seeds.find(atom);
    if (it == seeds.end()) {
      seeds.emplace(atom, SeedValue{0, atom, value, trainable});
    } else {
      it->second.value = std::max(it->second.value, value);
      it->second.trainable = it->second.trainable || trainable;
    }
  }
};

// Sort guard for one derived argument.
bool sort_admits(ArgSort sort, const Term& arg, const std::set<Term>& atomish,
                 const std::set<Term>& conjish, const GroundingConfig& cfg) {
  switch (sort) {
    case ArgSort::Free:
      return true;
    case ArgSort::Atomish:
      return atomish.count(arg) > 0;
    case ArgSort::Conjish:
      return atomish.count(arg) > 0 || conjish.count(arg) > 0;
    case ArgSort::Nat: {
      auto n = arg.peano_value();
      return n && *n <= cfg.term_depth;
    }
  }
  return false;
}

// Enumerates complete body bindings for a rule against the working
// table, routing constraint builtins through their satisfiers. The atom
// order is chosen greedily by boundness.
class Joiner {
 public:
  explicit Joiner(const WorkingSpace& ws) : ws_(ws) {}

  void join(const std::vector<Atom>& body, const Substitution& start,
            const std::function<void(const Substitution&)>& sink) {
    std::vector<bool> done(body.size(), false);
    descend(body, done, start, sink);
  }

 private:
  static int bound_count(const Atom& a, const Substitution& s) {
    int n = 0;
    for (const Term& t : a.args)
      if (s.apply(t).is_ground()) ++n;
    return n;
  }

  static bool builtin_ready(const Atom& a, const Substitution& s) {
    if (a.pred == "norelate") return true;
    auto ground = [&](int i) { return s.apply(a.args[i]).is_ground(); };
    if (a.pred == "distinct" || a.pred == "unaffected") return ground(0);
    if (a.pred == "equal" || a.pred == "condition_met") return ground(0) || ground(1);
    if (a.pred == "change_state") return ground(0) && ground(1);
    if (a.pred == "move") {
      Term old_state = s.apply(a.args[1]);
      if (old_state.is_ground()) return true;
      return old_state.is_compound() && old_state.arity() == 2 &&
             old_state.args()[0].is_ground();
    }
    return true;
  }

  void descend(const std::vector<Atom>& body, std::vector<bool>& done,
               const Substitution& s, const std::function<void(const Substitution&)>& sink) {
    int next = -1;
    int best = -1;
    for (size_t i = 0; i < body.size(); ++i) {
      if (done[i]) continue;
      bool builtin = is_constraint_builtin(body[i].pred, body[i].arity());
      if (builtin && !builtin_ready(body[i], s)) continue;
      int score = bound_count(body[i], s) * 2 + (builtin ? 0 : 1);
      if (score > best) {
        best = score;
        next = static_cast<int>(i);
      }
    }
    if (next < 0) {
      for (size_t i = 0; i < body.size(); ++i)
        if (!done[i]) return;  // only unready builtins left: dead branch
      sink(s);
      return;
    }

    const Atom& goal = body[next];
    done[next] = true;
    if (is_constraint_builtin(goal.pred, goal.arity())) {
      for (const BuiltinBinding& b : eval_builtin(goal, s, ws_.ctx))
        descend(body, done, b.subst, sink);
    } else {
      Term pattern = s.apply(goal).to_term();
      const std::vector<int>* candidates = nullptr;
      if (pattern.arity() > 0 && pattern.args()[0].is_ground()) {
        auto it = ws_.by_pred_arg0.find(WorkingSpace::arg0_key(pattern));
        candidates = it == ws_.by_pred_arg0.end() ? nullptr : &it->second;
      } else {
        auto it = ws_.by_pred.find(pred_key(goal.pred, goal.arity()));
        candidates = it == ws_.by_pred.end() ? nullptr : &it->second;
      }
      if (candidates) {
        for (int idx : *candidates) {
          if (auto s2 = unify(pattern, ws_.table.atom(idx), s)) descend(body, done, *s2, sink);
        }
      }
    }
    done[next] = false;
  }

  const WorkingSpace& ws_;
};

void add_seeds(WorkingSpace& ws, const MetaProgram& mp, const ObjectSpace& os,
               const GroundingConfig& cfg) {
  // An empty object program grounds to the reserved atoms alone; pure
  // interpreter constants would be dead weight.
  bool have_object = !os.clause_instances.empty();
  auto kind = [&](SeedKind k) { return have_object && mp.seeds.count(k) > 0; };

  if (kind(SeedKind::ClauseFacts)) {
    for (const Clause& inst : os.clause_instances) {
      Term meta = Term::compound("clause", {inst.head.to_term(), inst.body_term()});
      ws.seed(meta, inst.weight);
    }
  }
  if (kind(SeedKind::SolveTrue)) ws.seed(Term::compound("solve", {Term::constant("true")}), 1.0);
  if (kind(SeedKind::ProofBase)) {
    for (const auto& [fact, w] : os.fact_weights) {
      Term proof = Term::rule(fact, Term::constant("true"));
      ws.seed(Term::compound("solve", {fact, proof}), w);
    }
  }
  if (kind(SeedKind::AssertProbs)) {
    auto joint_weight = [&](const Term& body) {
      double w = 1.0;
      const Term* cur = &body;
      while (cur->is_pair()) {
        auto it = os.fact_weights.find(cur->args()[0]);
        if (it == os.fact_weights.end()) return 0.0;
        w *= it->second;
        cur = &cur->args()[1];
      }
      auto it = os.fact_weights.find(*cur);
      return it == os.fact_weights.end() ? 0.0 : w * it->second;
    };
    ws.seed(Term::compound("assert_probs", {Term::constant("true")}), 1.0);
    for (const auto& [fact, w] : os.fact_weights) {
      if (w <= 0.0) continue;
      ws.seed(Term::compound("assert_probs", {fact}), w);
      ws.seed(Term::compound("assert_probs", {Term::rule(fact, Term::constant("true"))}), w);
    }
    for (const Clause& inst : os.clause_instances) {
      if (inst.is_fact()) continue;
      Term reified = Term::rule(inst.head.to_term(), inst.body_term());
      ws.seed(Term::compound("assert_probs", {reified}), inst.weight);
      double joint = joint_weight(inst.body_term());
      if (inst.body.size() >= 2 && joint > 0.0)
        ws.seed(Term::compound("assert_probs", {inst.body_term()}), joint);
    }
  }
  if (kind(SeedKind::ProbsFacts)) {
    for (const auto& [fact, w] : os.fact_weights)
      if (w > 0.0) ws.seed(Term::compound("probs", {fact}), w);
  }
  if (kind(SeedKind::LiTrue)) {
    for (int d = 0; d <= cfg.li_max_depth; ++d)
      ws.seed(Term::compound("li", {Term::constant("true"), Term::peano(d)}), 1.0);
  }
  // Endpoint- and intervention-driven seeds come from the config, not
  // the object program.
  if (mp.seeds.count(SeedKind::PlanBase) && cfg.plan_endpoints) {
    ws.seed(Term::compound("plan", {cfg.plan_endpoints->first, cfg.plan_endpoints->first,
                                    cfg.plan_endpoints->second, Term::constant("nil")}),
            1.0);
  }
  if (mp.seeds.count(SeedKind::DoSites)) {
    for (const Term& site : cfg.do_sites) {
      double v = 0.5;
      if (auto it = cfg.do_values.find(site); it != cfg.do_values.end()) v = it->second;
      ws.seed(Term::compound("do", {site}), v, true);
    }
  }
}

}  // namespace

std::vector<std::pair<int, std::vector<int>>> ground_rule(const Clause& rule,
                                                          const GroundAtomTable& table,
                                                          const MetaProgram& mp,
                                                          const GroundingConfig& cfg) {
  // Rebuild a working view over a frozen table; used by tests and by
  // tensor construction below.
  WorkingSpace ws;
  ws.table = table;
  for (int i = 0; i < table.size(); ++i) {
    const Term& a = table.atom(i);
    ws.by_pred[pred_key(a.name(), a.arity())].push_back(i);
    if (a.arity() > 0) ws.by_pred_arg0[WorkingSpace::arg0_key(a)].push_back(i);
  }
  std::vector<Term> object_atoms;  // unused by frozen-join builtins needing pools
  ws.ctx.object_atoms = &object_atoms;
  ws.ctx.conj_pool = nullptr;
  ws.ctx.norelate_epsilon = cfg.norelate_epsilon;
  ws.ctx.do_sites = cfg.do_sites;
  ws.ctx.grid = cfg.grid;

  std::vector<std::pair<int, std::vector<int>>> out;
  (void)mp;
  Clause r = rename_variables(rule, "#g");
  auto heads = ws.by_pred.find(pred_key(r.head.pred, r.head.arity()));
  if (heads == ws.by_pred.end()) return out;

  Joiner joiner(ws);
  for (int j : heads->second) {
    auto sh = unify(r.head.to_term(), table.atom(j), Substitution{});
    if (!sh) continue;
    std::set<std::vector<int>> rows;
    joiner.join(r.body, *sh, [&](const Substitution& s) {
      std::vector<int> row;
      for (const Atom& b : r.body) {
        Term g = s.apply(b).to_term();
        auto idx = table.find(g);
        if (!idx) return;
        row.push_back(*idx);
      }
      rows.insert(std::move(row));
    });
    for (const auto& row : rows) out.push_back({j, row});
  }
  return out;
}

namespace {

// Atoms whose derivations can pass through `site`: transitive heads over
// the ground clause instance graph. The intervention fallback rule must
// not fire for these.
std::map<Term, std::vector<Term>> descendant_closure(const ObjectSpace& os,
                                                     const std::vector<Term>& sites) {
  std::map<Term, std::vector<Term>> out;
  for (const Term& site : sites) {
    std::set<Term> reached{site};
    bool changed = true;
    while (changed) {
      changed = false;
      for (const Clause& inst : os.clause_instances) {
        if (inst.is_fact()) continue;
        if (reached.count(inst.head.to_term())) continue;
        for (const Atom& b : inst.body) {
          if (reached.count(b.to_term())) {
            reached.insert(inst.head.to_term());
            changed = true;
            break;
          }
        }
      }
    }
    reached.erase(site);
    out[site] = {reached.begin(), reached.end()};
  }
  return out;
}

}  // namespace

GroundSpace build_ground_space(const MetaProgram& mp, const Program& object_program,
                               const MetaFactSet& lifted, const GroundingConfig& cfg) {
  ObjectSpace os = build_object_space(object_program, cfg);
  std::map<Term, std::vector<Term>> descendants = descendant_closure(os, cfg.do_sites);

  WorkingSpace ws;
  ws.ctx.object_atoms = &os.atoms;
  ws.ctx.conj_pool = &os.conj_pool;
  ws.ctx.do_sites = cfg.do_sites;
  ws.ctx.do_descendants = &descendants;
  ws.ctx.grid = cfg.grid;
  ws.ctx.norelate_epsilon = cfg.norelate_epsilon;

  std::set<Term> atomish(os.atoms.begin(), os.atoms.end());
  atomish.insert(Term::constant("true"));
  std::set<Term> conjish(os.conj_pool.begin(), os.conj_pool.end());

  // Seeds are derived from the chased ground instances; the lifted
  // templates carry the same clauses with variables intact.
  (void)lifted;
  add_seeds(ws, mp, os, cfg);

  // Query space: interpreters built around solve/1 index the whole
  // object atom pool so underivable goals still read out as zero.
  if (mp.seeds.count(SeedKind::SolveTrue)) {
    for (const Term& a : os.atoms) ws.insert(Term::compound("solve", {a}));
  }

  GroundingReport report;
  report.object_atoms = static_cast<int>(os.atoms.size());
  report.clause_instances = static_cast<int>(os.clause_instances.size());

  // Pools for head-driven grounding and sort guards.
  std::vector<Term> atomish_pool(atomish.begin(), atomish.end());
  std::vector<Term> conjish_pool = atomish_pool;
  conjish_pool.insert(conjish_pool.end(), conjish.begin(), conjish.end());
  std::vector<Term> nat_pool;
  for (int n = 0; n <= cfg.term_depth; ++n) nat_pool.push_back(Term::peano(n));

  // A rule whose body variables all occur in the head is grounded
  // head-first over the sort pools: the body reduces to lookups, which
  // sidesteps the quadratic bottom-up join of pair-building rules.
  auto head_pools = [&](const Clause& rule) -> std::optional<std::vector<const std::vector<Term>*>> {
    std::vector<std::string> head_vars;
    rule.head.to_term().collect_variables(head_vars);
    std::vector<std::string> body_vars;
    for (const Atom& b : rule.body) b.to_term().collect_variables(body_vars);
    for (const std::string& v : body_vars)
      if (std::find(head_vars.begin(), head_vars.end(), v) == head_vars.end())
        return std::nullopt;
    auto sorts = mp.sorts_for(rule.head.pred, rule.head.arity());
    std::vector<const std::vector<Term>*> pools;
    long product = 1;
    for (int i = 0; i < rule.head.arity(); ++i) {
      if (rule.head.args[i].is_ground()) {
        pools.push_back(nullptr);
        continue;
      }
      switch (sorts[i]) {
        case ArgSort::Atomish: pools.push_back(&atomish_pool); break;
        case ArgSort::Conjish: pools.push_back(&conjish_pool); break;
        case ArgSort::Nat: pools.push_back(&nat_pool); break;
        case ArgSort::Free: return std::nullopt;
      }
      product *= static_cast<long>(pools.back()->size());
      if (product > 20000) return std::nullopt;
    }
    return pools;
  };

  // Meta-level closure to a bounded fixpoint.
  Joiner joiner(ws);
  int rounds = 0;
  for (int round = 0; round < cfg.max_rounds; ++round) {
    bool changed = false;
    for (size_t ri = 0; ri < mp.rules.size(); ++ri) {
      const Clause& rule0 = mp.rules[ri];
      if (rule0.body.empty()) continue;  // bases are converter seeds
      Clause rule = rename_variables(rule0, "#c" + std::to_string(ri));
      std::vector<std::pair<Term, std::vector<std::pair<Term, double>>>> found;
      auto pools = head_pools(rule);
      auto join_rule = [&](const std::function<void(const Substitution&)>& sink) {
        if (!pools) {
          joiner.join(rule.body, Substitution{}, sink);
          return;
        }
        std::function<void(int, const Substitution&)> bind_head =
            [&](int arg, const Substitution& s) {
              if (arg == rule.head.arity()) {
                joiner.join(rule.body, s, sink);
                return;
              }
              if (!(*pools)[arg]) {
                bind_head(arg + 1, s);
                return;
              }
              Term pattern = s.apply(rule.head.args[arg]);
              if (pattern.is_ground()) {
                bind_head(arg + 1, s);
                return;
              }
              for (const Term& candidate : *(*pools)[arg]) {
                if (auto s2 = unify(pattern, candidate, s)) bind_head(arg + 1, *s2);
              }
            };
        bind_head(0, Substitution{});
      };
      join_rule([&](const Substitution& s) {
        Atom head = s.apply(rule.head);
        if (!head.is_ground()) return;
        Term head_term = head.to_term();
        if (!args_within_depth(head_term, cfg.term_depth)) {
          ++report.dropped_depth;
          return;
        }
        auto sorts = mp.sorts_for(head.pred, head.arity());
        for (int i = 0; i < head.arity(); ++i) {
          if (!sort_admits(sorts[i], head.args[i], atomish, conjish, cfg)) {
            ++report.dropped_sort;
            return;
          }
        }
        std::vector<std::pair<Term, double>> leaves;
        for (const Atom& b : rule.body) {
          if (!is_constraint_builtin(b.pred, b.arity())) continue;
          Atom gb = s.apply(b);
          auto vals = eval_builtin(gb, Substitution{}, ws.ctx);
          if (vals.size() == 1) leaves.push_back({gb.to_term(), vals[0].value});
        }
        found.push_back({head_term, std::move(leaves)});
      });
      for (auto& [head_term, leaves] : found) {
        for (auto& [leaf, value] : leaves) ws.seed(leaf, value);
        int before = ws.table.size();
        ws.insert(head_term);
        changed = changed || ws.table.size() != before;
        if (static_cast<long>(ws.table.size()) > cfg.max_ground_atoms)
          throw GroundingError(
              "ground atom table exceeds ceiling (" + std::to_string(cfg.max_ground_atoms) +
              "); " + std::to_string(ws.table.size()) + " atoms so far");
      }
    }
    rounds = round + 1;
    if (!changed) break;
  }
  report.closure_rounds = rounds;

  // Freeze with a deterministic lexicographic order.
  std::vector<Term> user_atoms(ws.table.atoms().begin() + 2, ws.table.atoms().end());
  std::sort(user_atoms.begin(), user_atoms.end(),
            [](const Term& a, const Term& b) { return render(a) < render(b); });

  GroundSpace space;
  for (const Term& a : user_atoms) space.table.add(a);
  for (auto& [atom, seed] : ws.seeds) {
    SeedValue v = seed;
    v.index = *space.table.find(atom);
    space.seeds.push_back(v);
  }
  std::sort(space.seeds.begin(), space.seeds.end(),
            [](const SeedValue& a, const SeedValue& b) { return a.index < b.index; });

  report.ground_atoms = space.table.size();
  for (const Term& a : space.table.atoms())
    ++report.atoms_per_predicate[pred_key(a.name(), a.arity())];

  // Compile index tensors.
  int global_l = cfg.l_cap;
  for (const Clause& r : mp.rules)
    if (!r.body.empty()) global_l = std::max(global_l, static_cast<int>(r.body.size()));

  for (size_t ri = 0; ri < mp.rules.size(); ++ri) {
    const Clause& rule = mp.rules[ri];
    if (rule.body.empty()) continue;
    auto groundings = ground_rule(rule, space.table, mp, cfg);

    std::map<int, std::vector<std::vector<int>>> by_head;
    for (auto& [j, row] : groundings) by_head[j].push_back(row);

    int s_needed = 1;
    for (auto& [j, rows] : by_head) s_needed = std::max(s_needed, static_cast<int>(rows.size()));
    if (cfg.s_cap > 0 && s_needed > cfg.s_cap)
      throw GroundingError("substitution count " + std::to_string(s_needed) +
                           " exceeds configured S cap " + std::to_string(cfg.s_cap));
    int S = cfg.s_cap > 0 ? cfg.s_cap : s_needed;
    int L = std::max(global_l, static_cast<int>(rule.body.size()));

    IndexTensor tensor;
    tensor.rule_id = static_cast<int>(space.tensor_rules.size());
    tensor.num_atoms = space.table.size();
    tensor.num_subst = S;
    tensor.body_len = L;
    tensor.data.assign(static_cast<size_t>(space.table.size()) * S * L, GroundAtomTable::kBot);
    for (auto& [j, rows] : by_head) {
      for (size_t k = 0; k < rows.size(); ++k) {
        for (int l = 0; l < L; ++l)
          tensor.at(j, static_cast<int>(k), l) =
              l < static_cast<int>(rows[k].size()) ? rows[k][l] : GroundAtomTable::kTop;
      }
    }
    report.max_substitutions = std::max(report.max_substitutions, s_needed);
    report.max_body_len = std::max(report.max_body_len, L);
    space.tensor_rules.push_back(rule);
    space.tensors.push_back(std::move(tensor));
  }

  space.report = report;
  return space;
}

}  // namespace nemesys
