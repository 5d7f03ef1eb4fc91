#include "nemesys/apps.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "nemesys/infer.hpp"
#include "nemesys/parser.hpp"

namespace nemesys {

using nlohmann::json;

ProofTree ProofTree::decode(const Term& proof_term) {
  if (!proof_term.is_rule())
    throw std::invalid_argument("not a proof term: " + render(proof_term));
  ProofTree node;
  node.goal = proof_term.args()[0];
  Term body = proof_term.args()[1];
  if (body.is_constant() && body.name() == "true") {
    node.leaf = true;
    return node;
  }
  const Term* cur = &body;
  while (cur->is_pair()) {
    node.children.push_back(decode(cur->args()[0]));
    cur = &cur->args()[1];
  }
  node.children.push_back(decode(*cur));
  return node;
}

Term ProofTree::to_term() const {
  if (leaf) return Term::rule(goal, Term::constant("true"));
  std::vector<Term> parts;
  parts.reserve(children.size());
  for (const ProofTree& c : children) parts.push_back(c.to_term());
  return Term::rule(goal, Term::conjunction(parts));
}

std::string ProofTree::pretty(int indent) const {
  std::ostringstream os;
  os << std::string(static_cast<size_t>(indent) * 2, ' ') << render(goal);
  if (leaf) {
    os << "  [fact]\n";
    return os.str();
  }
  os << "\n";
  for (const ProofTree& c : children) os << c.pretty(indent + 1);
  return os.str();
}

std::vector<Term> ProofTree::leaves() const {
  std::vector<Term> out;
  if (leaf) {
    out.push_back(goal);
    return out;
  }
  for (const ProofTree& c : children) {
    auto sub = c.leaves();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  return out;
}

std::vector<ScoredProof> extract_proof(const Atom& goal, const Valuation& vT,
                                       const Engine& engine, double threshold) {
  std::vector<ScoredProof> out;
  Term pattern = goal.to_term();
  for (int j = 2; j < engine.space.table.size(); ++j) {
    const Term& atom = engine.space.table.atom(j);
    if (atom.name() != "solve" || atom.arity() != 2) continue;
    if (!unify(pattern, atom.args()[0], Substitution{})) continue;
    if (vT[j] < threshold) continue;
    ScoredProof sp;
    sp.proof_term = atom.args()[1];
    sp.tree = ProofTree::decode(sp.proof_term);
    sp.valuation = vT[j];
    out.push_back(std::move(sp));
  }
  std::sort(out.begin(), out.end(), [](const ScoredProof& a, const ScoredProof& b) {
    if (a.valuation != b.valuation) return a.valuation > b.valuation;
    return render(a.proof_term) < render(b.proof_term);
  });
  return out;
}

double replay_proof(const ProofTree& tree, const Engine& engine) {
  std::map<Term, double> seeds;
  for (const SeedValue& s : engine.space.seeds) seeds.emplace(s.atom, s.value);

  std::function<double(const ProofTree&)> walk = [&](const ProofTree& node) -> double {
    if (node.leaf) {
      Term base = Term::compound("solve", {node.goal, node.to_term()});
      auto it = seeds.find(base);
      return it == seeds.end() ? 0.0 : it->second;
    }
    std::vector<Term> body;
    double prod = 1.0;
    for (const ProofTree& c : node.children) {
      body.push_back(c.goal);
      prod *= walk(c);
    }
    Term clause = Term::compound("clause", {node.goal, Term::conjunction(body)});
    auto it = seeds.find(clause);
    return it == seeds.end() ? 0.0 : it->second * prod;
  };
  return walk(tree);
}

RelevanceReport relevance(const Atom& goal, const std::vector<Term>& atoms,
                          const Valuation& vT, const Engine& engine) {
  RelevanceReport report;
  report.goal = goal;
  Term goal_term = goal.to_term();

  std::set<Term> wanted(atoms.begin(), atoms.end());
  for (const Term& a : atoms) {
    bool anywhere = false;
    for (int j = 2; j < engine.space.table.size() && !anywhere; ++j) {
      const Term& t = engine.space.table.atom(j);
      anywhere = (t.name() == "rp" && t.arity() == 3 && t.args()[2] == a) || t == a;
    }
    if (!anywhere) throw std::runtime_error("atom not in table: " + render(a));
  }

  std::map<Term, std::vector<double>> per_atom;
  std::set<Term> proofs;
  for (int j = 2; j < engine.space.table.size(); ++j) {
    const Term& t = engine.space.table.atom(j);
    if (t.name() != "rp" || t.arity() != 3) continue;
    if (!(t.args()[0] == goal_term)) continue;
    const Term& atom = t.args()[2];
    if (atom.is_constant() && atom.name() == "true") continue;  // bookkeeping leaf
    if (!wanted.empty() && !wanted.count(atom)) continue;
    per_atom[atom].push_back(vT[j]);
    if (vT[j] >= 0.01) proofs.insert(t.args()[1]);
  }
  for (auto& [atom, vals] : per_atom)
    report.scores.push_back({atom, softor(vals, engine.reasoner.gamma)});
  std::sort(report.scores.begin(), report.scores.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return render(a.first) < render(b.first);
  });
  report.proofs.assign(proofs.begin(), proofs.end());
  return report;
}

std::vector<DepthSolveResult> solve_depth_limited(const Program& program, const Atom& goal,
                                                  int max_depth, GroundingConfig grounding) {
  EngineOptions opts;
  opts.interpreter = "depth";
  opts.grounding = grounding;
  opts.grounding.li_max_depth = max_depth;
  opts.grounding.term_depth = std::max(opts.grounding.term_depth, max_depth + 2);
  opts.reasoner.gamma = 1e-3;
  Engine engine = build_engine(program, opts);
  Valuation vT = engine.run().valuation;

  Term pattern = Term::compound("li", {goal.to_term(), Term::peano(max_depth)});
  std::vector<DepthSolveResult> out;
  for (int j = 2; j < engine.space.table.size(); ++j) {
    const Term& t = engine.space.table.atom(j);
    if (t.name() != "li" || t.arity() != 2) continue;
    if (t.args()[0].is_pair()) continue;  // conjunction bookkeeping
    if (t.args()[0].is_constant() && t.args()[0].name() == "true") continue;
    if (!unify(pattern, t, Substitution{})) continue;
    out.push_back({t.args()[0], vT[j]});
  }
  std::sort(out.begin(), out.end(), [](const DepthSolveResult& a, const DepthSolveResult& b) {
    if (a.valuation != b.valuation) return a.valuation > b.valuation;
    return render(a.goal_instance) < render(b.goal_instance);
  });
  return out;
}

namespace {

void check_acyclic(const Program& network) {
  std::map<std::string, std::set<std::string>> deps;
  for (const Clause& c : network.clauses)
    for (const Atom& b : c.body) deps[c.head.pred].insert(b.pred);
  enum class Mark { None, Open, Done };
  std::map<std::string, Mark> marks;
  std::function<void(const std::string&)> visit = [&](const std::string& p) {
    Mark& m = marks[p];
    if (m == Mark::Open) throw std::invalid_argument("cyclic network rejected at " + p);
    if (m == Mark::Done) return;
    m = Mark::Open;
    for (const std::string& q : deps[p]) visit(q);
    m = Mark::Done;
  };
  for (const auto& [p, _] : deps) visit(p);
}

}  // namespace

CausalRunResult run_causal(const Program& network,
                           std::optional<std::pair<Term, double>> intervention,
                           const std::vector<Atom>& queries) {
  check_acyclic(network);

  EngineOptions opts;
  opts.interpreter = "causal";
  // Near-hard maximum: keeps the no-op invariant inside 1e-6.
  opts.reasoner.gamma = 1e-7;
  if (intervention) {
    opts.grounding.do_sites = {intervention->first};
    opts.grounding.do_values[intervention->first] = intervention->second;
  }
  Engine engine = build_engine(network, opts);
  Valuation vT = engine.run().valuation;

  CausalRunResult out;
  out.grounding = engine.space.report;
  if (intervention) {
    out.site = intervention->first;
    out.intervention_value = intervention->second;
  }
  for (const Atom& q : queries) {
    CausalQuery cq;
    cq.query = q;
    cq.pre = engine.read(vT, Term::compound("prob", {q.to_term()}));
    if (intervention)
      cq.post = engine.read(vT, Term::compound("probs_do", {q.to_term(), intervention->first}));
    out.queries.push_back(std::move(cq));
  }
  return out;
}

GridScene scene_from_json(const std::string& json_text) {
  json j = json::parse(json_text);
  GridScene scene;
  json objects = j;
  if (j.is_object()) {
    scene.width = j.value("width", 5);
    scene.height = j.value("height", 5);
    objects = j.at("objects");
  }
  for (const json& o : objects) {
    SceneObject obj;
    obj.id = o.at("id").get<std::string>();
    obj.shape = o.value("shape", "none");
    obj.color = o.value("color", "none");
    obj.x = o.at("x").get<int>();
    obj.y = o.at("y").get<int>();
    scene.objects.push_back(std::move(obj));
  }
  if (!j.is_object()) {
    for (const SceneObject& o : scene.objects) {
      scene.width = std::max(scene.width, o.x);
      scene.height = std::max(scene.height, o.y);
    }
  }
  for (const SceneObject& o : scene.objects) {
    if (o.x < 1 || o.x > scene.width || o.y < 1 || o.y > scene.height)
      throw std::invalid_argument("object " + o.id + " outside the grid");
  }
  std::set<std::string> ids;
  for (const SceneObject& o : scene.objects)
    if (!ids.insert(o.id).second) throw std::invalid_argument("duplicate object id " + o.id);
  return scene;
}

std::string scene_to_json(const GridScene& scene) {
  json objects = json::array();
  for (const SceneObject& o : scene.objects)
    objects.push_back(
        {{"id", o.id}, {"shape", o.shape}, {"color", o.color}, {"x", o.x}, {"y", o.y}});
  json j = {{"width", scene.width}, {"height", scene.height}, {"objects", objects}};
  return j.dump(2);
}

namespace {

std::vector<std::string> decode_stack(const Term& stack) {
  std::vector<std::string> actions;
  const Term* cur = &stack;
  while (cur->is_cons()) {
    actions.push_back(cur->args()[0].name());
    cur = &cur->args()[1];
  }
  // The recursion prepends the latest action; execution order is the
  // reverse of the stored list.
  std::reverse(actions.begin(), actions.end());
  return actions;
}

std::optional<AxisPlan> plan_axis(const std::string& object_id, bool horizontal, int from,
                                  int to, int limit, int max_moves) {
  AxisPlan plan;
  plan.object_id = object_id;
  plan.horizontal = horizontal;
  plan.valuation = 1.0;
  if (from == to) return plan;

  PlannerGrid grid;
  grid.axis_pred = horizontal ? "pos_hori" : "pos_vert";
  grid.horizontal = horizontal;
  grid.min_pos = 1;
  grid.max_pos = limit;

  Term obj = Term::constant(object_id);
  Term start = Term::compound(grid.axis_pred, {obj, Term::peano(from)});
  Term goal = Term::compound(grid.axis_pred, {obj, Term::peano(to)});

  EngineOptions opts;
  opts.interpreter = "planner";
  opts.grounding.grid = grid;
  opts.grounding.plan_endpoints = {{start, goal}};
  opts.grounding.term_depth = std::max(max_moves, limit + 1);
  opts.grounding.max_rounds = max_moves + 4;
  opts.reasoner.gamma = 1e-3;
  opts.max_steps = max_moves + 3;
  Engine engine = build_engine(Program{}, opts);
  Valuation vT = engine.run().valuation;

  const Term* best_stack = nullptr;
  double best_val = 0.0;
  size_t best_len = 0;
  for (int j = 2; j < engine.space.table.size(); ++j) {
    const Term& t = engine.space.table.atom(j);
    if (t.name() != "planf" || t.arity() != 3) continue;
    if (!(t.args()[0] == start) || !(t.args()[1] == goal)) continue;
    if (vT[j] < 0.5) continue;
    std::vector<std::string> actions = decode_stack(t.args()[2]);
    if (static_cast<int>(actions.size()) > max_moves) continue;
    bool better = false;
    if (!best_stack) {
      better = true;
    } else if (vT[j] > best_val + 1e-9) {
      better = true;
    } else if (vT[j] > best_val - 1e-9 && actions.size() < best_len) {
      better = true;
    }
    if (better) {
      best_stack = &t.args()[2];
      best_val = vT[j];
      best_len = actions.size();
    }
  }
  if (!best_stack) return std::nullopt;
  plan.actions = decode_stack(*best_stack);
  plan.valuation = best_val;
  return plan;
}

}  // namespace

namespace {

// Apply the action stacks step by step; records the state after every
// action when `states` is provided.
GridScene simulate_actions(const GridScene& start, const PlanResult& result,
                           std::vector<GridScene>* states) {
  GridScene state = start;
  std::map<std::string, SceneObject*> by_id;
  for (SceneObject& o : state.objects) by_id[o.id] = &o;

  for (const AxisPlan& plan : result.plans) {
    SceneObject* obj = by_id.at(plan.object_id);
    for (const std::string& action : plan.actions) {
      if (action == "move_right") ++obj->x;
      else if (action == "move_left") --obj->x;
      else if (action == "move_up") ++obj->y;
      else if (action == "move_down") --obj->y;
      else throw std::invalid_argument("unknown action " + action);
      if (obj->x < 1 || obj->x > state.width || obj->y < 1 || obj->y > state.height)
        throw std::runtime_error("action moves " + obj->id + " out of bounds");
      if (states) states->push_back(state);
    }
  }
  return state;
}

}  // namespace

PlanResult plan_scene(const GridScene& start, const GridScene& goal, int max_moves) {
  std::map<std::string, const SceneObject*> goal_by_id;
  for (const SceneObject& o : goal.objects) goal_by_id[o.id] = &o;
  if (goal.objects.size() != start.objects.size())
    throw std::invalid_argument("start and goal scenes must hold the same objects");

  PlanResult result;
  result.found = true;
  for (const SceneObject& o : start.objects) {
    auto it = goal_by_id.find(o.id);
    if (it == goal_by_id.end())
      throw std::invalid_argument("object " + o.id + " missing from the goal scene");
    const SceneObject& g = *it->second;

    auto hori = plan_axis(o.id, true, o.x, g.x, start.width, max_moves);
    auto vert = plan_axis(o.id, false, o.y, g.y, start.height, max_moves);
    if (!hori || !vert) {
      result.unreachable.push_back(o.id);
      result.found = false;
      continue;
    }
    result.plans.push_back(std::move(*hori));
    result.plans.push_back(std::move(*vert));
  }
  if (result.found) simulate_actions(start, result, &result.intermediate_states);
  return result;
}

std::pair<GridScene, bool> validate_plan(const GridScene& start, const GridScene& goal,
                                         const PlanResult& result) {
  GridScene state = simulate_actions(start, result, nullptr);
  std::map<std::string, SceneObject*> by_id;
  for (SceneObject& o : state.objects) by_id[o.id] = &o;

  bool reached = result.found && state.objects.size() == goal.objects.size();
  for (const SceneObject& g : goal.objects) {
    auto it = by_id.find(g.id);
    reached = reached && it != by_id.end() && it->second->x == g.x && it->second->y == g.y;
  }
  return {state, reached};
}

Program scene_program(const GridScene& scene, const Program& pattern_rules) {
  std::set<std::string> pattern_preds;
  for (const Clause& c : pattern_rules.clauses) {
    pattern_preds.insert(c.head.pred);
    for (const Atom& b : c.body) pattern_preds.insert(b.pred);
  }

  std::ostringstream text;
  std::set<std::string> shapes;
  std::set<std::string> colors;
  for (const SceneObject& o : scene.objects) {
    shapes.insert(o.shape);
    colors.insert(o.color);
  }
  if (scene.objects.empty()) return pattern_rules;

  auto pool = [&](const std::set<std::string>& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : ", ") + x;
    return s;
  };
  std::set<std::string> ids;
  for (const SceneObject& o : scene.objects) ids.insert(o.id);

  text << "#dtype obj {" << pool(ids) << "}.\n";
  text << "#dtype shapename {" << pool(shapes) << "}.\n";
  text << "#pred shape/2 [obj, shapename].\n";
  if (pattern_preds.count("color")) {
    text << "#dtype colorname {" << pool(colors) << "}.\n";
    text << "#pred color/2 [obj, colorname].\n";
  }
  if (pattern_preds.count("diff4")) text << "#pred diff4/4 [obj, obj, obj, obj].\n";

  for (const SceneObject& o : scene.objects) {
    text << "shape(" << o.id << ", " << o.shape << ").\n";
    if (pattern_preds.count("color")) text << "color(" << o.id << ", " << o.color << ").\n";
  }
  if (pattern_preds.count("diff4")) {
    std::vector<std::string> v(ids.begin(), ids.end());
    for (const auto& a : v)
      for (const auto& b : v)
        for (const auto& c : v)
          for (const auto& d : v) {
            std::set<std::string> four{a, b, c, d};
            if (four.size() == 4)
              text << "diff4(" << a << ", " << b << ", " << c << ", " << d << ").\n";
          }
  }
  for (const Clause& c : pattern_rules.clauses) text << render(c) << "\n";
  return parse_program(text.str());
}

Program two_pairs_pattern() {
  return parse_program(
      "same_shape_pair(X,Y) :- shape(X,S), shape(Y,S).\n"
      "twopairs :- same_shape_pair(X,Y), same_shape_pair(Z,W), diff4(X,Y,Z,W).\n");
}

Atom two_pairs_head() { return Atom("twopairs", {}); }

ClassifyResult classify_scene(const GridScene& scene, const Program& pattern_rules,
                              const Atom& pattern_head, double threshold) {
  ClassifyResult out;
  if (scene.objects.empty()) return out;

  EngineOptions opts;
  opts.interpreter = "naive";
  opts.reasoner.gamma = 1e-3;
  Engine engine = build_engine(scene_program(scene, pattern_rules), opts);
  Valuation vT = engine.run().valuation;
  out.grounding = engine.space.report;
  out.score = engine.read(vT, Term::compound("solve", {pattern_head.to_term()}));
  out.label = out.score >= threshold;
  return out;
}

}  // namespace nemesys
