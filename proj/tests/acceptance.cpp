// Acceptance suite: one pass/fail line per criterion, nonzero exit on
// any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "nemesys/apps.hpp"
#include "nemesys/engine.hpp"
#include "nemesys/infer.hpp"
#include "nemesys/learn.hpp"
#include "nemesys/parser.hpp"
#include "test_support.hpp"

using namespace nemesys;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

bool g_all_ok = true;

void report(int id, const char* title, const Outcome& outcome, double seconds) {
  printf("%s  criterion %2d: %-28s (%6.1fs)%s%s\n", outcome.ok ? "PASS" : "FAIL", id, title,
         seconds, outcome.detail.empty() ? "" : "  ", outcome.detail.c_str());
  fflush(stdout);
  g_all_ok = g_all_ok && outcome.ok;
}

template <typename F>
void criterion(int id, const char* title, double budget_seconds, F body) {
  auto start = Clock::now();
  Outcome outcome;
  try {
    outcome = body();
  } catch (const std::exception& e) {
    outcome.ok = false;
    outcome.detail = std::string("exception: ") + e.what();
  }
  double secs = std::chrono::duration<double>(Clock::now() - start).count();
  if (secs > budget_seconds) {
    outcome.ok = false;
    outcome.detail += " over time budget";
  }
  report(id, title, outcome, secs);
}

// 1. Boolean-oracle equivalence on 100 random programs.
Outcome boolean_equivalence() {
  std::mt19937 rng(2025);
  int matched = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Program p = test::random_program(rng, /*boolean_weights=*/true);
    MetaProgram mp = load_interpreter("naive");
    GroundSpace space = build_ground_space(mp, p, lift_program(p), GroundingConfig{});

    ReasonerConfig cfg;
    cfg.gamma = 0.01;
    cfg.steps = space.report.closure_rounds + 4;
    RuleWeights w = RuleWeights::one_hot(static_cast<int>(space.tensors.size()));
    Valuation vT = infer(initial_valuation(space), space.tensors, w, cfg).valuation;

    auto derivable = test::BoolChainer(p).derive();
    bool program_ok = true;
    for (const Term& atom : space.table.atoms()) {
      if (atom.name() != "solve" || atom.arity() != 1) continue;
      const Term& obj = atom.args()[0];
      if (obj.is_pair() || (obj.is_constant() && obj.name() == "true")) continue;
      bool expect = derivable.count(render(obj)) > 0;
      bool got = vT[space.table.find(atom).value()] >= 0.5;
      program_ok = program_ok && got == expect;
    }
    matched += program_ok ? 1 : 0;
  }
  Outcome o;
  o.ok = matched == 100;
  o.detail = std::to_string(matched) + "/100 programs match the chainer";
  return o;
}

// 2. Loop avoidance on the three-node graph.
Outcome loop_avoidance() {
  Program p = parse_program(
      "edge(a,b). edge(b,a). edge(b,c).\n"
      "path(A,A,[]).\n"
      "path(A,C,[edge(A,B)|P]) :- edge(A,B), path(B,C,P).\n");
  Outcome o;
  std::ostringstream detail;

  auto open = solve_depth_limited(p, parse_atom("path(a,c,A)"), 3);
  bool found = false;
  for (const auto& r : open)
    if (render(r.goal_instance) == "path(a,c,[edge(a,b),edge(b,c)])" && r.valuation >= 0.9)
      found = true;
  o.ok = found;
  detail << "path(a,c,..) " << (found ? "ok" : "missing");

  for (const char* q : {"path(a,a,[])", "path(b,b,[])", "path(c,c,[])"}) {
    auto r = solve_depth_limited(p, parse_atom(q), 3);
    bool good = !r.empty() && r.front().valuation >= 0.9;
    o.ok = o.ok && good;
    if (!good) detail << "; " << q << " failed";
  }
  o.detail = detail.str();
  return o;
}

// 3. Causal forward on the night network.
Outcome causal_forward() {
  Program network = parse_program("0.5: night. 0.9: sleep :- night. 0.8: light :- night.");
  std::vector<Atom> queries = {parse_atom("light"), parse_atom("sleep")};

  CausalRunResult pre = run_causal(network, std::nullopt, queries);
  CausalRunResult post = run_causal(network, std::make_pair(parse_term("light"), 1.0), queries);

  Outcome o;
  std::ostringstream detail;
  auto check = [&](const char* name, double got, double want) {
    bool ok = std::abs(got - want) <= 0.01;
    o.ok = o.ok && ok;
    detail << name << "=" << got << (ok ? " " : "(!) ");
  };
  check("P(light)", pre.queries[0].pre, 0.40);
  check("P(sleep)", pre.queries[1].pre, 0.45);
  check("P(light|do)", post.queries[0].post.value(), 1.00);
  check("P(sleep|do)", post.queries[1].post.value(), 0.45);
  o.detail = detail.str();
  return o;
}

// 4. Do-recovery on the medicine network.
Outcome do_recovery() {
  Program network = parse_program(
      "1.0: medicine_a.\n1.0: medicine_b.\n0.9: patient :- medicine_a, medicine_b.\n");
  std::vector<Term> candidates = {parse_term("medicine_a"), parse_term("medicine_b"),
                                  parse_term("patient")};
  std::vector<std::pair<Atom, double>> three_targets = {{parse_atom("medicine_a"), 0.8},
                                                        {parse_atom("medicine_b"), 1.0},
                                                        {parse_atom("patient"), 0.72}};

  int wins = 0;
  for (unsigned seed = 0; seed < 5; ++seed) {
    LearnConfig cfg;
    cfg.steps = 1000;
    cfg.step_size = 0.2;
    cfg.seed = seed;
    DoLearnResult r = learn_do(network, three_targets, candidates, cfg);
    bool strict = r.winner == 0 &&
                  r.candidates[0].final_loss < r.candidates[1].final_loss &&
                  r.candidates[0].final_loss < r.candidates[2].final_loss;
    bool value_ok = std::abs(r.candidates[0].learned_value - 0.8) <= 0.05;
    wins += (strict && value_ok) ? 1 : 0;
  }

  LearnConfig cfg;
  cfg.steps = 1000;
  cfg.step_size = 0.2;
  cfg.seed = 0;
  DoLearnResult one = learn_do(network, {{parse_atom("patient"), 0.72}}, candidates, cfg);
  double lo = one.candidates[0].final_loss;
  double hi = lo;
  for (const auto& c : one.candidates) {
    lo = std::min(lo, c.final_loss);
    hi = std::max(hi, c.final_loss);
  }

  Outcome o;
  o.ok = wins >= 4 && (hi - lo) < 0.01;
  std::ostringstream detail;
  detail << wins << "/5 seeds recover do(medicine_a)=0.8; one-target spread " << (hi - lo);
  o.detail = detail.str();
  return o;
}

// 5. Structure learning over the seven-rule pool.
Outcome structure_learning() {
  Program program = parse_program(
      "0.9: rain. 0.9: wind. 0.95: storm :- rain, wind. 0.8: wet :- rain.\n"
      "1.0: dawn. 0.85: mist. 0.9: glow :- dawn, mist. 0.7: bright :- dawn.\n");
  EngineOptions opts;
  opts.interpreter = "multitask";
  opts.reasoner.gamma = 0.01;
  Engine engine = build_engine(program, opts);

  auto holdout_atom = [](const Atom& a) {
    std::string text = render(a);
    for (const char* w : {"dawn", "mist", "glow", "bright"})
      if (text.find(w) != std::string::npos) return true;
    return false;
  };

  struct Phase {
    const char* name;
    std::vector<int> rules;
    std::vector<int> contrast;
  };
  std::vector<Phase> phases = {{"causal", {4, 5, 6}, {0, 1, 2, 3}},
                               {"naive", {0, 1}, {2, 3, 4, 5, 6}},
                               {"prooftree", {2, 3}, {0, 1, 4, 5, 6}}};
  std::vector<StructureTask> tasks;
  for (const Phase& phase : phases) {
    StructureTask task;
    task.name = phase.name;
    task.true_rules = phase.rules;
    task.iterations = 200;  // 600 total across the three phases
    for (auto& target : subset_targets(engine, phase.rules, phase.contrast, "*")) {
      if (holdout_atom(target.first)) {
        task.holdout_targets.push_back(target);
      } else {
        task.train_targets.push_back(target);
      }
    }
    tasks.push_back(std::move(task));
  }

  LearnConfig cfg;
  cfg.step_size = 0.3;
  cfg.adam = true;
  cfg.gamma = 0.01;
  cfg.seed = 0;
  StructureLearnResult result = learn_structure(engine, 3, tasks, cfg);

  Outcome o;
  std::ostringstream detail;
  for (const StructurePhaseResult& phase : result.phases) {
    bool acc = phase.holdout_accuracy == 1.0;
    bool weights = true;
    for (const auto& [rule, w] : phase.true_rule_weight) weights = weights && w >= 0.9;
    o.ok = o.ok && acc && weights;
    detail << phase.task << ": acc=" << phase.holdout_accuracy * 100 << "% minw=";
    double minw = 1.0;
    for (const auto& [rule, w] : phase.true_rule_weight) minw = std::min(minw, w);
    detail << minw << "  ";
  }
  o.detail = detail.str();
  return o;
}

// 6. Gradient checks against central finite differences.
Outcome gradient_checks() {
  std::mt19937 rng(1234);
  std::uniform_real_distribution<double> logit(-1.5, 1.5);
  int configs = 0;
  int bad = 0;
  while (configs < 100) {
    Program p = test::random_program(rng, /*boolean_weights=*/false);
    EngineOptions opts;
    opts.interpreter = "naive";
    opts.reasoner.gamma = 0.01;
    opts.reasoner.steps = 3;
    Engine e = build_engine(p, opts);
    if (e.space.tensors.empty()) continue;

    ParamSet params;
    params.train_valuations = true;
    params.train_weights = true;
    params.weights.num_slots = static_cast<int>(e.space.tensors.size());
    params.weights.num_candidates = params.weights.num_slots;
    params.weights.logits.resize(static_cast<size_t>(params.weights.num_slots) *
                                 params.weights.num_candidates);
    for (double& x : params.weights.logits) x = logit(rng);
    int count = 0;
    for (const SeedValue& s : e.space.seeds) {
      if (count >= 3) break;
      params.valuation_indices.push_back(s.index);
      params.valuation_logits.push_back(logit(rng));
      ++count;
    }

    std::vector<int> target_idx;
    std::vector<double> target_probs;
    for (const Term& atom : e.space.table.atoms()) {
      if (atom.name() == "solve" && atom.arity() == 1 && !atom.args()[0].is_pair()) {
        target_idx.push_back(e.space.table.find(atom).value());
        target_probs.push_back((target_idx.size() % 2) ? 0.8 : 0.2);
      }
      if (target_idx.size() >= 4) break;
    }
    if (target_idx.empty()) continue;
    ++configs;

    GradResult g = eval_with_grad(e.space, params, target_idx, target_probs, e.reasoner);
    const double h = 1e-4;
    auto check_one = [&](double analytic, double* slot) {
      double saved = *slot;
      *slot = saved + h;
      double up = eval_loss(e.space, params, target_idx, target_probs, e.reasoner);
      *slot = saved - h;
      double down = eval_loss(e.space, params, target_idx, target_probs, e.reasoner);
      *slot = saved;
      double fd = (up - down) / (2.0 * h);
      double tol = std::max(1e-6, 1e-3 * std::max(std::abs(fd), std::abs(analytic)));
      if (std::abs(fd - analytic) > tol) ++bad;
    };
    for (size_t i = 0; i < params.valuation_logits.size(); ++i)
      check_one(g.d_valuation_logits[i], &params.valuation_logits[i]);
    for (size_t i = 0; i < params.weights.logits.size(); ++i)
      check_one(g.d_weight_logits[i], &params.weights.logits[i]);
  }
  Outcome o;
  o.ok = bad == 0;
  o.detail = std::to_string(bad) + " gradient mismatches over 100 configurations";
  return o;
}

// 7. Proof trees on the triangle-pair scene.
Outcome proof_trees() {
  EngineOptions opts;
  opts.interpreter = "prooftree";
  opts.reasoner.gamma = 1e-3;
  Engine e = build_engine(parse_program("0.98: shape(obj0, triangle).\n"
                                        "0.02: shape(obj1, triangle).\n"
                                        "0.98: shape(obj2, triangle).\n"
                                        "same_shape_pair(X,Y) :- shape(X,Z), shape(Y,Z).\n"),
                          opts);
  Valuation vT = e.run().valuation;

  Outcome o;
  auto strong = extract_proof(parse_atom("same_shape_pair(obj0,obj2)"), vT, e, 0.5);
  o.ok = !strong.empty();
  std::ostringstream detail;
  if (!strong.empty()) {
    const ScoredProof& top = strong.front();
    auto leaves = top.tree.leaves();
    bool leaves_ok = leaves.size() == 2 && render(leaves[0]) == "shape(obj0,triangle)" &&
                     render(leaves[1]) == "shape(obj2,triangle)";
    bool value_ok = std::abs(top.valuation - 0.9604) <= 0.01;
    o.ok = leaves_ok && value_ok;
    detail << "top=" << top.valuation;
  }
  auto weak = extract_proof(parse_atom("same_shape_pair(obj0,obj1)"), vT, e, 0.0);
  bool weak_ok = !weak.empty() && weak.front().valuation <= 0.05;
  o.ok = o.ok && weak_ok;
  if (!weak.empty()) detail << " weak=" << weak.front().valuation;
  o.detail = detail.str();
  return o;
}

// 8. Relevance propagation ordering.
Outcome relevance_ordering() {
  EngineOptions opts;
  opts.interpreter = "lrp2";
  opts.reasoner.gamma = 1e-4;
  Engine e = build_engine(parse_program("0.98: shape(obj0, triangle).\n"
                                        "0.02: shape(obj1, triangle).\n"
                                        "0.98: shape(obj2, triangle).\n"
                                        "same_shape_pair(X,Y) :- shape(X,Z), shape(Y,Z).\n"),
                          opts);
  Valuation vT = e.run().valuation;
  RelevanceReport rel = relevance(parse_atom("same_shape_pair(obj0,obj2)"), {}, vT, e);

  auto score_of = [&](const std::string& text) {
    for (const auto& [atom, score] : rel.scores)
      if (render(atom) == text) return score;
    return 0.0;
  };
  double s0 = score_of("shape(obj0,triangle)");
  double s1 = score_of("shape(obj1,triangle)");

  Outcome o;
  o.ok = s0 > s1 && s1 <= 0.011;
  std::ostringstream detail;
  detail << "score(obj0)=" << s0 << " score(obj1)=" << s1;
  o.detail = detail.str();
  return o;
}

// 9. Planner on the line-formation fixture plus random scenes.
Outcome planner() {
  Outcome o;
  std::ostringstream detail;

  GridScene start;
  start.objects = {{"obj0", "circle", "red", 1, 3},
                   {"obj1", "square", "blue", 2, 4},
                   {"obj2", "triangle", "gray", 3, 2},
                   {"obj3", "circle", "cyan", 4, 5},
                   {"obj4", "square", "olive", 2, 1}};
  GridScene goal = start;
  for (int i = 0; i < 5; ++i) {
    goal.objects[i].x = i + 1;
    goal.objects[i].y = i + 1;
  }
  PlanResult fixture = plan_scene(start, goal, 8);
  auto [_, fixture_ok] = validate_plan(start, goal, fixture);
  o.ok = fixture.found && fixture_ok;
  detail << "fixture " << (fixture_ok ? "ok" : "failed");

  std::mt19937 rng(77);
  std::uniform_int_distribution<int> pos(1, 5);
  std::uniform_int_distribution<int> count(1, 5);
  int good = 0;
  for (int trial = 0; trial < 50; ++trial) {
    GridScene s;
    GridScene g;
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
      SceneObject obj{"obj" + std::to_string(i), "circle", "red", pos(rng), pos(rng)};
      SceneObject tgt = obj;
      tgt.x = pos(rng);
      tgt.y = pos(rng);
      s.objects.push_back(obj);
      g.objects.push_back(tgt);
    }
    PlanResult r = plan_scene(s, g, 8);
    bool valid = r.found && validate_plan(s, g, r).second;
    if (valid) {
      for (const AxisPlan& p : r.plans) {
        const SceneObject* so = nullptr;
        const SceneObject* go = nullptr;
        for (size_t i = 0; i < s.objects.size(); ++i) {
          if (s.objects[i].id == p.object_id) {
            so = &s.objects[i];
            go = &g.objects[i];
          }
        }
        int delta = p.horizontal ? std::abs(go->x - so->x) : std::abs(go->y - so->y);
        valid = valid && static_cast<int>(p.actions.size()) == delta;
      }
    }
    good += valid ? 1 : 0;
  }
  o.ok = o.ok && good == 50;
  detail << "; " << good << "/50 random scenes";
  o.detail = detail.str();
  return o;
}

// 10. Two-pairs classification on synthetic scenes.
Outcome classification() {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> pos(1, 5);
  const char* shapes[] = {"triangle", "square", "circle"};

  auto oracle = [](const GridScene& scene) {
    const auto& objs = scene.objects;
    for (size_t a = 0; a < objs.size(); ++a)
      for (size_t b = 0; b < objs.size(); ++b)
        for (size_t c = 0; c < objs.size(); ++c)
          for (size_t d = 0; d < objs.size(); ++d) {
            std::set<size_t> four{a, b, c, d};
            if (four.size() != 4) continue;
            if (objs[a].shape == objs[b].shape && objs[c].shape == objs[d].shape) return true;
          }
    return false;
  };

  int correct = 0;
  for (int i = 0; i < 100; ++i) {
    GridScene scene;
    bool positive = i % 2 == 0;
    if (positive) {
      int s1 = i % 3;
      int s2 = (i + 1) % 3;
      scene.objects = {{"o0", shapes[s1], "red", pos(rng), pos(rng)},
                       {"o1", shapes[s1], "blue", pos(rng), pos(rng)},
                       {"o2", shapes[s2], "red", pos(rng), pos(rng)},
                       {"o3", shapes[s2], "blue", pos(rng), pos(rng)}};
    } else if (i % 4 == 1) {
      // One pair plus two distinct shapes.
      scene.objects = {{"o0", shapes[0], "red", pos(rng), pos(rng)},
                       {"o1", shapes[0], "blue", pos(rng), pos(rng)},
                       {"o2", shapes[1], "red", pos(rng), pos(rng)},
                       {"o3", shapes[2], "blue", pos(rng), pos(rng)}};
    } else {
      // Three objects cannot hold two disjoint pairs.
      scene.objects = {{"o0", shapes[0], "red", pos(rng), pos(rng)},
                       {"o1", shapes[1], "blue", pos(rng), pos(rng)},
                       {"o2", shapes[2], "red", pos(rng), pos(rng)}};
    }
    bool truth = oracle(scene);
    if (truth != positive) return {false, "scene generator disagrees with the oracle"};
    ClassifyResult r = classify_scene(scene, two_pairs_pattern(), two_pairs_head());
    correct += (r.label == truth) ? 1 : 0;
  }
  Outcome o;
  o.ok = correct == 100;
  o.detail = std::to_string(correct) + "/100 scenes classified correctly";
  return o;
}

}  // namespace

int main() {
  criterion(1, "boolean-oracle equivalence", 60, boolean_equivalence);
  criterion(2, "loop avoidance", 10, loop_avoidance);
  criterion(3, "causal forward", 5, causal_forward);
  criterion(4, "do-recovery", 60, do_recovery);
  criterion(5, "structure learning", 600, structure_learning);
  criterion(6, "gradient checks", 300, gradient_checks);
  criterion(7, "proof trees", 30, proof_trees);
  criterion(8, "relevance ordering", 30, relevance_ordering);
  criterion(9, "planner", 120, planner);
  criterion(10, "two-pairs classification", 30, classification);
  return g_all_ok ? 0 : 1;
}
