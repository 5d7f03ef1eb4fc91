#include <doctest.h>

#include <cmath>
#include <random>

#include "nemesys/apps.hpp"
#include "nemesys/parser.hpp"

using namespace nemesys;

namespace {

const char* kFig3Scene =
    "0.98: shape(obj0, triangle).\n"
    "0.02: shape(obj1, triangle).\n"
    "0.98: shape(obj2, triangle).\n"
    "same_shape_pair(X,Y) :- shape(X,Z), shape(Y,Z).\n";

const char* kPathProgram =
    "edge(a,b). edge(b,a). edge(b,c).\n"
    "path(A,A,[]).\n"
    "path(A,C,[edge(A,B)|P]) :- edge(A,B), path(B,C,P).\n";

const char* kNightNetwork = "0.5: night. 0.9: sleep :- night. 0.8: light :- night.\n";

Engine proof_engine(const std::string& text) {
  EngineOptions opts;
  opts.interpreter = "prooftree";
  opts.reasoner.gamma = 1e-3;
  return build_engine(parse_program(text), opts);
}

}  // namespace

TEST_CASE("proof trees for the triangle-pair scene") {
  Engine e = proof_engine(kFig3Scene);
  Valuation vT = e.run().valuation;

  auto proofs = extract_proof(parse_atom("same_shape_pair(obj0,obj2)"), vT, e, 0.5);
  REQUIRE(!proofs.empty());
  const ScoredProof& top = proofs.front();
  CHECK(top.valuation == doctest::Approx(0.9604).epsilon(0.011));
  auto leaves = top.tree.leaves();
  REQUIRE(leaves.size() == 2);
  CHECK(render(leaves[0]) == "shape(obj0,triangle)");
  CHECK(render(leaves[1]) == "shape(obj2,triangle)");

  // The low-probability pair stays retrievable below the threshold.
  auto weak = extract_proof(parse_atom("same_shape_pair(obj0,obj1)"), vT, e, 0.0);
  REQUIRE(!weak.empty());
  CHECK(weak.front().valuation <= 0.05);
  CHECK(weak.front().valuation == doctest::Approx(0.0196).epsilon(0.3));

  // Base case: a lifted fact proves itself with its weight.
  auto fact = extract_proof(parse_atom("shape(obj0,triangle)"), vT, e, 0.5);
  REQUIRE(!fact.empty());
  CHECK(fact.front().tree.leaf);
  CHECK(fact.front().valuation == doctest::Approx(0.98).epsilon(0.01));
}

TEST_CASE("proof replay reproduces reported valuations") {
  Engine e = proof_engine(kFig3Scene);
  Valuation vT = e.run().valuation;
  for (const char* goal : {"same_shape_pair(obj0,obj2)", "same_shape_pair(obj0,obj1)",
                           "shape(obj2,triangle)"}) {
    auto proofs = extract_proof(parse_atom(goal), vT, e, 0.0);
    for (const ScoredProof& p : proofs) {
      double replayed = replay_proof(p.tree, e);
      // Proofs round-trip through their reified terms.
      CHECK(ProofTree::decode(p.tree.to_term()).to_term() == p.proof_term);
      CHECK(std::abs(replayed - p.valuation) <= 2e-2);
    }
  }
}

TEST_CASE("relevance ranks the triangle leaves above the distractor") {
  EngineOptions opts;
  opts.interpreter = "lrp2";
  opts.reasoner.gamma = 1e-4;
  Engine e = build_engine(parse_program(kFig3Scene), opts);
  Valuation vT = e.run().valuation;

  RelevanceReport report =
      relevance(parse_atom("same_shape_pair(obj0,obj2)"), {}, vT, e);
  REQUIRE(!report.scores.empty());

  auto score_of = [&](const std::string& text) {
    for (const auto& [atom, score] : report.scores)
      if (render(atom) == text) return score;
    return 0.0;
  };
  double s0 = score_of("shape(obj0,triangle)");
  double s1 = score_of("shape(obj1,triangle)");
  double s2 = score_of("shape(obj2,triangle)");
  CHECK(s0 > s1);
  CHECK(s2 > s1);
  CHECK(s0 == doctest::Approx(0.9412).epsilon(0.02));
  CHECK(s1 <= 0.011);
  CHECK(!report.proofs.empty());

  CHECK_THROWS(relevance(parse_atom("same_shape_pair(obj0,obj2)"),
                         {parse_term("shape(objz,star)")}, vT, e));
}

TEST_CASE("depth-limited solving terminates on the loop program") {
  Program p = parse_program(kPathProgram);

  auto results = solve_depth_limited(p, parse_atom("path(a,c,A)"), 3);
  REQUIRE(!results.empty());
  CHECK(render(results.front().goal_instance) == "path(a,c,[edge(a,b),edge(b,c)])");
  CHECK(results.front().valuation >= 0.9);

  for (const char* q : {"path(a,a,[])", "path(b,b,[])", "path(c,c,[])"}) {
    auto r = solve_depth_limited(p, parse_atom(q), 3);
    REQUIRE(!r.empty());
    CHECK(r.front().valuation >= 0.9);
  }

  // No rewrite budget: rule-derived goals stay near zero.
  auto zero = solve_depth_limited(p, parse_atom("path(a,c,A)"), 0);
  for (const auto& r : zero) CHECK(r.valuation <= 0.01);
}

TEST_CASE("causal forward queries on the night network") {
  Program network = parse_program(kNightNetwork);
  std::vector<Atom> queries = {parse_atom("light"), parse_atom("sleep")};

  CausalRunResult pre = run_causal(network, std::nullopt, queries);
  CHECK(pre.queries[0].pre == doctest::Approx(0.40).epsilon(0.025));
  CHECK(pre.queries[1].pre == doctest::Approx(0.45).epsilon(0.023));
  CHECK(!pre.queries[0].post.has_value());

  CausalRunResult post =
      run_causal(network, std::make_pair(parse_term("light"), 1.0), queries);
  CHECK(post.queries[0].post.value() == doctest::Approx(1.00).epsilon(0.01));
  CHECK(post.queries[1].post.value() == doctest::Approx(0.45).epsilon(0.023));

  // Intervening at the original value changes nothing.
  CausalRunResult noop =
      run_causal(network, std::make_pair(parse_term("light"), 0.4), queries);
  CHECK(std::abs(noop.queries[0].post.value() - noop.queries[0].pre) <= 1e-6);
  CHECK(std::abs(noop.queries[1].post.value() - noop.queries[1].pre) <= 1e-6);

  // The do-site itself reads back the assigned value.
  CausalRunResult site =
      run_causal(network, std::make_pair(parse_term("light"), 0.3), {parse_atom("light")});
  CHECK(std::abs(site.queries[0].post.value() - 0.3) <= 1e-6);

  CHECK_THROWS_AS(run_causal(parse_program("a :- b. b :- a."), std::nullopt, {}),
                  std::invalid_argument);
}

TEST_CASE("planning between grid scenes") {
  GridScene start;
  start.objects = {{"obj0", "circle", "red", 1, 3}};
  GridScene goal = start;
  goal.objects[0].x = 3;
  goal.objects[0].y = 1;

  PlanResult result = plan_scene(start, goal, 6);
  REQUIRE(result.found);
  REQUIRE(result.plans.size() == 2);
  CHECK(result.plans[0].actions == std::vector<std::string>{"move_right", "move_right"});
  CHECK(result.plans[1].actions == std::vector<std::string>{"move_down", "move_down"});

  auto [reached, ok] = validate_plan(start, goal, result);
  CHECK(ok);
  CHECK(reached.objects[0].x == 3);
  CHECK(reached.objects[0].y == 1);
}

TEST_CASE("identity plan is empty") {
  GridScene start;
  start.objects = {{"a", "circle", "red", 2, 2}, {"b", "square", "blue", 4, 4}};
  PlanResult result = plan_scene(start, start, 4);
  CHECK(result.found);
  for (const AxisPlan& p : result.plans) CHECK(p.actions.empty());
  auto [_, ok] = validate_plan(start, start, result);
  CHECK(ok);
}

TEST_CASE("line formation task") {
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
  PlanResult result = plan_scene(start, goal, 8);
  REQUIRE(result.found);
  auto [_, ok] = validate_plan(start, goal, result);
  CHECK(ok);
  // Minimal per-axis stacks.
  for (const AxisPlan& p : result.plans) {
    const SceneObject* s = nullptr;
    const SceneObject* g = nullptr;
    for (size_t i = 0; i < start.objects.size(); ++i) {
      if (start.objects[i].id == p.object_id) {
        s = &start.objects[i];
        g = &goal.objects[i];
      }
    }
    REQUIRE(s != nullptr);
    int delta = p.horizontal ? std::abs(g->x - s->x) : std::abs(g->y - s->y);
    CHECK(static_cast<int>(p.actions.size()) == delta);
  }
}

TEST_CASE("random solvable scenes plan and validate") {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> pos(1, 5);
  std::uniform_int_distribution<int> count(1, 3);
  for (int trial = 0; trial < 8; ++trial) {
    GridScene start;
    GridScene goal;
    int n = count(rng);
    for (int i = 0; i < n; ++i) {
      SceneObject s{"obj" + std::to_string(i), "circle", "red", pos(rng), pos(rng)};
      SceneObject g = s;
      g.x = pos(rng);
      g.y = pos(rng);
      start.objects.push_back(s);
      goal.objects.push_back(g);
    }
    PlanResult result = plan_scene(start, goal, 8);
    REQUIRE(result.found);
    auto [_, ok] = validate_plan(start, goal, result);
    CHECK_MESSAGE(ok, "trial ", trial);
  }
}

TEST_CASE("unreachable goals report the object ids") {
  GridScene start;
  start.objects = {{"far", "circle", "red", 1, 1}};
  GridScene goal = start;
  goal.objects[0].x = 5;
  PlanResult result = plan_scene(start, goal, 2);  // needs 4 moves
  CHECK(!result.found);
  REQUIRE(result.unreachable.size() == 1);
  CHECK(result.unreachable[0] == "far");
}

TEST_CASE("two-pairs classification") {
  GridScene positive;
  positive.objects = {{"obj0", "triangle", "red", 1, 1},
                      {"obj1", "triangle", "blue", 2, 2},
                      {"obj2", "square", "red", 3, 3},
                      {"obj3", "square", "blue", 4, 4}};
  ClassifyResult pos = classify_scene(positive, two_pairs_pattern(), two_pairs_head());
  CHECK(pos.score >= 0.9);
  CHECK(pos.label);

  GridScene negative;
  negative.objects = {{"obj0", "triangle", "red", 1, 1},
                      {"obj1", "square", "blue", 2, 2},
                      {"obj2", "circle", "red", 3, 3}};
  ClassifyResult neg = classify_scene(negative, two_pairs_pattern(), two_pairs_head());
  CHECK(neg.score <= 0.1);
  CHECK(!neg.label);

  ClassifyResult empty = classify_scene(GridScene{}, two_pairs_pattern(), two_pairs_head());
  CHECK(empty.score <= 0.1);
  CHECK(!empty.label);
}

TEST_CASE("scene json round trip") {
  GridScene scene;
  scene.objects = {{"obj0", "triangle", "red", 1, 2}, {"obj1", "square", "blue", 3, 4}};
  GridScene back = scene_from_json(scene_to_json(scene));
  REQUIRE(back.objects.size() == 2);
  CHECK(back.objects[1].shape == "square");
  CHECK(back.objects[1].x == 3);

  GridScene bare = scene_from_json(
      R"([{"id":"a","shape":"circle","color":"red","x":1,"y":1}])");
  CHECK(bare.objects.size() == 1);

  CHECK_THROWS(scene_from_json(
      R"({"width":5,"height":5,"objects":[{"id":"a","shape":"s","color":"c","x":9,"y":1}]})"));
  CHECK_THROWS(scene_from_json(
      R"([{"id":"a","shape":"s","color":"c","x":1,"y":1},
          {"id":"a","shape":"s","color":"c","x":2,"y":1}])"));
}

TEST_CASE("plans expose intermediate states") {
  GridScene start;
  start.objects = {{"obj0", "circle", "red", 1, 1}};
  GridScene goal = start;
  goal.objects[0].x = 3;
  PlanResult result = plan_scene(start, goal, 4);
  REQUIRE(result.found);
  REQUIRE(result.intermediate_states.size() == 2);
  CHECK(result.intermediate_states[0].objects[0].x == 2);
  CHECK(result.intermediate_states[1].objects[0].x == 3);
}
