#ifndef NEMESYS_APPS_HPP
#define NEMESYS_APPS_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nemesys/engine.hpp"
#include "nemesys/term.hpp"

namespace nemesys {

// Proof tree decoded from a reified proof term: leaves are facts proven
// by `true`, internal nodes are clause applications.
struct ProofTree {
  Term goal;
  std::vector<ProofTree> children;
  bool leaf = false;

  static ProofTree decode(const Term& proof_term);
  Term to_term() const;  // round-trips with decode
  std::string pretty(int indent = 0) const;
  std::vector<Term> leaves() const;
};

struct ScoredProof {
  ProofTree tree;
  double valuation = 0.0;
  Term proof_term;
};

// All solve(goal, Proof) entries above `threshold`, sorted by valuation
// descending. The goal may contain variables.
std::vector<ScoredProof> extract_proof(const Atom& goal, const Valuation& vT,
                                       const Engine& engine, double threshold);

// Product-semantics replay of a proof from the engine's seed weights;
// checks extracted valuations independently of the tensor path.
double replay_proof(const ProofTree& tree, const Engine& engine);

struct RelevanceReport {
  Atom goal;
  std::vector<std::pair<Term, double>> scores;  // sorted descending
  std::vector<Term> proofs;
};

// Relevance scores per ground atom: combined rp(goal, proof, atom)
// valuations. Empty `atoms` scores everything with an rp entry.
RelevanceReport relevance(const Atom& goal, const std::vector<Term>& atoms,
                          const Valuation& vT, const Engine& engine);

struct DepthSolveResult {
  Term goal_instance;
  double valuation = 0.0;
};

// Depth-limited solving: valuations of li(goal, max_depth), one entry
// per matching instance when the goal contains variables.
std::vector<DepthSolveResult> solve_depth_limited(const Program& program, const Atom& goal,
                                                  int max_depth,
                                                  GroundingConfig grounding = {});

struct CausalQuery {
  Atom query;
  double pre = 0.0;                // prob(query)
  std::optional<double> post;     // probs_do(query, site)
};

struct CausalRunResult {
  std::vector<CausalQuery> queries;
  std::optional<Term> site;
  double intervention_value = 1.0;
  GroundingReport grounding;
};

// Forward causal queries over a weighted acyclic network, optionally
// under one intervention. Cyclic networks are rejected.
CausalRunResult run_causal(const Program& network,
                           std::optional<std::pair<Term, double>> intervention,
                           const std::vector<Atom>& queries);

struct SceneObject {
  std::string id;
  std::string shape;
  std::string color;
  int x = 1;
  int y = 1;
};

struct GridScene {
  int width = 5;
  int height = 5;
  std::vector<SceneObject> objects;
};

GridScene scene_from_json(const std::string& json_text);
std::string scene_to_json(const GridScene& scene);

struct AxisPlan {
  std::string object_id;
  bool horizontal = true;
  std::vector<std::string> actions;  // execution order
  double valuation = 0.0;
};

struct PlanResult {
  std::vector<AxisPlan> plans;
  std::vector<std::string> unreachable;  // object ids without a plan
  std::vector<GridScene> intermediate_states;
  bool found = false;
};

// Per-object, per-axis differentiable planning between two scenes.
PlanResult plan_scene(const GridScene& start, const GridScene& goal, int max_moves);

// Coordinate simulator, independent of the logic engine: applies the
// action stacks and reports whether the goal is reached exactly.
// Throws when an action leaves the grid.
std::pair<GridScene, bool> validate_plan(const GridScene& start, const GridScene& goal,
                                         const PlanResult& result);

struct ClassifyResult {
  double score = 0.0;
  bool label = false;
  GroundingReport grounding;
};

// Scene classification at the symbolic level: scene facts plus pattern
// rules, scored by the valuation of solve(pattern_head).
ClassifyResult classify_scene(const GridScene& scene, const Program& pattern_rules,
                              const Atom& pattern_head, double threshold = 0.5);

// Scene facts (shape/color/position plus distinctness helpers) merged
// with the pattern rules; exposed for tests.
Program scene_program(const GridScene& scene, const Program& pattern_rules);

// The bundled two-pairs pattern: two disjoint same-shape pairs.
Program two_pairs_pattern();
Atom two_pairs_head();

}  // namespace nemesys

#endif
