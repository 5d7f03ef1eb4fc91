#ifndef NEMESYS_LEARN_HPP
#define NEMESYS_LEARN_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nemesys/autodiff.hpp"
#include "nemesys/engine.hpp"
#include "nemesys/infer.hpp"

namespace nemesys {

// Trainable leaves: selected initial-valuation entries via a logit
// reparameterization (kept strictly inside (0,1)) plus the rule weight
// logits. Everything else receives zero gradient.
struct ParamSet {
  std::vector<int> valuation_indices;
  std::vector<double> valuation_logits;
  RuleWeights weights;
  bool train_valuations = false;
  bool train_weights = false;
};

struct GradResult {
  double loss = 0.0;
  std::vector<double> predictions;
  std::vector<double> d_valuation_logits;
  std::vector<double> d_weight_logits;
  Valuation final_valuation;
};

// Records the reasoning computation on a tape and returns exact
// reverse-mode gradients for every trainable leaf; non-trainable leaves
// report zero.
GradResult eval_with_grad(const GroundSpace& space, const ParamSet& params,
                          const std::vector<int>& target_indices,
                          const std::vector<double>& target_probs,
                          const ReasonerConfig& cfg);

// Loss evaluation along the plain forward kernel; the finite-difference
// oracle in the tests drives this path.
double eval_loss(const GroundSpace& space, const ParamSet& params,
                 const std::vector<int>& target_indices,
                 const std::vector<double>& target_probs, const ReasonerConfig& cfg);

// Binary cross entropy with predictions clipped to [1e-7, 1-1e-7].
double bce_loss(double target, double predicted);

// vT readout per target atom; throws on atoms outside the table.
std::vector<double> read_prediction(const Valuation& vT, const GroundAtomTable& table,
                                    const std::vector<Atom>& targets);

struct LearnConfig {
  double step_size = 0.05;
  int steps = 1000;
  unsigned seed = 0;
  bool adam = false;  // optional first/second-moment adaptation
  double gamma = 1e-3;
  int infer_steps = 0;  // 0 = auto
  int report_every = 50;
  // Structure learning: fixed initial logits instead of random init.
  std::optional<std::vector<double>> init_logits;
};

struct LossReport {
  int iteration = 0;
  double loss = 0.0;
  std::map<std::string, double> params;
  double grad_norm = 0.0;
};

struct DoCandidateResult {
  Term site;
  double final_loss = 0.0;
  double learned_value = 0.0;
  std::vector<LossReport> trajectory;
};

struct DoLearnResult {
  std::vector<DoCandidateResult> candidates;  // input order
  int winner = -1;
  bool converged = false;  // best loss within margin of the entropy floor
};

// Recover an unobserved intervention: one independent run per candidate
// site, winner by lowest final loss. Targets are observed probabilities
// per network node.
DoLearnResult learn_do(const Program& network,
                       const std::vector<std::pair<Atom, double>>& targets,
                       const std::vector<Term>& candidates, const LearnConfig& cfg);

struct StructureTask {
  std::string name;
  std::vector<std::pair<Atom, double>> train_targets;
  std::vector<std::pair<Atom, double>> holdout_targets;
  std::vector<int> true_rules;  // candidate indices that solve the task
  int iterations = 200;
};

struct StructurePhaseResult {
  std::string task;
  std::vector<int> selection;           // per-slot argmax
  std::vector<bool> slot_tied;          // two rules within 1e-6
  std::map<int, double> true_rule_weight;  // rule id -> best softmax weight
  double holdout_accuracy = 0.0;
  std::vector<LossReport> trajectory;
};

struct StructureLearnResult {
  RuleWeights weights;
  std::vector<StructurePhaseResult> phases;
};

// Sequential multi-task structure learning over the candidate rule pool
// of `engine` (built with the multitask interpreter): learns W with M
// slots, switching targets between phases.
StructureLearnResult learn_structure(const Engine& engine, int slots,
                                     const std::vector<StructureTask>& tasks,
                                     const LearnConfig& cfg);

// Targets for a task phase: positives carry the valuation computed by a
// one-hot run restricted to `rule_ids`; negatives are atoms the
// contrasting subset derives, at target 0. Seed atoms never qualify.
std::vector<std::pair<Atom, double>> subset_targets(const Engine& engine,
                                                    const std::vector<int>& rule_ids,
                                                    const std::vector<int>& contrast_ids,
                                                    const std::string& entry_pred);

}  // namespace nemesys

#endif
