#ifndef NEMESYS_INFER_HPP
#define NEMESYS_INFER_HPP

#include <vector>

#include "nemesys/grounder.hpp"

namespace nemesys {

// Soft truth assignment over the ground atom table. Entry 0 (true atom)
// is pinned to 1 and entry 1 (false atom) to 0 at every step.
using Valuation = std::vector<double>;

// M x C selection logits; row-wise softmax softly picks one rule per
// program slot.
struct RuleWeights {
  int num_slots = 0;       // M
  int num_candidates = 0;  // C
  std::vector<double> logits;

  double& at(int m, int i) { return logits[static_cast<size_t>(m) * num_candidates + i]; }
  double at(int m, int i) const { return logits[static_cast<size_t>(m) * num_candidates + i]; }

  // One slot per candidate, hard logits (+30 / -30): the identity
  // selection used whenever a fixed interpreter runs.
  static RuleWeights one_hot(int num_candidates);
  // Row-wise softmax.
  std::vector<double> normalized() const;
};

struct ReasonerConfig {
  // T; 0 lets the engine pick 2 + the boolean derivation depth.
  int steps = 0;
  double gamma = 0.01;  // softor smoothing
  bool clamp = true;
  bool trace = false;
};

// Per-step tensors for inspection: b (C x G x S), c (C x G), h (G x M),
// r (G).
struct StepTrace {
  std::vector<std::vector<double>> body_scores;  // per rule, G*S flattened
  std::vector<std::vector<double>> rule_scores;  // per rule, G
  std::vector<double> slot_scores;               // G*M flattened
  std::vector<double> combined;                  // G
};

struct InferResult {
  Valuation valuation;
  std::vector<StepTrace> traces;
};

// Smooth logical or: gamma * log sum exp(x/gamma), computed with
// max-subtraction; clamped to 1 when `clamp`. Empty input gives 0.
double softor(const std::vector<double>& xs, double gamma, bool clamp = true);

// b_i[j,k] = prod_l v[I_i[j,k,l]]  (Eqs. 1-2), flattened G*S.
std::vector<double> gather_eval(const Valuation& v, const IndexTensor& tensor);

// c_i[j] = softor_k b_i[j,k]  (Eqs. 3-4).
std::vector<double> combine_groundings(const std::vector<double>& body_scores,
                                       const IndexTensor& tensor, double gamma);

// h[j,m] = sum_i w*[m,i] c_i[j]; r[j] = softor_m h[j,m]  (Eqs. 5-6).
std::vector<double> combine_rules(const std::vector<std::vector<double>>& rule_scores,
                                  const RuleWeights& weights, double gamma,
                                  std::vector<double>* slot_scores = nullptr);

// One reasoning step: v'[j] = softor(r[j], v[j]), true/false re-pinned.
Valuation forward_step(const Valuation& v, const std::vector<IndexTensor>& tensors,
                       const RuleWeights& weights, const ReasonerConfig& cfg,
                       StepTrace* trace = nullptr);

// T-step forward reasoning from v0.
InferResult infer(const Valuation& v0, const std::vector<IndexTensor>& tensors,
                  const RuleWeights& weights, const ReasonerConfig& cfg);

// Initial valuation from the grounding seeds.
Valuation initial_valuation(const GroundSpace& space);

}  // namespace nemesys

#endif
