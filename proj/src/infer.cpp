#include "nemesys/infer.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nemesys {

RuleWeights RuleWeights::one_hot(int num_candidates) {
  RuleWeights w;
  w.num_slots = num_candidates;
  w.num_candidates = num_candidates;
  w.logits.assign(static_cast<size_t>(num_candidates) * num_candidates, -30.0);
  for (int m = 0; m < num_candidates; ++m) w.at(m, m) = 30.0;
  return w;
}

std::vector<double> RuleWeights::normalized() const {
  std::vector<double> out(logits.size());
  for (int m = 0; m < num_slots; ++m) {
    double mx = at(m, 0);
    for (int i = 1; i < num_candidates; ++i) mx = std::max(mx, at(m, i));
    double sum = 0.0;
    for (int i = 0; i < num_candidates; ++i) {
      double e = std::exp(at(m, i) - mx);
      out[static_cast<size_t>(m) * num_candidates + i] = e;
      sum += e;
    }
    for (int i = 0; i < num_candidates; ++i)
      out[static_cast<size_t>(m) * num_candidates + i] /= sum;
  }
  return out;
}

double softor(const std::vector<double>& xs, double gamma, bool clamp) {
  if (xs.empty()) return 0.0;
  if (gamma <= 0.0) throw std::invalid_argument("softor: gamma must be positive");
  double mx = *std::max_element(xs.begin(), xs.end());
  double sum = 0.0;
  for (double x : xs) sum += std::exp((x - mx) / gamma);
  double raw = mx + gamma * std::log(sum);
  return clamp ? std::min(1.0, raw) : raw;
}

std::vector<double> gather_eval(const Valuation& v, const IndexTensor& tensor) {
  const int S = tensor.num_subst;
  const int L = tensor.body_len;
  std::vector<double> out(static_cast<size_t>(tensor.num_atoms) * S);
  for (int j = 0; j < tensor.num_atoms; ++j) {
    for (int k = 0; k < S; ++k) {
      double prod = 1.0;
      for (int l = 0; l < L; ++l) prod *= v[tensor.at(j, k, l)];
      out[static_cast<size_t>(j) * S + k] = prod;
    }
  }
  return out;
}

std::vector<double> combine_groundings(const std::vector<double>& body_scores,
                                       const IndexTensor& tensor, double gamma) {
  const int S = tensor.num_subst;
  std::vector<double> out(tensor.num_atoms);
  std::vector<double> row(S);
  for (int j = 0; j < tensor.num_atoms; ++j) {
    for (int k = 0; k < S; ++k) row[k] = body_scores[static_cast<size_t>(j) * S + k];
    out[j] = softor(row, gamma);
  }
  return out;
}

std::vector<double> combine_rules(const std::vector<std::vector<double>>& rule_scores,
                                  const RuleWeights& weights, double gamma,
                                  std::vector<double>* slot_scores) {
  const int C = static_cast<int>(rule_scores.size());
  if (C != weights.num_candidates)
    throw std::invalid_argument("combine_rules: weight columns do not match rule count");
  const int G = C > 0 ? static_cast<int>(rule_scores[0].size()) : 0;
  const int M = weights.num_slots;
  std::vector<double> wstar = weights.normalized();

  std::vector<double> h(static_cast<size_t>(G) * M, 0.0);
  for (int m = 0; m < M; ++m) {
    for (int i = 0; i < C; ++i) {
      double w = wstar[static_cast<size_t>(m) * C + i];
      if (w == 0.0) continue;
      const std::vector<double>& c = rule_scores[i];
      for (int j = 0; j < G; ++j) h[static_cast<size_t>(j) * M + m] += w * c[j];
    }
  }
  if (slot_scores) *slot_scores = h;

  std::vector<double> r(G);
  std::vector<double> row(M);
  for (int j = 0; j < G; ++j) {
    for (int m = 0; m < M; ++m) row[m] = h[static_cast<size_t>(j) * M + m];
    r[j] = softor(row, gamma);
  }
  return r;
}

Valuation forward_step(const Valuation& v, const std::vector<IndexTensor>& tensors,
                       const RuleWeights& weights, const ReasonerConfig& cfg,
                       StepTrace* trace) {
  if (tensors.empty()) {
    Valuation same = v;
    same[GroundAtomTable::kTop] = 1.0;
    same[GroundAtomTable::kBot] = 0.0;
    return same;
  }
  std::vector<std::vector<double>> rule_scores;
  rule_scores.reserve(tensors.size());
  for (const IndexTensor& t : tensors) {
    std::vector<double> b = gather_eval(v, t);
    rule_scores.push_back(combine_groundings(b, t, cfg.gamma));
    if (trace) trace->body_scores.push_back(std::move(b));
  }

  std::vector<double>* slots = trace ? &trace->slot_scores : nullptr;
  std::vector<double> r = combine_rules(rule_scores, weights, cfg.gamma, slots);
  if (trace) {
    trace->rule_scores = rule_scores;
    trace->combined = r;
  }

  Valuation next(v.size());
  for (size_t j = 0; j < v.size(); ++j)
    next[j] = softor({r[j], v[j]}, cfg.gamma, cfg.clamp);
  next[GroundAtomTable::kTop] = 1.0;
  next[GroundAtomTable::kBot] = 0.0;
  return next;
}

InferResult infer(const Valuation& v0, const std::vector<IndexTensor>& tensors,
                  const RuleWeights& weights, const ReasonerConfig& cfg) {
  InferResult out;
  out.valuation = v0;
  out.valuation[GroundAtomTable::kTop] = 1.0;
  out.valuation[GroundAtomTable::kBot] = 0.0;
  for (int t = 0; t < cfg.steps; ++t) {
    StepTrace trace;
    out.valuation =
        forward_step(out.valuation, tensors, weights, cfg, cfg.trace ? &trace : nullptr);
    if (cfg.trace) out.traces.push_back(std::move(trace));
  }
  return out;
}

Valuation initial_valuation(const GroundSpace& space) {
  Valuation v(space.table.size(), 0.0);
  v[GroundAtomTable::kTop] = 1.0;
  for (const SeedValue& s : space.seeds) v[s.index] = s.value;
  v[GroundAtomTable::kBot] = 0.0;
  return v;
}

}  // namespace nemesys
