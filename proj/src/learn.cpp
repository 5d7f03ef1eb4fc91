#include "nemesys/learn.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace nemesys {

namespace {

struct TapeHandles {
  NodeId theta = -1;
  NodeId weights = -1;
  NodeId final_valuation = -1;
  NodeId predictions = -1;
  NodeId loss = -1;
};

// Records the full reasoning computation. Mirrors forward_step/infer
// exactly; the parity test in tests/ keeps the two paths honest.
TapeHandles build_loss_tape(Tape& tape, const GroundSpace& space, const ParamSet& params,
                            const std::vector<int>& target_indices,
                            const std::vector<double>& target_probs,
                            const ReasonerConfig& cfg) {
  TapeHandles h;
  const int G = space.table.size();
  const int C = static_cast<int>(space.tensors.size());
  const int M = params.weights.num_slots;

  Valuation base = initial_valuation(space);
  NodeId v = tape.leaf(base, "v0_base");
  if (!params.valuation_indices.empty()) {
    h.theta = tape.leaf(params.valuation_logits, "valuation_logits");
    NodeId vals = tape.sigmoid(h.theta);
    v = tape.scatter(v, params.valuation_indices, vals);
  }
  v = tape.pin_reserved(v);

  h.weights = tape.leaf(params.weights.logits, "rule_logits");
  NodeId wstar = tape.softmax_rows(h.weights, M, C);

  for (int t = 0; t < cfg.steps && C > 0; ++t) {
    std::vector<NodeId> rule_scores;
    rule_scores.reserve(C);
    for (const IndexTensor& tensor : space.tensors) {
      NodeId b = tape.gather_prod(v, &tensor);
      NodeId c = tape.lse_rows(b, G, tensor.num_subst, cfg.gamma);
      rule_scores.push_back(tape.clamp_one(c));
    }
    NodeId slots = tape.weighted_slots(rule_scores, wstar, M);
    NodeId r = tape.clamp_one(tape.lse_rows(slots, G, M, cfg.gamma));
    NodeId raw = tape.softor_pair(r, v, cfg.gamma);
    v = tape.pin_reserved(cfg.clamp ? tape.clamp_one(raw) : raw);
  }

  h.final_valuation = v;
  h.predictions = tape.select(v, target_indices);
  h.loss = tape.bce(h.predictions, target_probs);
  return h;
}

RuleWeights apply_params(const GroundSpace& space, const ParamSet& params, Valuation& v0) {
  v0 = initial_valuation(space);
  for (size_t i = 0; i < params.valuation_indices.size(); ++i)
    v0[params.valuation_indices[i]] = 1.0 / (1.0 + std::exp(-params.valuation_logits[i]));
  return params.weights;
}

double entropy_floor(const std::vector<double>& targets) {
  double h = 0.0;
  for (double t : targets) h += bce_loss(t, t);
  return h;
}

struct Optimizer {
  double lr = 0.05;
  bool adam = false;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  int t = 0;
  std::vector<double> m;
  std::vector<double> v;

  void step(std::vector<double>& params, const std::vector<double>& grads) {
    if (!adam) {
      for (size_t i = 0; i < params.size(); ++i) params[i] -= lr * grads[i];
      return;
    }
    if (m.empty()) {
      m.assign(params.size(), 0.0);
      v.assign(params.size(), 0.0);
    }
    ++t;
    for (size_t i = 0; i < params.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * grads[i];
      v[i] = beta2 * v[i] + (1.0 - beta2) * grads[i] * grads[i];
      double mhat = m[i] / (1.0 - std::pow(beta1, t));
      double vhat = v[i] / (1.0 - std::pow(beta2, t));
      params[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
};

double norm(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x * x;
  return std::sqrt(s);
}

}  // namespace

double bce_loss(double target, double predicted) {
  double p = std::clamp(predicted, 1e-7, 1.0 - 1e-7);
  return -(target * std::log(p) + (1.0 - target) * std::log(1.0 - p));
}

std::vector<double> read_prediction(const Valuation& vT, const GroundAtomTable& table,
                                    const std::vector<Atom>& targets) {
  std::vector<double> out;
  out.reserve(targets.size());
  for (const Atom& a : targets) {
    auto idx = table.find(a.to_term());
    if (!idx) throw std::runtime_error("unknown target atom: " + render(a));
    out.push_back(vT[*idx]);
  }
  return out;
}

GradResult eval_with_grad(const GroundSpace& space, const ParamSet& params,
                          const std::vector<int>& target_indices,
                          const std::vector<double>& target_probs,
                          const ReasonerConfig& cfg) {
  Tape tape;
  TapeHandles h = build_loss_tape(tape, space, params, target_indices, target_probs, cfg);
  tape.backward(h.loss);

  GradResult out;
  out.loss = tape.value(h.loss)[0];
  out.predictions = tape.value(h.predictions);
  out.final_valuation = tape.value(h.final_valuation);
  if (params.train_valuations && h.theta >= 0) {
    out.d_valuation_logits = tape.grad(h.theta);
  } else {
    out.d_valuation_logits.assign(params.valuation_logits.size(), 0.0);
  }
  if (params.train_weights) {
    out.d_weight_logits = tape.grad(h.weights);
  } else {
    out.d_weight_logits.assign(params.weights.logits.size(), 0.0);
  }
  return out;
}

double eval_loss(const GroundSpace& space, const ParamSet& params,
                 const std::vector<int>& target_indices,
                 const std::vector<double>& target_probs, const ReasonerConfig& cfg) {
  Valuation v0;
  RuleWeights w = apply_params(space, params, v0);
  Valuation vT = infer(v0, space.tensors, w, cfg).valuation;
  double loss = 0.0;
  for (size_t i = 0; i < target_indices.size(); ++i)
    loss += bce_loss(target_probs[i], vT[target_indices[i]]);
  return loss;
}

DoLearnResult learn_do(const Program& network,
                       const std::vector<std::pair<Atom, double>>& targets,
                       const std::vector<Term>& candidates, const LearnConfig& cfg) {
  DoLearnResult result;
  std::vector<double> target_probs;
  for (const auto& [atom, prob] : targets) target_probs.push_back(prob);
  double floor = entropy_floor(target_probs);

  for (size_t ci = 0; ci < candidates.size(); ++ci) {
    const Term& site = candidates[ci];
    std::mt19937 rng(cfg.seed * 977 + static_cast<unsigned>(ci) * 131 + 17);
    std::uniform_real_distribution<double> u(0.1, 0.9);

    EngineOptions opts;
    opts.interpreter = "causal";
    opts.grounding.do_sites = {site};
    opts.reasoner.gamma = cfg.gamma;
    opts.reasoner.steps = cfg.infer_steps;
    Engine engine = build_engine(network, opts);

    std::vector<int> target_idx;
    for (const auto& [atom, prob] : targets) {
      Term readout = Term::compound("probs_do", {atom.to_term(), site});
      auto idx = engine.space.table.find(readout);
      if (!idx) throw std::runtime_error("intervention readout missing: " + render(readout));
      target_idx.push_back(*idx);
    }
    int do_index = engine.space.table.find(Term::compound("do", {site})).value();

    ParamSet params;
    params.train_valuations = true;
    params.valuation_indices = {do_index};
    double init = u(rng);
    params.valuation_logits = {std::log(init / (1.0 - init))};
    params.weights = engine.one_hot();

    Optimizer opt;
    opt.lr = cfg.step_size;
    opt.adam = cfg.adam;
    DoCandidateResult cand;
    cand.site = site;
    GradResult last;
    for (int it = 0; it < cfg.steps; ++it) {
      last = eval_with_grad(engine.space, params, target_idx, target_probs, engine.reasoner);
      opt.step(params.valuation_logits, last.d_valuation_logits);
      if (it % cfg.report_every == 0 || it + 1 == cfg.steps) {
        LossReport rep;
        rep.iteration = it;
        rep.loss = last.loss;
        rep.grad_norm = norm(last.d_valuation_logits);
        rep.params["value"] = 1.0 / (1.0 + std::exp(-params.valuation_logits[0]));
        cand.trajectory.push_back(std::move(rep));
      }
    }
    cand.final_loss =
        eval_loss(engine.space, params, target_idx, target_probs, engine.reasoner);
    cand.learned_value = 1.0 / (1.0 + std::exp(-params.valuation_logits[0]));
    result.candidates.push_back(std::move(cand));
  }

  result.winner = 0;
  for (size_t i = 1; i < result.candidates.size(); ++i)
    if (result.candidates[i].final_loss < result.candidates[result.winner].final_loss)
      result.winner = static_cast<int>(i);
  result.converged =
      !result.candidates.empty() &&
      result.candidates[result.winner].final_loss <= floor + 0.1;
  return result;
}

std::vector<std::pair<Atom, double>> subset_targets(const Engine& engine,
                                                    const std::vector<int>& rule_ids,
                                                    const std::vector<int>& contrast_ids,
                                                    const std::string& entry_pred) {
  const int C = static_cast<int>(engine.space.tensors.size());
  auto run_subset = [&](const std::vector<int>& ids) {
    RuleWeights w;
    w.num_slots = static_cast<int>(ids.size());
    w.num_candidates = C;
    w.logits.assign(static_cast<size_t>(w.num_slots) * C, -30.0);
    for (int m = 0; m < w.num_slots; ++m) w.at(m, ids[m]) = 30.0;
    return infer(engine.v0(), engine.space.tensors, w, engine.reasoner).valuation;
  };
  Valuation truth = run_subset(rule_ids);
  Valuation contrast = run_subset(contrast_ids);

  std::set<int> seed_indices;
  for (const SeedValue& s : engine.space.seeds) seed_indices.insert(s.index);

  std::vector<std::pair<Atom, double>> out;
  for (int j = 2; j < engine.space.table.size(); ++j) {
    if (seed_indices.count(j)) continue;
    const Term& atom = engine.space.table.atom(j);
    if (atom.name() != entry_pred && !(entry_pred == "*" && is_reserved_predicate(atom.name())))
      continue;
    if (truth[j] >= 0.5) {
      out.push_back({Atom::from_term(atom), truth[j]});
    } else if (contrast[j] >= 0.5) {
      out.push_back({Atom::from_term(atom), 0.0});
    }
  }
  return out;
}

StructureLearnResult learn_structure(const Engine& engine, int slots,
                                     const std::vector<StructureTask>& tasks,
                                     const LearnConfig& cfg) {
  const int C = static_cast<int>(engine.space.tensors.size());
  std::mt19937 rng(cfg.seed);
  std::uniform_real_distribution<double> u(-0.3, 0.3);

  ParamSet params;
  params.train_weights = true;
  params.weights.num_slots = slots;
  params.weights.num_candidates = C;
  if (cfg.init_logits) {
    params.weights.logits = *cfg.init_logits;
    if (params.weights.logits.size() != static_cast<size_t>(slots) * C)
      throw std::invalid_argument("init_logits size does not match slots x candidates");
  } else {
    params.weights.logits.resize(static_cast<size_t>(slots) * C);
    for (double& x : params.weights.logits) x = u(rng);
  }

  ReasonerConfig rcfg = engine.reasoner;
  rcfg.gamma = cfg.gamma;

  StructureLearnResult result;
  for (const StructureTask& task : tasks) {
    // Fresh moment estimates per task phase: stale curvature from the
    // previous task stalls the switch.
    Optimizer opt;
    opt.lr = cfg.step_size;
    opt.adam = cfg.adam;
    std::vector<int> idx;
    std::vector<double> probs;
    for (const auto& [atom, p] : task.train_targets) {
      idx.push_back(engine.space.table.find(atom.to_term()).value());
      probs.push_back(p);
    }

    StructurePhaseResult phase;
    phase.task = task.name;
    for (int it = 0; it < task.iterations; ++it) {
      GradResult g = eval_with_grad(engine.space, params, idx, probs, rcfg);
      opt.step(params.weights.logits, g.d_weight_logits);
      // Bounded logits keep the softmax recoverable when the task
      // switches; unbounded plateau drift would freeze later phases.
      for (double& x : params.weights.logits) x = std::clamp(x, -8.0, 8.0);
      if (it % cfg.report_every == 0 || it + 1 == task.iterations) {
        LossReport rep;
        rep.iteration = it;
        rep.loss = g.loss;
        rep.grad_norm = norm(g.d_weight_logits);
        phase.trajectory.push_back(std::move(rep));
      }
    }

    std::vector<double> wstar = params.weights.normalized();
    for (int m = 0; m < slots; ++m) {
      int best = 0;
      double best_w = wstar[static_cast<size_t>(m) * C];
      double second = -1.0;
      for (int i = 1; i < C; ++i) {
        double w = wstar[static_cast<size_t>(m) * C + i];
        if (w > best_w) {
          second = best_w;
          best_w = w;
          best = i;
        } else {
          second = std::max(second, w);
        }
      }
      phase.selection.push_back(best);
      phase.slot_tied.push_back(second >= 0.0 && best_w - second < 1e-6);
    }
    for (int rule : task.true_rules) {
      double best = 0.0;
      for (int m = 0; m < slots; ++m)
        best = std::max(best, wstar[static_cast<size_t>(m) * C + rule]);
      phase.true_rule_weight[rule] = best;
    }

    Valuation v0;
    RuleWeights w = apply_params(engine.space, params, v0);
    Valuation vT = infer(v0, engine.space.tensors, w, rcfg).valuation;
    int correct = 0;
    for (const auto& [atom, p] : task.holdout_targets) {
      double pred = vT[engine.space.table.find(atom.to_term()).value()];
      if ((pred >= 0.5) == (p >= 0.5)) ++correct;
    }
    phase.holdout_accuracy =
        task.holdout_targets.empty()
            ? 1.0
            : static_cast<double>(correct) / static_cast<double>(task.holdout_targets.size());
    result.phases.push_back(std::move(phase));
  }
  result.weights = params.weights;
  return result;
}

}  // namespace nemesys
