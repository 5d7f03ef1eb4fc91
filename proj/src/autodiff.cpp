#include "nemesys/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nemesys {

namespace {
constexpr double kBceClip = 1e-7;
}

NodeId Tape::push(Node node) {
  NodeId id = static_cast<NodeId>(nodes_.size());
  check_finite(node.value, id, "forward");
  node.grad.assign(node.value.size(), 0.0);
  nodes_.push_back(std::move(node));
  return id;
}

void Tape::check_finite(const std::vector<double>& xs, NodeId id, const char* stage) const {
  for (double x : xs) {
    if (!std::isfinite(x))
      throw std::runtime_error("non-finite " + std::string(stage) + " value at node " +
                               std::to_string(id) +
                               (id < static_cast<NodeId>(nodes_.size())
                                    ? " (" + nodes_[id].name + ")"
                                    : std::string()));
  }
}

NodeId Tape::leaf(std::vector<double> value, const std::string& name) {
  Node n;
  n.op = Op::Leaf;
  n.name = name;
  n.value = std::move(value);
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId x) {
  Node n;
  n.op = Op::Sigmoid;
  n.name = "sigmoid";
  n.inputs = {x};
  n.value.reserve(value(x).size());
  for (double v : value(x)) n.value.push_back(1.0 / (1.0 + std::exp(-v)));
  return push(std::move(n));
}

NodeId Tape::scatter(NodeId base, std::vector<int> indices, NodeId values) {
  Node n;
  n.op = Op::Scatter;
  n.name = "scatter";
  n.inputs = {base, values};
  n.indices = std::move(indices);
  n.value = value(base);
  const std::vector<double>& vals = value(values);
  if (vals.size() != n.indices.size())
    throw std::invalid_argument("scatter: index/value size mismatch");
  for (size_t i = 0; i < n.indices.size(); ++i) n.value[n.indices[i]] = vals[i];
  return push(std::move(n));
}

NodeId Tape::softmax_rows(NodeId logits, int rows, int cols) {
  Node n;
  n.op = Op::SoftmaxRows;
  n.name = "softmax_rows";
  n.inputs = {logits};
  n.rows = rows;
  n.cols = cols;
  const std::vector<double>& x = value(logits);
  n.value.assign(x.size(), 0.0);
  for (int r = 0; r < rows; ++r) {
    double mx = x[static_cast<size_t>(r) * cols];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, x[static_cast<size_t>(r) * cols + c]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c) {
      double e = std::exp(x[static_cast<size_t>(r) * cols + c] - mx);
      n.value[static_cast<size_t>(r) * cols + c] = e;
      sum += e;
    }
    for (int c = 0; c < cols; ++c) n.value[static_cast<size_t>(r) * cols + c] /= sum;
  }
  return push(std::move(n));
}

NodeId Tape::gather_prod(NodeId v, const IndexTensor* tensor) {
  Node n;
  n.op = Op::GatherProd;
  n.name = "gather_prod";
  n.inputs = {v};
  n.tensor = tensor;
  const std::vector<double>& x = value(v);
  n.value.assign(static_cast<size_t>(tensor->num_atoms) * tensor->num_subst, 0.0);
  for (int j = 0; j < tensor->num_atoms; ++j) {
    for (int k = 0; k < tensor->num_subst; ++k) {
      double prod = 1.0;
      for (int l = 0; l < tensor->body_len; ++l) prod *= x[tensor->at(j, k, l)];
      n.value[static_cast<size_t>(j) * tensor->num_subst + k] = prod;
    }
  }
  return push(std::move(n));
}

NodeId Tape::lse_rows(NodeId x, int rows, int cols, double gamma) {
  Node n;
  n.op = Op::LseRows;
  n.name = "lse_rows";
  n.inputs = {x};
  n.rows = rows;
  n.cols = cols;
  n.gamma = gamma;
  const std::vector<double>& in = value(x);
  n.value.assign(rows, 0.0);
  for (int r = 0; r < rows; ++r) {
    double mx = in[static_cast<size_t>(r) * cols];
    for (int c = 1; c < cols; ++c) mx = std::max(mx, in[static_cast<size_t>(r) * cols + c]);
    double sum = 0.0;
    for (int c = 0; c < cols; ++c)
      sum += std::exp((in[static_cast<size_t>(r) * cols + c] - mx) / gamma);
    n.value[r] = mx + gamma * std::log(sum);
  }
  return push(std::move(n));
}

NodeId Tape::weighted_slots(const std::vector<NodeId>& rule_scores, NodeId wstar, int slots) {
  Node n;
  n.op = Op::WeightedSlots;
  n.name = "weighted_slots";
  n.inputs = rule_scores;
  n.inputs.push_back(wstar);
  n.rows = slots;
  n.cols = static_cast<int>(rule_scores.size());
  const int C = n.cols;
  const int G = static_cast<int>(value(rule_scores[0]).size());
  const std::vector<double>& w = value(wstar);
  n.value.assign(static_cast<size_t>(G) * slots, 0.0);
  for (int m = 0; m < slots; ++m) {
    for (int i = 0; i < C; ++i) {
      double wi = w[static_cast<size_t>(m) * C + i];
      if (wi == 0.0) continue;
      const std::vector<double>& c = value(rule_scores[i]);
      for (int j = 0; j < G; ++j) n.value[static_cast<size_t>(j) * slots + m] += wi * c[j];
    }
  }
  return push(std::move(n));
}

NodeId Tape::softor_pair(NodeId a, NodeId b, double gamma) {
  Node n;
  n.op = Op::SoftorPair;
  n.name = "softor_pair";
  n.inputs = {a, b};
  n.gamma = gamma;
  const std::vector<double>& xa = value(a);
  const std::vector<double>& xb = value(b);
  n.value.assign(xa.size(), 0.0);
  for (size_t i = 0; i < xa.size(); ++i) {
    double mx = std::max(xa[i], xb[i]);
    n.value[i] =
        mx + gamma * std::log(std::exp((xa[i] - mx) / gamma) + std::exp((xb[i] - mx) / gamma));
  }
  return push(std::move(n));
}

NodeId Tape::clamp_one(NodeId x) {
  Node n;
  n.op = Op::ClampOne;
  n.name = "clamp_one";
  n.inputs = {x};
  n.value.reserve(value(x).size());
  for (double v : value(x)) n.value.push_back(std::min(1.0, v));
  return push(std::move(n));
}

NodeId Tape::pin_reserved(NodeId v) {
  Node n;
  n.op = Op::PinReserved;
  n.name = "pin_reserved";
  n.inputs = {v};
  n.value = value(v);
  n.value[GroundAtomTable::kTop] = 1.0;
  n.value[GroundAtomTable::kBot] = 0.0;
  return push(std::move(n));
}

NodeId Tape::select(NodeId v, std::vector<int> indices) {
  Node n;
  n.op = Op::Select;
  n.name = "select";
  n.inputs = {v};
  n.indices = std::move(indices);
  const std::vector<double>& x = value(v);
  for (int idx : n.indices) n.value.push_back(x[idx]);
  return push(std::move(n));
}

NodeId Tape::bce(NodeId predictions, std::vector<double> targets) {
  Node n;
  n.op = Op::Bce;
  n.name = "bce";
  n.inputs = {predictions};
  n.targets = std::move(targets);
  const std::vector<double>& p = value(predictions);
  if (p.size() != n.targets.size()) throw std::invalid_argument("bce: size mismatch");
  double loss = 0.0;
  for (size_t i = 0; i < p.size(); ++i) {
    double q = std::clamp(p[i], kBceClip, 1.0 - kBceClip);
    loss += -(n.targets[i] * std::log(q) + (1.0 - n.targets[i]) * std::log(1.0 - q));
  }
  n.value = {loss};
  return push(std::move(n));
}

void Tape::backward(NodeId output) {
  if (nodes_[output].value.size() != 1)
    throw std::invalid_argument("backward: output must be scalar");
  for (Node& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
  nodes_[output].grad[0] = 1.0;
  for (NodeId id = output; id >= 0; --id) {
    backward_node(nodes_[id]);
    check_finite(nodes_[id].grad, id, "gradient");
  }
}

void Tape::backward_node(Node& n) {
  switch (n.op) {
    case Op::Leaf:
      return;
    case Op::Sigmoid: {
      std::vector<double>& gx = nodes_[n.inputs[0]].grad;
      for (size_t i = 0; i < n.value.size(); ++i)
        gx[i] += n.grad[i] * n.value[i] * (1.0 - n.value[i]);
      return;
    }
    case Op::Scatter: {
      std::vector<double>& gbase = nodes_[n.inputs[0]].grad;
      std::vector<double>& gvals = nodes_[n.inputs[1]].grad;
      std::vector<bool> overwritten(n.value.size(), false);
      for (size_t i = 0; i < n.indices.size(); ++i) {
        gvals[i] += n.grad[n.indices[i]];
        overwritten[n.indices[i]] = true;
      }
      for (size_t i = 0; i < n.value.size(); ++i)
        if (!overwritten[i]) gbase[i] += n.grad[i];
      return;
    }
    case Op::SoftmaxRows: {
      std::vector<double>& gx = nodes_[n.inputs[0]].grad;
      for (int r = 0; r < n.rows; ++r) {
        double dot = 0.0;
        for (int c = 0; c < n.cols; ++c) {
          size_t i = static_cast<size_t>(r) * n.cols + c;
          dot += n.grad[i] * n.value[i];
        }
        for (int c = 0; c < n.cols; ++c) {
          size_t i = static_cast<size_t>(r) * n.cols + c;
          gx[i] += n.value[i] * (n.grad[i] - dot);
        }
      }
      return;
    }
    case Op::GatherProd: {
      std::vector<double>& gv = nodes_[n.inputs[0]].grad;
      const std::vector<double>& v = nodes_[n.inputs[0]].value;
      const IndexTensor* t = n.tensor;
      for (int j = 0; j < t->num_atoms; ++j) {
        for (int k = 0; k < t->num_subst; ++k) {
          double g = n.grad[static_cast<size_t>(j) * t->num_subst + k];
          if (g == 0.0) continue;
          for (int l = 0; l < t->body_len; ++l) {
            double partial = 1.0;
            for (int l2 = 0; l2 < t->body_len; ++l2)
              if (l2 != l) partial *= v[t->at(j, k, l2)];
            gv[t->at(j, k, l)] += g * partial;
          }
        }
      }
      return;
    }
    case Op::LseRows: {
      std::vector<double>& gx = nodes_[n.inputs[0]].grad;
      const std::vector<double>& x = nodes_[n.inputs[0]].value;
      for (int r = 0; r < n.rows; ++r) {
        if (n.grad[r] == 0.0) continue;
        for (int c = 0; c < n.cols; ++c) {
          size_t i = static_cast<size_t>(r) * n.cols + c;
          gx[i] += n.grad[r] * std::exp((x[i] - n.value[r]) / n.gamma);
        }
      }
      return;
    }
    case Op::WeightedSlots: {
      const int C = n.cols;
      const int M = n.rows;
      NodeId wstar = n.inputs.back();
      const std::vector<double>& w = nodes_[wstar].value;
      std::vector<double>& gw = nodes_[wstar].grad;
      const int G = static_cast<int>(nodes_[n.inputs[0]].value.size());
      for (int i = 0; i < C; ++i) {
        std::vector<double>& gc = nodes_[n.inputs[i]].grad;
        const std::vector<double>& c = nodes_[n.inputs[i]].value;
        for (int m = 0; m < M; ++m) {
          double wi = w[static_cast<size_t>(m) * C + i];
          double acc = 0.0;
          for (int j = 0; j < G; ++j) {
            double g = n.grad[static_cast<size_t>(j) * M + m];
            gc[j] += g * wi;
            acc += g * c[j];
          }
          gw[static_cast<size_t>(m) * C + i] += acc;
        }
      }
      return;
    }
    case Op::SoftorPair: {
      std::vector<double>& ga = nodes_[n.inputs[0]].grad;
      std::vector<double>& gb = nodes_[n.inputs[1]].grad;
      const std::vector<double>& a = nodes_[n.inputs[0]].value;
      const std::vector<double>& b = nodes_[n.inputs[1]].value;
      for (size_t i = 0; i < n.value.size(); ++i) {
        if (n.grad[i] == 0.0) continue;
        double wa = std::exp((a[i] - n.value[i]) / n.gamma);
        double wb = std::exp((b[i] - n.value[i]) / n.gamma);
        ga[i] += n.grad[i] * wa;
        gb[i] += n.grad[i] * wb;
      }
      return;
    }
    case Op::ClampOne: {
      std::vector<double>& gx = nodes_[n.inputs[0]].grad;
      const std::vector<double>& x = nodes_[n.inputs[0]].value;
      for (size_t i = 0; i < n.value.size(); ++i)
        if (x[i] <= 1.0) gx[i] += n.grad[i];
      return;
    }
    case Op::PinReserved: {
      std::vector<double>& gx = nodes_[n.inputs[0]].grad;
      for (size_t i = 0; i < n.value.size(); ++i) {
        if (i == GroundAtomTable::kTop || i == GroundAtomTable::kBot) continue;
        gx[i] += n.grad[i];
      }
      return;
    }
    case Op::Select: {
      std::vector<double>& gv = nodes_[n.inputs[0]].grad;
      for (size_t i = 0; i < n.indices.size(); ++i) gv[n.indices[i]] += n.grad[i];
      return;
    }
    case Op::Bce: {
      std::vector<double>& gp = nodes_[n.inputs[0]].grad;
      const std::vector<double>& p = nodes_[n.inputs[0]].value;
      for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] < kBceClip || p[i] > 1.0 - kBceClip) continue;  // clipped flat
        gp[i] += n.grad[0] * (p[i] - n.targets[i]) / (p[i] * (1.0 - p[i]));
      }
      return;
    }
  }
}

}  // namespace nemesys
