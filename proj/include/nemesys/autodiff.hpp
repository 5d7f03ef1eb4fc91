#ifndef NEMESYS_AUTODIFF_HPP
#define NEMESYS_AUTODIFF_HPP

#include <string>
#include <vector>

#include "nemesys/grounder.hpp"

namespace nemesys {

using NodeId = int;

// Reverse-mode tape over the vector operations the reasoner is made of.
// Forward values are computed eagerly at node creation; backward() runs
// one reverse sweep. Non-finite values abort with the offending node id.
class Tape {
 public:
  NodeId leaf(std::vector<double> value, const std::string& name = "leaf");

  NodeId sigmoid(NodeId x);
  // Copy of `base` with value(values)[i] written at position indices[i].
  NodeId scatter(NodeId base, std::vector<int> indices, NodeId values);
  // Row-wise softmax of an R x C matrix (flattened).
  NodeId softmax_rows(NodeId logits, int rows, int cols);
  // out[j,k] = prod_l v[tensor(j,k,l)]; `tensor` must outlive the tape.
  NodeId gather_prod(NodeId v, const IndexTensor* tensor);
  // Raw scaled log-sum-exp along rows of an R x C matrix.
  NodeId lse_rows(NodeId x, int rows, int cols, double gamma);
  // h[j,m] = sum_i wstar[m,i] * c_i[j] over C per-rule score vectors.
  NodeId weighted_slots(const std::vector<NodeId>& rule_scores, NodeId wstar, int slots);
  // Elementwise raw softor of two equally sized vectors.
  NodeId softor_pair(NodeId a, NodeId b, double gamma);
  // min(1, x); subgradient 0 beyond the ceiling.
  NodeId clamp_one(NodeId x);
  // Overwrite the reserved true/false entries with 1 and 0.
  NodeId pin_reserved(NodeId v);
  NodeId select(NodeId v, std::vector<int> indices);
  // Summed binary cross entropy against fixed targets, predictions
  // clipped to [1e-7, 1 - 1e-7].
  NodeId bce(NodeId predictions, std::vector<double> targets);

  const std::vector<double>& value(NodeId id) const { return nodes_[id].value; }
  const std::vector<double>& grad(NodeId id) const { return nodes_[id].grad; }

  // Reverse sweep from a scalar output.
  void backward(NodeId output);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  enum class Op {
    Leaf,
    Sigmoid,
    Scatter,
    SoftmaxRows,
    GatherProd,
    LseRows,
    WeightedSlots,
    SoftorPair,
    ClampOne,
    PinReserved,
    Select,
    Bce,
  };

  struct Node {
    Op op;
    std::string name;
    std::vector<NodeId> inputs;
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<int> indices;
    std::vector<double> targets;
    const IndexTensor* tensor = nullptr;
    int rows = 0;
    int cols = 0;
    double gamma = 0.0;
  };

  NodeId push(Node node);
  void check_finite(const std::vector<double>& xs, NodeId id, const char* stage) const;
  void backward_node(Node& node);

  std::vector<Node> nodes_;
};

}  // namespace nemesys

#endif
