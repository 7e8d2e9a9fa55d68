#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "compatkit/tensor.hpp"

namespace compatkit::toy {

/// Handle to a node recorded on a Graph.
struct Var {
  std::size_t id = 0;
};

/// Define-by-run tape for reverse-mode differentiation of a scalar loss.
///
/// Nodes are appended in evaluation order, so reverse creation order is a valid
/// topological order for the backward sweep. Gradients are only materialized for
/// nodes that depend on a parameter; constants (frozen base weights, teacher
/// inputs) never receive a gradient buffer.
class Graph {
 public:
  Var constant(Tensor2 value);
  Var parameter(Tensor2 value);

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  /// a (m x n) plus a 1 x n row broadcast over every row.
  Var add_row(Var a, Var row);
  Var scale(Var a, double factor);
  Var tanh(Var a);
  /// Row q is the mean of the `table` rows indexed by contexts[q].
  Var pooled_rows(Var table, std::span<const std::vector<int>> contexts);
  /// sum_i w_i * sum_k p_ik (log p_ik - log softmax(z_i / T)_k), a 1 x 1 node.
  /// With one-hot targets and T = 1 this is weighted cross-entropy.
  Var soft_target_loss(Var logits, Tensor2 target_probs, std::vector<double> row_weights, double temperature);

  const Tensor2& value(Var v) const;
  bool requires_grad(Var v) const;
  /// Gradient of the last backward() loss w.r.t. `v`. Throws if no gradient exists.
  std::span<const double> grad(Var v) const;

  /// Reverse sweep from a 1 x 1 node. Throws Error on an empty graph or a non-scalar node.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Tensor2 value;
    bool requires_grad = false;
    std::function<void(Graph&, std::size_t)> backprop;
  };

  Var push(Tensor2 value, bool requires_grad, std::function<void(Graph&, std::size_t)> backprop);
  Node& node(Var v);
  const Node& node(Var v) const;
  std::span<double> grad_of(std::size_t id);

  std::vector<Node> nodes_;
};

}  // namespace compatkit::toy
