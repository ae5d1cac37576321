#ifndef MTE_GRAPH_HPP_
#define MTE_GRAPH_HPP_

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "mte/tensor.hpp"

namespace mte {

class Rng;

using NodeId = std::size_t;

// Reverse-mode tape. Nodes reference only earlier nodes, so backward() is a
// single reverse sweep. Parameter leaves accumulate into the bound tensor's
// grad buffer; everything else keeps its gradient inside the tape and is
// discarded with the graph after the step.
class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  NodeId constant(Tensor value);
  // `t` must outlive the graph; backward adds this leaf's gradient into t.grad.
  NodeId param(Tensor& t);

  NodeId matmul(NodeId a, NodeId b);
  NodeId add(NodeId a, NodeId b);
  // Broadcasts a 1xN bias row over every row of `m`.
  NodeId add_rowvec(NodeId m, NodeId row);
  NodeId hadamard(NodeId a, NodeId b);
  // Elementwise scale*x + shift.
  NodeId affine(NodeId a, double scale, double shift);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  NodeId tanh_(NodeId a);
  NodeId softmax_rows(NodeId a);
  NodeId dropout(NodeId a, double rate, bool training, Rng& rng);
  NodeId concat_cols(std::span<const NodeId> parts);
  NodeId slice_cols(NodeId a, std::size_t begin, std::size_t end);
  NodeId gather_rows(NodeId a, std::vector<std::size_t> rows);
  NodeId reshape(NodeId a, Shape shape);
  // Per-column max over each row group; groups[r] in [0, n_groups).
  NodeId rowgroup_max(NodeId a, std::vector<std::size_t> groups, std::size_t n_groups);

  // Scalar-valued reductions.
  NodeId sum(NodeId a);
  NodeId mse_loss(NodeId pred, NodeId gold);
  NodeId cross_entropy_loss(NodeId probs, NodeId onehot);
  NodeId weighted_sum(std::span<const NodeId> scalars, std::span<const double> weights);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  double scalar(NodeId id) const { return nodes_[id].value.data[0]; }
  std::size_t size() const { return nodes_.size(); }

  // Seeds d(root)=1 and sweeps the tape in reverse creation order.
  void backward(NodeId root);

 private:
  struct Node {
    Tensor value;
    std::vector<double> grad;  // lazily sized
    std::function<void(Graph&)> back;  // empty for leaves/constants
  };

  NodeId push(Tensor value, std::function<void(Graph&)> back);
  std::vector<double>& grad_of(NodeId id);
  bool has_grad(NodeId id) const { return !nodes_[id].grad.empty(); }

  std::deque<Node> nodes_;
};

}  // namespace mte

#endif  // MTE_GRAPH_HPP_
