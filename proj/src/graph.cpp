#include "mte/graph.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "mte/error.hpp"
#include "mte/rng.hpp"

namespace mte {

NodeId Graph::push(Tensor value, std::function<void(Graph&)> back) {
  nodes_.push_back(Node{std::move(value), {}, std::move(back)});
  return nodes_.size() - 1;
}

std::vector<double>& Graph::grad_of(NodeId id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad.assign(n.value.numel(), 0.0);
  return n.grad;
}

NodeId Graph::constant(Tensor value) { return push(std::move(value), nullptr); }

NodeId Graph::param(Tensor& t) {
  Tensor* bound = &t;
  NodeId id = push(t, nullptr);
  nodes_[id].back = [id, bound](Graph& g) {
    bound->ensure_grad();
    const auto& d = g.nodes_[id].grad;
    auto& acc = *bound->grad;
    for (std::size_t i = 0; i < d.size(); ++i) acc[i] += d[i];
  };
  return id;
}

NodeId Graph::matmul(NodeId a, NodeId b) {
  Tensor out = mte::matmul(nodes_[a].value, nodes_[b].value);
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, b](Graph& g) {
    matmul_backward(g.nodes_[a].value, g.nodes_[b].value, g.nodes_[id].grad, g.grad_of(a),
                    g.grad_of(b));
  };
  return id;
}

NodeId Graph::add(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.shape != tb.shape) {
    throw DimensionError("add: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] += tb.data[i];
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, b](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    auto& db = g.grad_of(b);
    for (std::size_t i = 0; i < d.size(); ++i) {
      da[i] += d[i];
      db[i] += d[i];
    }
  };
  return id;
}

NodeId Graph::add_rowvec(NodeId m, NodeId row) {
  const Tensor& tm = nodes_[m].value;
  const Tensor& tr = nodes_[row].value;
  if (tm.cols() != tr.numel()) {
    throw DimensionError("add_rowvec: " + shape_str(tm.shape) + " vs bias " + shape_str(tr.shape));
  }
  Tensor out = tm;
  const std::size_t r = tm.rows(), c = tm.cols();
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) out.data[i * c + j] += tr.data[j];
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, m, row, r, c](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& dm = g.grad_of(m);
    auto& dr = g.grad_of(row);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) {
        dm[i * c + j] += d[i * c + j];
        dr[j] += d[i * c + j];
      }
  };
  return id;
}

NodeId Graph::hadamard(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.shape != tb.shape) {
    throw DimensionError("hadamard: shape " + shape_str(ta.shape) + " vs " + shape_str(tb.shape));
  }
  Tensor out = ta;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= tb.data[i];
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, b](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    const auto& va = g.nodes_[a].value.data;
    const auto& vb = g.nodes_[b].value.data;
    auto& da = g.grad_of(a);
    auto& db = g.grad_of(b);
    for (std::size_t i = 0; i < d.size(); ++i) {
      da[i] += d[i] * vb[i];
      db[i] += d[i] * va[i];
    }
  };
  return id;
}

NodeId Graph::affine(NodeId a, double scale, double shift) {
  Tensor out = nodes_[a].value;
  for (double& v : out.data) v = scale * v + shift;
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, scale](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += scale * d[i];
  };
  return id;
}

NodeId Graph::relu(NodeId a) {
  Tensor out = activation(nodes_[a].value, Activation::Relu);
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    const auto& x = g.nodes_[a].value.data;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) {
      if (x[i] > 0.0) da[i] += d[i];
    }
  };
  return id;
}

NodeId Graph::sigmoid(NodeId a) {
  Tensor out = activation(nodes_[a].value, Activation::Sigmoid);
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    const auto& y = g.nodes_[id].value.data;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * y[i] * (1.0 - y[i]);
  };
  return id;
}

NodeId Graph::tanh_(NodeId a) {
  Tensor out = activation(nodes_[a].value, Activation::Tanh);
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    const auto& y = g.nodes_[id].value.data;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * (1.0 - y[i] * y[i]);
  };
  return id;
}

NodeId Graph::softmax_rows(NodeId a) {
  Tensor out = activation(nodes_[a].value, Activation::SoftmaxRows);
  NodeId id = push(std::move(out), nullptr);
  const std::size_t r = nodes_[id].value.rows(), c = nodes_[id].value.cols();
  nodes_[id].back = [id, a, r, c](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    const auto& y = g.nodes_[id].value.data;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < r; ++i) {
      double dot = 0.0;
      for (std::size_t j = 0; j < c; ++j) dot += d[i * c + j] * y[i * c + j];
      for (std::size_t j = 0; j < c; ++j) {
        da[i * c + j] += y[i * c + j] * (d[i * c + j] - dot);
      }
    }
  };
  return id;
}

NodeId Graph::dropout(NodeId a, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  const Tensor& x = nodes_[a].value;
  if (!training || rate == 0.0) {
    Tensor out = x;
    NodeId id = push(std::move(out), nullptr);
    nodes_[id].back = [id, a](Graph& g) {
      const auto& d = g.nodes_[id].grad;
      auto& da = g.grad_of(a);
      for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
    };
    return id;
  }
  const double keep = 1.0 - rate;
  std::vector<double> mask(x.numel());
  for (double& mv : mask) mv = rng.uniform() < rate ? 0.0 : 1.0 / keep;
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) out.data[i] *= mask[i];
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, mask = std::move(mask)](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i] * mask[i];
  };
  return id;
}

NodeId Graph::concat_cols(std::span<const NodeId> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t r = nodes_[parts[0]].value.rows();
  std::size_t total = 0;
  for (NodeId p : parts) {
    if (nodes_[p].value.rows() != r) {
      throw DimensionError("concat_cols: row mismatch " + shape_str(nodes_[p].value.shape));
    }
    total += nodes_[p].value.cols();
  }
  Tensor out({r, total});
  std::size_t off = 0;
  for (NodeId p : parts) {
    const Tensor& t = nodes_[p].value;
    const std::size_t c = t.cols();
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) out.data[i * total + off + j] = t.data[i * c + j];
    off += c;
  }
  std::vector<NodeId> ids(parts.begin(), parts.end());
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, ids, r, total](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    std::size_t off = 0;
    for (NodeId p : ids) {
      const std::size_t c = g.nodes_[p].value.cols();
      auto& dp = g.grad_of(p);
      for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j) dp[i * c + j] += d[i * total + off + j];
      off += c;
    }
  };
  return id;
}

NodeId Graph::slice_cols(NodeId a, std::size_t begin, std::size_t end) {
  const Tensor& t = nodes_[a].value;
  const std::size_t r = t.rows(), c = t.cols();
  if (begin >= end || end > c) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + "," + std::to_string(end) +
                         ") out of " + shape_str(t.shape));
  }
  const std::size_t w = end - begin;
  Tensor out({r, w});
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < w; ++j) out.data[i * w + j] = t.data[i * c + begin + j];
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, begin, r, c, w](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < w; ++j) da[i * c + begin + j] += d[i * w + j];
  };
  return id;
}

NodeId Graph::gather_rows(NodeId a, std::vector<std::size_t> rows) {
  const Tensor& t = nodes_[a].value;
  const std::size_t c = t.cols();
  Tensor out({rows.size(), c});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = &t.data[rows[i] * c];
    std::copy(src, src + c, &out.data[i * c]);
  }
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, rows = std::move(rows), c](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (std::size_t j = 0; j < c; ++j) da[rows[i] * c + j] += d[i * c + j];
  };
  return id;
}

NodeId Graph::reshape(NodeId a, Shape shape) {
  const Tensor& t = nodes_[a].value;
  if (shape_numel(shape) != t.numel()) {
    throw DimensionError("reshape: " + shape_str(t.shape) + " to " + shape_str(shape));
  }
  Tensor out = t;
  out.shape = std::move(shape);
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t i = 0; i < d.size(); ++i) da[i] += d[i];
  };
  return id;
}

NodeId Graph::rowgroup_max(NodeId a, std::vector<std::size_t> groups, std::size_t n_groups) {
  const Tensor& t = nodes_[a].value;
  const std::size_t r = t.rows(), c = t.cols();
  if (groups.size() != r) {
    throw DimensionError("rowgroup_max: group list size " + std::to_string(groups.size()) +
                         " vs rows " + std::to_string(r));
  }
  Tensor out({n_groups, c}, -std::numeric_limits<double>::infinity());
  std::vector<std::size_t> argrow(n_groups * c, r);
  for (std::size_t i = 0; i < r; ++i) {
    const std::size_t gId = groups[i];
    for (std::size_t j = 0; j < c; ++j) {
      const double v = t.data[i * c + j];
      if (v > out.data[gId * c + j]) {
        out.data[gId * c + j] = v;
        argrow[gId * c + j] = i;
      }
    }
  }
  NodeId id = push(std::move(out), nullptr);
  nodes_[id].back = [id, a, argrow = std::move(argrow), c, r](Graph& g) {
    const auto& d = g.nodes_[id].grad;
    auto& da = g.grad_of(a);
    for (std::size_t k = 0; k < d.size(); ++k) {
      if (argrow[k] < r) da[argrow[k] * c + k % c] += d[k];
    }
  };
  return id;
}

NodeId Graph::sum(NodeId a) {
  double total = 0.0;
  for (double v : nodes_[a].value.data) total += v;
  NodeId id = push(Tensor::scalar(total), nullptr);
  nodes_[id].back = [id, a](Graph& g) {
    const double d = g.nodes_[id].grad[0];
    auto& da = g.grad_of(a);
    for (double& v : da) v += d;
  };
  return id;
}

NodeId Graph::mse_loss(NodeId pred, NodeId gold) {
  const Tensor& p = nodes_[pred].value;
  const Tensor& t = nodes_[gold].value;
  const double v = loss(p, t, LossKind::MeanSquaredError);
  NodeId id = push(Tensor::scalar(v), nullptr);
  nodes_[id].back = [id, pred, gold](Graph& g) {
    const double d = g.nodes_[id].grad[0];
    const auto& pv = g.nodes_[pred].value.data;
    const auto& tv = g.nodes_[gold].value.data;
    auto& dp = g.grad_of(pred);
    const double scale = 2.0 * d / static_cast<double>(pv.size());
    for (std::size_t i = 0; i < pv.size(); ++i) dp[i] += scale * (pv[i] - tv[i]);
  };
  return id;
}

NodeId Graph::cross_entropy_loss(NodeId probs, NodeId onehot) {
  const Tensor& p = nodes_[probs].value;
  const Tensor& t = nodes_[onehot].value;
  const double v = loss(p, t, LossKind::CategoricalCrossEntropy);
  const std::size_t rows = p.shape.size() == 2 ? p.rows() : 1;
  NodeId id = push(Tensor::scalar(v), nullptr);
  nodes_[id].back = [id, probs, onehot, rows](Graph& g) {
    const double d = g.nodes_[id].grad[0];
    const auto& pv = g.nodes_[probs].value.data;
    const auto& tv = g.nodes_[onehot].value.data;
    auto& dp = g.grad_of(probs);
    const double scale = d / static_cast<double>(rows);
    for (std::size_t i = 0; i < pv.size(); ++i) dp[i] -= scale * tv[i] / (pv[i] + 1e-12);
  };
  return id;
}

NodeId Graph::weighted_sum(std::span<const NodeId> scalars, std::span<const double> weights) {
  if (scalars.size() != weights.size() || scalars.empty()) {
    throw DimensionError("weighted_sum: needs matching non-empty node/weight lists");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < scalars.size(); ++i) total += weights[i] * scalar(scalars[i]);
  std::vector<NodeId> ids(scalars.begin(), scalars.end());
  std::vector<double> ws(weights.begin(), weights.end());
  NodeId id = push(Tensor::scalar(total), nullptr);
  nodes_[id].back = [id, ids = std::move(ids), ws = std::move(ws)](Graph& g) {
    const double d = g.nodes_[id].grad[0];
    for (std::size_t i = 0; i < ids.size(); ++i) g.grad_of(ids[i])[0] += ws[i] * d;
  };
  return id;
}

void Graph::backward(NodeId root) {
  if (nodes_[root].value.numel() != 1) {
    throw DimensionError("backward: root must be scalar, got " +
                         shape_str(nodes_[root].value.shape));
  }
  grad_of(root)[0] = 1.0;
  for (NodeId id = root + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.grad.empty() && n.back) n.back(*this);
  }
}

}  // namespace mte
