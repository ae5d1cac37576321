#include "mte/layers.hpp"

#include <cmath>

#include "mte/error.hpp"

namespace mte {

void glorot_init(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (double& v : t.data) v = rng.uniform(-a, a);
}

std::vector<double> EmbeddingTable::vector_of(const std::string& token) const {
  auto it = vocab.find(token);
  if (it != vocab.end()) {
    const double* row = &matrix.data[it->second * dim];
    return std::vector<double>(row, row + dim);
  }
  if (oov_policy == OovPolicy::Zero) return std::vector<double>(dim, 0.0);
  // Deterministic per-token stream: identical vector on every call.
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : token) h = (h ^ c) * 1099511628211ULL;
  Rng rng = Rng(oov_seed).split(h);
  std::vector<double> out(dim);
  for (double& v : out) v = rng.uniform(-0.05, 0.05);
  return out;
}

Tensor embed(const std::vector<std::string>& tokens, const EmbeddingTable& table,
             std::size_t max_len) {
  Tensor out({max_len, table.dim});
  const std::size_t n = std::min(tokens.size(), max_len);  // right-truncate
  const std::size_t pad = max_len - n;                     // left-pad
  for (std::size_t t = 0; t < n; ++t) {
    const std::vector<double> v = table.vector_of(tokens[t]);
    std::copy(v.begin(), v.end(), &out.data[(pad + t) * table.dim]);
  }
  return out;
}

BatchEmbedding embed_batch(const std::vector<std::vector<std::string>>& sequences,
                           const EmbeddingTable& table, std::size_t max_len) {
  BatchEmbedding out;
  out.batch = sequences.size();
  out.steps = max_len;
  out.dim = table.dim;
  out.stacked = Tensor({out.batch * max_len, table.dim});
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    Tensor e = embed(sequences[i], table, max_len);
    std::copy(e.data.begin(), e.data.end(), &out.stacked.data[i * max_len * table.dim]);
  }
  return out;
}

Dense::Dense(const std::string& name, std::size_t in_, std::size_t out_, Activation act_, Rng rng)
    : in(in_), out(out_), act(act_) {
  w = Param{name + ".w", Tensor({in, out})};
  b = Param{name + ".b", Tensor({1, out})};
  glorot_init(w.value, in, out, rng.split(0));
}

NodeId Dense::forward(Graph& g, NodeId x) {
  NodeId y = g.add_rowvec(g.matmul(x, g.param(w.value)), g.param(b.value));
  switch (act) {
    case Activation::Identity: return y;
    case Activation::Relu: return g.relu(y);
    case Activation::Sigmoid: return g.sigmoid(y);
    case Activation::Tanh: return g.tanh_(y);
    case Activation::SoftmaxRows: return g.softmax_rows(y);
  }
  return y;
}

void Dense::collect(std::vector<Param*>& into) {
  into.push_back(&w);
  into.push_back(&b);
}

Conv1d::Conv1d(const std::string& name, std::size_t width_, std::size_t in_dim_,
               std::size_t filters_, Rng rng)
    : width(width_), in_dim(in_dim_), filters(filters_) {
  w = Param{name + ".w", Tensor({width * in_dim, filters})};
  b = Param{name + ".b", Tensor({1, filters})};
  glorot_init(w.value, width * in_dim, filters, rng.split(0));
}

NodeId Conv1d::forward(Graph& g, NodeId x, std::size_t batch, std::size_t steps) {
  if (steps < width) {
    throw DimensionError("conv1d: sequence of " + std::to_string(steps) +
                         " steps shorter than filter width " + std::to_string(width));
  }
  const std::size_t positions = steps - width + 1;
  std::vector<std::size_t> rows;
  rows.reserve(batch * positions * width);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t p = 0; p < positions; ++p)
      for (std::size_t k = 0; k < width; ++k) rows.push_back(i * steps + p + k);
  NodeId windows = g.reshape(g.gather_rows(x, std::move(rows)),
                             {batch * positions, width * in_dim});
  return g.relu(g.add_rowvec(g.matmul(windows, g.param(w.value)), g.param(b.value)));
}

void Conv1d::collect(std::vector<Param*>& into) {
  into.push_back(&w);
  into.push_back(&b);
}

NodeId local_maxpool2(Graph& g, NodeId x, std::size_t batch, std::size_t steps) {
  const std::size_t pooled = (steps + 1) / 2;
  std::vector<std::size_t> groups(batch * steps);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t t = 0; t < steps; ++t) groups[i * steps + t] = i * pooled + t / 2;
  return g.rowgroup_max(x, std::move(groups), batch * pooled);
}

NodeId global_maxpool(Graph& g, NodeId x, std::size_t batch, std::size_t steps) {
  std::vector<std::size_t> groups(batch * steps);
  for (std::size_t i = 0; i < batch; ++i)
    for (std::size_t t = 0; t < steps; ++t) groups[i * steps + t] = i;
  return g.rowgroup_max(x, std::move(groups), batch);
}

Tensor conv1d_maxpool(const Tensor& x, const Conv1d& conv) {
  Tensor padded = x;
  if (x.rows() < conv.width) {
    padded = Tensor({conv.width, x.cols()});
    std::copy(x.data.begin(), x.data.end(), padded.data.begin());
  }
  Graph g;
  Conv1d c = conv;  // bind a throwaway copy; this is a pure forward helper
  NodeId out = global_maxpool(g, c.forward(g, g.constant(padded), 1, padded.rows()), 1,
                              padded.rows() - conv.width + 1);
  return g.value(out);
}

LstmLayer::LstmLayer(const std::string& name, std::size_t in_, std::size_t hidden_, Rng rng)
    : in(in_), hidden(hidden_) {
  wx = Param{name + ".wx", Tensor({in, 4 * hidden})};
  wh = Param{name + ".wh", Tensor({hidden, 4 * hidden})};
  b = Param{name + ".b", Tensor({1, 4 * hidden})};
  glorot_init(wx.value, in, 4 * hidden, rng.split(0));
  glorot_init(wh.value, hidden, 4 * hidden, rng.split(1));
}

std::vector<NodeId> LstmLayer::forward(Graph& g, const std::vector<NodeId>& steps) {
  const std::size_t h = hidden;
  NodeId wx_n = g.param(wx.value);
  NodeId wh_n = g.param(wh.value);
  NodeId b_n = g.param(b.value);
  std::vector<NodeId> hidden_seq;
  hidden_seq.reserve(steps.size());
  NodeId h_prev = 0, c_prev = 0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    NodeId pre = g.add_rowvec(g.matmul(steps[t], wx_n), b_n);
    if (t > 0) pre = g.add(pre, g.matmul(h_prev, wh_n));
    NodeId gi = g.sigmoid(g.slice_cols(pre, 0, h));
    NodeId gf = g.sigmoid(g.slice_cols(pre, h, 2 * h));
    NodeId gc = g.tanh_(g.slice_cols(pre, 2 * h, 3 * h));
    NodeId go = g.sigmoid(g.slice_cols(pre, 3 * h, 4 * h));
    NodeId c = (t > 0) ? g.add(g.hadamard(gf, c_prev), g.hadamard(gi, gc)) : g.hadamard(gi, gc);
    NodeId h_t = g.hadamard(go, g.tanh_(c));
    hidden_seq.push_back(h_t);
    h_prev = h_t;
    c_prev = c;
  }
  return hidden_seq;
}

void LstmLayer::collect(std::vector<Param*>& into) {
  into.push_back(&wx);
  into.push_back(&wh);
  into.push_back(&b);
}

GruLayer::GruLayer(const std::string& name, std::size_t in_, std::size_t hidden_, Rng rng)
    : in(in_), hidden(hidden_) {
  wx = Param{name + ".wx", Tensor({in, 3 * hidden})};
  wh_zr = Param{name + ".wh_zr", Tensor({hidden, 2 * hidden})};
  wh_c = Param{name + ".wh_c", Tensor({hidden, hidden})};
  b = Param{name + ".b", Tensor({1, 3 * hidden})};
  glorot_init(wx.value, in, 3 * hidden, rng.split(0));
  glorot_init(wh_zr.value, hidden, 2 * hidden, rng.split(1));
  glorot_init(wh_c.value, hidden, hidden, rng.split(2));
}

std::vector<NodeId> GruLayer::forward(Graph& g, const std::vector<NodeId>& steps) {
  const std::size_t h = hidden;
  NodeId wx_n = g.param(wx.value);
  NodeId wh_zr_n = g.param(wh_zr.value);
  NodeId wh_c_n = g.param(wh_c.value);
  NodeId b_n = g.param(b.value);
  std::vector<NodeId> hidden_seq;
  hidden_seq.reserve(steps.size());
  NodeId h_prev = 0;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    NodeId pre_x = g.add_rowvec(g.matmul(steps[t], wx_n), b_n);  // B x 3H
    NodeId z_pre = g.slice_cols(pre_x, 0, h);
    NodeId r_pre = g.slice_cols(pre_x, h, 2 * h);
    NodeId c_pre = g.slice_cols(pre_x, 2 * h, 3 * h);
    if (t > 0) {
      NodeId rec = g.matmul(h_prev, wh_zr_n);  // B x 2H
      z_pre = g.add(z_pre, g.slice_cols(rec, 0, h));
      r_pre = g.add(r_pre, g.slice_cols(rec, h, 2 * h));
    }
    NodeId z = g.sigmoid(z_pre);
    NodeId r = g.sigmoid(r_pre);
    NodeId cand_pre = c_pre;
    if (t > 0) cand_pre = g.add(cand_pre, g.matmul(g.hadamard(r, h_prev), wh_c_n));
    NodeId cand = g.tanh_(cand_pre);
    NodeId h_t;
    if (t > 0) {
      h_t = g.add(g.hadamard(g.affine(z, -1.0, 1.0), h_prev), g.hadamard(z, cand));
    } else {
      h_t = g.hadamard(z, cand);
    }
    hidden_seq.push_back(h_t);
    h_prev = h_t;
  }
  return hidden_seq;
}

void GruLayer::collect(std::vector<Param*>& into) {
  into.push_back(&wx);
  into.push_back(&wh_zr);
  into.push_back(&wh_c);
  into.push_back(&b);
}

}  // namespace mte
