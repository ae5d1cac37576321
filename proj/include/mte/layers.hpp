#ifndef MTE_LAYERS_HPP_
#define MTE_LAYERS_HPP_

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "mte/graph.hpp"
#include "mte/rng.hpp"
#include "mte/tensor.hpp"

namespace mte {

// Named trainable tensor; the unit of checkpointing and optimization.
struct Param {
  std::string name;
  Tensor value;
};

// uniform(-a, a), a = sqrt(6 / (fan_in + fan_out)).
void glorot_init(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng rng);

// Frozen word-vector table. OOV tokens are either zero or a deterministic
// uniform(-0.05, 0.05) vector derived from (oov_seed, token). The pad rows
// produced by embed() are always zero.
struct EmbeddingTable {
  enum class OovPolicy { Zero, SeededUniform };

  std::unordered_map<std::string, std::size_t> vocab;
  Tensor matrix;  // V x dim
  std::size_t dim = 300;
  OovPolicy oov_policy = OovPolicy::Zero;
  std::uint64_t oov_seed = 0;

  std::vector<double> vector_of(const std::string& token) const;
};

// Right-truncates to max_len tokens, left-pads with zero rows; always returns
// a max_len x dim tensor. An empty sequence yields all pad rows.
Tensor embed(const std::vector<std::string>& tokens, const EmbeddingTable& table,
             std::size_t max_len);

// One batch of embedded sequences stacked row-wise: row i*steps + t is
// instance i at step t.
struct BatchEmbedding {
  Tensor stacked;  // (batch*steps) x dim
  std::size_t batch = 0;
  std::size_t steps = 0;
  std::size_t dim = 0;
};

BatchEmbedding embed_batch(const std::vector<std::vector<std::string>>& sequences,
                           const EmbeddingTable& table, std::size_t max_len);

struct Dense {
  Param w;  // in x out
  Param b;  // 1 x out
  std::size_t in = 0, out = 0;
  Activation act = Activation::Identity;

  Dense() = default;
  Dense(const std::string& name, std::size_t in, std::size_t out, Activation act, Rng rng);

  NodeId forward(Graph& g, NodeId x);  // x: B x in
  void collect(std::vector<Param*>& into);
};

// Valid 1-D convolution of one filter width + bias + relu over a stacked
// batch of equal-length sequences.
struct Conv1d {
  Param w;  // (width*in_dim) x filters
  Param b;  // 1 x filters
  std::size_t width = 0, in_dim = 0, filters = 0;

  Conv1d() = default;
  Conv1d(const std::string& name, std::size_t width, std::size_t in_dim, std::size_t filters,
         Rng rng);

  // x: (batch*steps) x in_dim with steps >= width; returns (batch*positions) x filters,
  // positions = steps - width + 1.
  NodeId forward(Graph& g, NodeId x, std::size_t batch, std::size_t steps);
  void collect(std::vector<Param*>& into);
};

// Max over window-2 stride-2 row pairs within each instance.
NodeId local_maxpool2(Graph& g, NodeId x, std::size_t batch, std::size_t steps);
// Max over all of an instance's rows: (batch*steps) x f -> batch x f.
NodeId global_maxpool(Graph& g, NodeId x, std::size_t batch, std::size_t steps);

// Single op form: conv + relu + global max over time for one width; pads the
// sequence with zero rows up to `width` when it is too short.
Tensor conv1d_maxpool(const Tensor& x, const Conv1d& conv);

// Standard LSTM layer (gates i, f, o sigmoid; candidate tanh), h0 = c0 = 0.
struct LstmLayer {
  Param wx;  // in x 4H
  Param wh;  // H x 4H
  Param b;   // 1 x 4H
  std::size_t in = 0, hidden = 0;

  LstmLayer() = default;
  LstmLayer(const std::string& name, std::size_t in, std::size_t hidden, Rng rng);

  // steps[t]: B x in nodes; returns the full hidden sequence (B x H each).
  std::vector<NodeId> forward(Graph& g, const std::vector<NodeId>& steps);
  void collect(std::vector<Param*>& into);
};

// Standard GRU: z/r sigmoid, candidate tanh over (x, r .* h_prev),
// h = (1-z) .* h_prev + z .* candidate; h0 = 0.
struct GruLayer {
  Param wx;    // in x 3H (z | r | candidate)
  Param wh_zr; // H x 2H
  Param wh_c;  // H x H
  Param b;     // 1 x 3H
  std::size_t in = 0, hidden = 0;

  GruLayer() = default;
  GruLayer(const std::string& name, std::size_t in, std::size_t hidden, Rng rng);

  std::vector<NodeId> forward(Graph& g, const std::vector<NodeId>& steps);
  void collect(std::vector<Param*>& into);
};

}  // namespace mte

#endif  // MTE_LAYERS_HPP_
