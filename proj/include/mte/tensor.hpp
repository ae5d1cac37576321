#ifndef MTE_TENSOR_HPP_
#define MTE_TENSOR_HPP_

#include <cstddef>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

namespace mte {

using Shape = std::vector<std::size_t>;

std::string shape_str(const Shape& s);
std::size_t shape_numel(const Shape& s);

// Dense row-major array of doubles with an optional same-shape gradient
// buffer. Value-semantic; all higher layers build on it.
struct Tensor {
  Shape shape;
  std::vector<double> data;
  std::optional<std::vector<double>> grad;

  Tensor() = default;
  Tensor(Shape s, double fill = 0.0)
      : shape(std::move(s)), data(shape_numel(shape), fill) {}
  Tensor(Shape s, std::vector<double> values);

  static Tensor zeros(const Shape& s) { return Tensor(s); }
  static Tensor scalar(double v) { return Tensor({1}, {v}); }
  static Tensor row(std::vector<double> values);

  std::size_t numel() const { return data.size(); }
  std::size_t rows() const { return shape.empty() ? 0 : shape[0]; }
  std::size_t cols() const { return shape.size() < 2 ? 1 : shape[1]; }

  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  // Allocates (or zeroes) the gradient buffer.
  void ensure_grad();
  void zero_grad();
  bool all_finite() const;
};

enum class Activation { Identity, Relu, Sigmoid, Tanh, SoftmaxRows };

enum class LossKind { CategoricalCrossEntropy, MeanSquaredError };

// --- eager primitives -------------------------------------------------------
// Forward kernels plus explicit backward kernels that accumulate exact
// gradients; the autograd tape in graph.hpp is built from the same kernels.

Tensor matmul(const Tensor& a, const Tensor& b);
// dA += dOut * B^T, dB += A^T * dOut. dA/dB must be pre-sized like a/b.
void matmul_backward(const Tensor& a, const Tensor& b, const std::vector<double>& d_out,
                     std::vector<double>& d_a, std::vector<double>& d_b);

Tensor activation(const Tensor& x, Activation kind);

// Inverted dropout: training=true zeroes each element with probability
// `rate` and scales survivors by 1/(1-rate); training=false is the identity.
Tensor dropout(const Tensor& x, double rate, bool training, class Rng& rng);

double loss(const Tensor& pred, const Tensor& gold, LossKind kind);

}  // namespace mte

#endif  // MTE_TENSOR_HPP_
