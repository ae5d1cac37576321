#include "mte/tensor.hpp"

#include <Eigen/Core>

#include <cmath>
#include <sstream>

#include "mte/error.hpp"
#include "mte/rng.hpp"

namespace mte {

namespace {

using MatMap = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using MutMatMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

}  // namespace

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) os << 'x';
    os << s[i];
  }
  os << ')';
  return os.str();
}

std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t d : s) n *= d;
  return s.empty() ? 0 : n;
}

Tensor::Tensor(Shape s, std::vector<double> values) : shape(std::move(s)), data(std::move(values)) {
  if (shape_numel(shape) != data.size()) {
    throw DimensionError("tensor shape " + shape_str(shape) + " does not match " +
                         std::to_string(data.size()) + " values");
  }
}

Tensor Tensor::row(std::vector<double> values) {
  const std::size_t n = values.size();
  return Tensor({1, n}, std::move(values));
}

void Tensor::ensure_grad() {
  if (!grad) {
    grad.emplace(data.size(), 0.0);
  } else if (grad->size() != data.size()) {
    grad->assign(data.size(), 0.0);
  }
}

void Tensor::zero_grad() {
  ensure_grad();
  std::fill(grad->begin(), grad->end(), 0.0);
}

bool Tensor::all_finite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.shape.size() != 2 || b.shape.size() != 2 || a.shape[1] != b.shape[0]) {
    throw DimensionError("matmul: incompatible shapes " + shape_str(a.shape) + " and " +
                         shape_str(b.shape));
  }
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor out({m, n});
  // Row-at-a-time so each output row is computed by the identical operation
  // sequence regardless of batch size or row position; permuting a batch
  // permutes the output bit-exactly.
  MatMap A(a.data.data(), m, k), B(b.data.data(), k, n);
  MutMatMap C(out.data.data(), m, n);
  for (std::size_t i = 0; i < m; ++i) C.row(i).noalias() = A.row(i) * B;
  return out;
}

void matmul_backward(const Tensor& a, const Tensor& b, const std::vector<double>& d_out,
                     std::vector<double>& d_a, std::vector<double>& d_b) {
  const std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  MatMap A(a.data.data(), m, k), B(b.data.data(), k, n), D(d_out.data(), m, n);
  MutMatMap DA(d_a.data(), m, k);
  for (std::size_t i = 0; i < m; ++i) DA.row(i).noalias() += D.row(i) * B.transpose();
  // The batch reduction below is order-dependent by nature; it only needs to
  // be deterministic for a fixed batch, which gemm is.
  MutMatMap(d_b.data(), k, n).noalias() += A.transpose() * D;
}

Tensor activation(const Tensor& x, Activation kind) {
  Tensor out = x;
  switch (kind) {
    case Activation::Identity:
      break;
    case Activation::Relu:
      for (double& v : out.data) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Sigmoid:
      for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
      break;
    case Activation::Tanh:
      for (double& v : out.data) v = std::tanh(v);
      break;
    case Activation::SoftmaxRows: {
      if (x.shape.size() != 2) {
        throw DimensionError("softmax-rows expects a 2-D tensor, got " + shape_str(x.shape));
      }
      const std::size_t r = x.rows(), c = x.cols();
      for (std::size_t i = 0; i < r; ++i) {
        double mx = out.at(i, 0);
        for (std::size_t j = 1; j < c; ++j) mx = std::max(mx, out.at(i, j));
        double sum = 0.0;
        for (std::size_t j = 0; j < c; ++j) {
          double e = std::exp(out.at(i, j) - mx);
          out.at(i, j) = e;
          sum += e;
        }
        for (std::size_t j = 0; j < c; ++j) out.at(i, j) /= sum;
      }
      break;
    }
  }
  return out;
}

Tensor dropout(const Tensor& x, double rate, bool training, Rng& rng) {
  if (rate < 0.0 || rate >= 1.0) {
    throw ConfigError("dropout rate must lie in [0,1), got " + std::to_string(rate));
  }
  if (!training || rate == 0.0) return x;
  Tensor out = x;
  const double keep = 1.0 - rate;
  for (double& v : out.data) {
    v = rng.uniform() < rate ? 0.0 : v / keep;
  }
  return out;
}

double loss(const Tensor& pred, const Tensor& gold, LossKind kind) {
  if (pred.shape != gold.shape) {
    throw DimensionError("loss: prediction shape " + shape_str(pred.shape) +
                         " differs from gold shape " + shape_str(gold.shape));
  }
  const std::size_t rows = pred.shape.size() == 2 ? pred.rows() : 1;
  double total = 0.0;
  switch (kind) {
    case LossKind::CategoricalCrossEntropy:
      for (std::size_t i = 0; i < pred.numel(); ++i) {
        total -= gold.data[i] * std::log(pred.data[i] + 1e-12);
      }
      return total / static_cast<double>(rows);
    case LossKind::MeanSquaredError:
      for (std::size_t i = 0; i < pred.numel(); ++i) {
        const double d = pred.data[i] - gold.data[i];
        total += d * d;
      }
      return total / static_cast<double>(pred.numel());
  }
  return total;
}

}  // namespace mte
