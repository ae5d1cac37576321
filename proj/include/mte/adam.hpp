#ifndef MTE_ADAM_HPP_
#define MTE_ADAM_HPP_

#include <cstdint>
#include <vector>

#include "mte/tensor.hpp"

namespace mte {

// Bias-corrected Adam with the usual defaults.
struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
  std::uint64_t t = 0;
  double lr = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One update; param.grad must be present. Lazily sizes m/v on first use.
void adam_step(Tensor& param, AdamState& state);

// Steps a fixed set of parameters in registration order.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(std::vector<Tensor*> params) : params_(std::move(params)) {
    states_.resize(params_.size());
  }

  void zero_grads() {
    for (Tensor* p : params_) p->zero_grad();
  }

  void step() {
    for (std::size_t i = 0; i < params_.size(); ++i) adam_step(*params_[i], states_[i]);
  }

 private:
  std::vector<Tensor*> params_;
  std::vector<AdamState> states_;
};

}  // namespace mte

#endif  // MTE_ADAM_HPP_
