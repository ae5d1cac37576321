#include "mte/adam.hpp"

#include <cmath>

#include "mte/error.hpp"

namespace mte {

void adam_step(Tensor& param, AdamState& state) {
  if (!param.grad) {
    throw ConfigError("adam_step: parameter has no gradient buffer");
  }
  const std::size_t n = param.numel();
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  } else if (state.m.size() != n) {
    throw DimensionError("adam_step: state sized for " + std::to_string(state.m.size()) +
                         " values, parameter has " + std::to_string(n));
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  const auto& g = *param.grad;
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bc1;
    const double v_hat = state.v[i] / bc2;
    param.data[i] -= state.lr * m_hat / (std::sqrt(v_hat) + state.eps);
  }
}

}  // namespace mte
