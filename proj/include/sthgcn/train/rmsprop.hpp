#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "sthgcn/ad/tensor.hpp"
#include "sthgcn/error.hpp"

namespace sthgcn::train {

struct RmsPropConfig {
  double rho = 0.9;
  double eps = 1e-8;
};

/// s <- rho s + (1 - rho) g^2;  p <- p - lr g / (sqrt(s) + eps).
/// The gradient is checked before anything is modified, so a rejected step
/// leaves both the parameter and the state untouched.
inline void rmsprop_step(ad::Tensor& param, const ad::Tensor& grad, ad::Tensor& state, double lr,
                         const RmsPropConfig& cfg, const std::string& name = "parameter") {
  if (grad.shape() != param.shape() || state.shape() != param.shape())
    throw DimensionError("rmsprop: shape mismatch for " + name);
  for (std::size_t i = 0; i < grad.size(); ++i)
    if (!std::isfinite(grad[i]))
      throw NumericalError("rmsprop: non-finite gradient " + std::to_string(grad[i]) + " in " +
                           name + " at element " + std::to_string(i));
  for (std::size_t i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    state[i] = cfg.rho * state[i] + (1.0 - cfg.rho) * g * g;
    param[i] -= lr * g / (std::sqrt(state[i]) + cfg.eps);
  }
}

}  // namespace sthgcn::train
