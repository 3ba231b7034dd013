#pragma once

#include "scopealign/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace scopealign {

struct AdamWState {
  double learning_rate = 5e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  std::uint64_t step_count = 0;
  // One buffer per parameter, sized on the first step.
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

/// Decoupled weight decay followed by the bias-corrected Adam update:
///   theta <- theta - lr*wd*theta
///   theta <- theta - lr * m_hat / (sqrt(v_hat) + eps)
/// Gradients are cleared afterwards. Every parameter must carry a gradient.
void adamw_step(std::span<Tensor> params, AdamWState& state);

}  // namespace scopealign
