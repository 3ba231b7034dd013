#include "scopealign/adamw.hpp"

#include "scopealign/error.hpp"

#include <cmath>

namespace scopealign {

void adamw_step(std::span<Tensor> params, AdamWState& state) {
  for (std::size_t i = 0; i < params.size(); ++i)
    if (!params[i].has_grad())
      throw Error(ErrorKind::UnsteppedParameter,
                  "parameter " + std::to_string(i) + " has no gradient");

  if (state.m.empty()) {
    for (const Tensor& p : params) {
      state.m.emplace_back(p.numel(), 0.0);
      state.v.emplace_back(p.numel(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw Error(ErrorKind::Dimension, "optimizer state tracks " + std::to_string(state.m.size()) +
                                          " parameters, got " + std::to_string(params.size()));

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double bias1 = 1.0 - std::pow(state.beta1, t);
  const double bias2 = 1.0 - std::pow(state.beta2, t);
  const double lr = state.learning_rate;

  for (std::size_t i = 0; i < params.size(); ++i) {
    auto theta = params[i].mutable_data();
    const auto g = params[i].grad();
    auto& m = state.m[i];
    auto& v = state.v[i];
    if (m.size() != theta.size())
      throw Error(ErrorKind::Dimension, "optimizer state shape changed for parameter " +
                                            std::to_string(i));
    for (std::size_t j = 0; j < theta.size(); ++j) {
      theta[j] -= lr * state.weight_decay * theta[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g[j];
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g[j] * g[j];
      const double m_hat = m[j] / bias1;
      const double v_hat = v[j] / bias2;
      theta[j] -= lr * m_hat / (std::sqrt(v_hat) + state.eps);
    }
    params[i].clear_grad();
  }
}

}  // namespace scopealign
