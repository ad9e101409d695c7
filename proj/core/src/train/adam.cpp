#include "lma4rec/train/adam.hpp"

#include <cmath>
#include <string>

#include "lma4rec/error.hpp"

namespace lma4rec::train {

AdamState make_adam_state(std::span<const ParamBuffer> params) {
  AdamState s;
  for (const auto& p : params) {
    s.m.emplace_back(p.value.size(), 0.0);
    s.v.emplace_back(p.value.size(), 0.0);
  }
  return s;
}

void adam_step(std::span<const ParamBuffer> params, AdamState& state, const AdamConfig& config) {
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw DimensionError("adam_step: state holds " + std::to_string(state.m.size()) + " buffers, got " +
                         std::to_string(params.size()) + " parameters");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    if (p.grad.size() != p.value.size() || state.m[i].size() != p.value.size() ||
        state.v[i].size() != p.value.size()) {
      throw DimensionError("adam_step: parameter " + std::to_string(i) + " has " + std::to_string(p.value.size()) +
                           " values, " + std::to_string(p.grad.size()) + " gradients and " +
                           std::to_string(state.m[i].size()) + " moments");
    }
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = params[i];
    auto& m = state.m[i];
    auto& v = state.v[i];
    const double lr = config.learning_rate * p.lr_scale;
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = config.beta1 * m[j] + (1.0 - config.beta1) * g;
      v[j] = config.beta2 * v[j] + (1.0 - config.beta2) * g * g;
      p.value[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config.eps);
    }
  }
}

}  // namespace lma4rec::train
