#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace lma4rec::train {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// A parameter array and its gradient. `lr_scale` multiplies the step size.
struct ParamBuffer {
  std::span<double> value;
  std::span<const double> grad;
  double lr_scale = 1.0;
};

struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  bool operator==(const AdamState&) const = default;
};

// Zeroed moment buffers shaped like `params`.
AdamState make_adam_state(std::span<const ParamBuffer> params);

// Bias-corrected Adam:
//   m = b1 m + (1 - b1) g,  v = b2 v + (1 - b2) g^2
//   x -= lr * (m / (1 - b1^t)) / (sqrt(v / (1 - b2^t)) + eps)
// Throws DimensionError when a buffer's shape disagrees with the state.
void adam_step(std::span<const ParamBuffer> params, AdamState& state, const AdamConfig& config);

}  // namespace lma4rec::train
