#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "lma4rec/autodiff/tensor.hpp"

namespace lma4rec::ad {

struct GradCheckOptions {
  double step = 1e-4;
  // Denominator floor for the relative error, so that coordinates whose true
  // gradient is ~0 are judged on absolute error instead.
  double abs_floor = 1e-6;
};

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::vector<double> per_param;  // max relative error for each tensor in `params`
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

// Compares backward() against central differences, coordinate by coordinate.
// `loss` must be a deterministic function of the (leaf) tensors in `params`.
GradCheckResult grad_check(const std::function<Tensor()>& loss, std::vector<Tensor> params,
                           const GradCheckOptions& options = {});

}  // namespace lma4rec::ad
