#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "lma4rec/autodiff/tensor.hpp"
#include "lma4rec/random.hpp"

// Learnable Bernoulli dropout gates and the ARM (augment-reinforce-merge)
// estimator for the gradient of E_z[f(z)] with respect to the gate logits.
namespace lma4rec::lbd {

double sigmoid(double x);
double logit(double p);

// One learnable keep logit per output neuron of a gated layer.
struct BernoulliGate {
  std::size_t layer_index = 0;
  std::vector<double> logits;

  std::size_t width() const noexcept { return logits.size(); }
};

BernoulliGate make_gate(std::size_t layer_index, std::size_t width, double init_keep);

// Shared uniforms u with the two masks they induce:
//   mask_true[n] = 1[u_n < sigmoid(phi_n)]
//   mask_anti[n] = 1[u_n > sigmoid(-phi_n)]
struct ArmSample {
  std::vector<double> uniforms;
  std::vector<std::uint8_t> mask_true;
  std::vector<std::uint8_t> mask_anti;
};

ArmSample sample_gate(const BernoulliGate& gate, Rng& rng);
ArmSample sample_from_uniforms(const BernoulliGate& gate, std::vector<double> uniforms);

// Multiplies the trailing axis of x by a 0/1 mask.
ad::Tensor apply_gate(const ad::Tensor& x, std::span<const std::uint8_t> mask);

// sigmoid(phi) per neuron; used in place of a sampled mask at evaluation time.
std::vector<double> expected_gate(const BernoulliGate& gate);

// Per-layer multiplicative factors applied to gated activations in one forward pass.
using GateScales = std::vector<std::vector<double>>;

// One draw for every gated layer, consumed by one forward pass.
struct GateDraw {
  std::vector<ArmSample> layers;

  GateScales true_scales() const;
  GateScales anti_scales() const;
};

GateDraw sample_draw(std::span<const BernoulliGate> gates, Rng& rng);
GateScales expected_scales(std::span<const BernoulliGate> gates);
GateScales identity_scales(std::span<const BernoulliGate> gates);

// Gradient estimate for every layer's logits given the total loss under all
// true masks and under all antithetic masks. Several draws may feed the same
// loss (e.g. one per stochastic forward pass); their logits are tied, so the
// per-variable estimates (loss_anti - loss_true) * (u - 1/2) are summed per neuron.
std::vector<std::vector<double>> arm_gradient(double loss_true, double loss_anti,
                                              std::span<const GateDraw> draws,
                                              std::span<const BernoulliGate> gates);

// Forward closure: builds the loss given one GateScales per draw.
using MaskedLoss = std::function<ad::Tensor(std::span<const GateScales> scales)>;

struct ArmStepResult {
  ad::Tensor loss_true;  // still attached to the tape when recording is enabled
  double loss_anti = 0.0;
  std::vector<GateDraw> draws;
  std::vector<std::vector<double>> logit_grads;
  std::size_t loss_evaluations = 0;
};

// Draws `num_draws` gate draws, evaluates the loss once under all true masks
// (recorded, so the caller can backpropagate the continuous parameters) and
// once under all antithetic masks (not recorded), and returns ARM logit gradients.
ArmStepResult arm_step(const MaskedLoss& loss, std::span<const BernoulliGate> gates, Rng& rng,
                       std::size_t num_draws = 1);

}  // namespace lma4rec::lbd
