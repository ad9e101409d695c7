#include "lma4rec/lbd/arm.hpp"

#include <cmath>

#include "lma4rec/autodiff/ops.hpp"
#include "lma4rec/error.hpp"

namespace lma4rec::lbd {

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double logit(double p) {
  if (!(p > 0.0 && p < 1.0)) throw ContractError("logit: probability must lie in (0,1)");
  return std::log(p / (1.0 - p));
}

BernoulliGate make_gate(std::size_t layer_index, std::size_t width, double init_keep) {
  return BernoulliGate{layer_index, std::vector<double>(width, logit(init_keep))};
}

ArmSample sample_from_uniforms(const BernoulliGate& gate, std::vector<double> uniforms) {
  if (uniforms.size() != gate.width()) {
    throw ContractError("sample_from_uniforms: " + std::to_string(uniforms.size()) + " uniforms for gate of width " +
                        std::to_string(gate.width()));
  }
  ArmSample s;
  s.mask_true.resize(uniforms.size());
  s.mask_anti.resize(uniforms.size());
  for (std::size_t n = 0; n < uniforms.size(); ++n) {
    s.mask_true[n] = uniforms[n] < sigmoid(gate.logits[n]) ? 1 : 0;
    s.mask_anti[n] = uniforms[n] > sigmoid(-gate.logits[n]) ? 1 : 0;
  }
  s.uniforms = std::move(uniforms);
  return s;
}

ArmSample sample_gate(const BernoulliGate& gate, Rng& rng) {
  std::vector<double> u(gate.width());
  for (double& v : u) v = rng.uniform01();
  return sample_from_uniforms(gate, std::move(u));
}

ad::Tensor apply_gate(const ad::Tensor& x, std::span<const std::uint8_t> mask) {
  std::vector<double> factors(mask.begin(), mask.end());
  return ad::scale_lastdim(x, factors);
}

std::vector<double> expected_gate(const BernoulliGate& gate) {
  std::vector<double> p(gate.width());
  for (std::size_t n = 0; n < p.size(); ++n) p[n] = sigmoid(gate.logits[n]);
  return p;
}

namespace {

GateScales to_scales(const std::vector<ArmSample>& layers, bool anti) {
  GateScales out;
  out.reserve(layers.size());
  for (const auto& s : layers) {
    const auto& m = anti ? s.mask_anti : s.mask_true;
    out.emplace_back(m.begin(), m.end());
  }
  return out;
}

}  // namespace

GateScales GateDraw::true_scales() const { return to_scales(layers, false); }
GateScales GateDraw::anti_scales() const { return to_scales(layers, true); }

GateDraw sample_draw(std::span<const BernoulliGate> gates, Rng& rng) {
  GateDraw draw;
  draw.layers.reserve(gates.size());
  for (const auto& g : gates) draw.layers.push_back(sample_gate(g, rng));
  return draw;
}

GateScales expected_scales(std::span<const BernoulliGate> gates) {
  GateScales out;
  for (const auto& g : gates) out.push_back(expected_gate(g));
  return out;
}

GateScales identity_scales(std::span<const BernoulliGate> gates) {
  GateScales out;
  for (const auto& g : gates) out.emplace_back(g.width(), 1.0);
  return out;
}

std::vector<std::vector<double>> arm_gradient(double loss_true, double loss_anti,
                                              std::span<const GateDraw> draws,
                                              std::span<const BernoulliGate> gates) {
  std::vector<std::vector<double>> grads;
  grads.reserve(gates.size());
  for (const auto& g : gates) grads.emplace_back(g.width(), 0.0);
  const double diff = loss_anti - loss_true;
  for (const auto& draw : draws) {
    if (draw.layers.size() != gates.size()) {
      throw ContractError("arm_gradient: draw covers " + std::to_string(draw.layers.size()) + " layers, model has " +
                          std::to_string(gates.size()));
    }
    for (std::size_t c = 0; c < gates.size(); ++c) {
      const auto& u = draw.layers[c].uniforms;
      if (u.size() != gates[c].width()) {
        throw ContractError("arm_gradient: layer " + std::to_string(c) + " sample width " +
                            std::to_string(u.size()) + " != gate width " + std::to_string(gates[c].width()));
      }
      for (std::size_t n = 0; n < u.size(); ++n) grads[c][n] += diff * (u[n] - 0.5);
    }
  }
  return grads;
}

ArmStepResult arm_step(const MaskedLoss& loss, std::span<const BernoulliGate> gates, Rng& rng,
                       std::size_t num_draws) {
  ArmStepResult result;
  result.draws.reserve(num_draws);
  for (std::size_t i = 0; i < num_draws; ++i) result.draws.push_back(sample_draw(gates, rng));

  std::vector<GateScales> true_scales;
  std::vector<GateScales> anti_scales;
  for (const auto& d : result.draws) {
    true_scales.push_back(d.true_scales());
    anti_scales.push_back(d.anti_scales());
  }
  result.loss_true = loss(true_scales);
  {
    ad::NoGradGuard no_grad;
    result.loss_anti = loss(anti_scales).item();
  }
  result.loss_evaluations = 2;
  result.logit_grads = arm_gradient(result.loss_true.item(), result.loss_anti, result.draws, gates);
  return result;
}

}  // namespace lma4rec::lbd
