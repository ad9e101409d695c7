#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lma4rec/autodiff/tensor.hpp"
#include "lma4rec/lbd/arm.hpp"
#include "lma4rec/model/config.hpp"
#include "lma4rec/random.hpp"

namespace lma4rec::model {

struct BlockParams {
  ad::Tensor attn_norm_gain, attn_norm_bias;
  ad::Tensor w_query, w_key, w_value, w_out;  // d x d
  ad::Tensor ffn_norm_gain, ffn_norm_bias;
  ad::Tensor w_inner, b_inner;  // d x d_ff, d_ff
  ad::Tensor w_outer, b_outer;  // d_ff x d, d
};

// Every trainable quantity of the encoder. Item table row 0 is padding (kept
// at zero), row num_items + 1 is the mask token used by augmentation.
struct SasrecParams {
  ModelConfig config;
  std::size_t num_items = 0;
  ad::Tensor item_embedding;      // (num_items + 2) x d
  ad::Tensor position_embedding;  // max_len x d
  std::vector<BlockParams> blocks;
  std::vector<lbd::BernoulliGate> gates;  // one per block, gating the FFN output

  static SasrecParams init(const ModelConfig& config, std::size_t num_items, Rng& rng);

  std::int64_t mask_token() const noexcept { return static_cast<std::int64_t>(num_items) + 1; }

  // Continuous tensors in a fixed order, paired with stable names.
  std::vector<ad::Tensor> tensors() const;
  std::vector<std::string> tensor_names() const;

  // Deep copy with fresh leaves.
  SasrecParams clone() const;

  void zero_grad();
  // Clears the gradient of the padding row and resets its values to zero.
  void freeze_padding();
};

}  // namespace lma4rec::model
