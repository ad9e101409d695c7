#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "lma4rec/autodiff/ops.hpp"
#include "lma4rec/lbd/arm.hpp"
#include "lma4rec/model/params.hpp"

namespace lma4rec::model {

// Left-padded batch of item sequences, shape batch x length.
struct EncoderInput {
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::int64_t> items;
  std::vector<std::uint8_t> valid;
};

// Keeps the most recent `length` items of each sequence and left-pads with 0.
EncoderInput make_input(std::span<const std::vector<std::int64_t>> sequences, std::size_t length);

// Fixed (non-learnable) inverted dropout on embeddings and attention weights.
// The seed fixes the masks, so two passes with the same seed see the same draw.
struct FixedDropout {
  std::uint64_t seed = 0;
};

struct SequenceEmbedding {
  ad::Tensor h;  // batch x length x d
  std::size_t batch = 0;
  std::size_t length = 0;
  std::vector<std::uint8_t> valid;
};

// Gate factors for evaluation: sigmoid(logits), or all ones when LBD is off.
lbd::GateScales eval_scales(const SasrecParams& params);

// Item + position embeddings followed by the attention/FFN blocks. `gates`
// holds one factor vector per block (a sampled 0/1 mask in training, the
// expected keep probability in evaluation).
SequenceEmbedding encode(const SasrecParams& params, const EncoderInput& input, const lbd::GateScales& gates,
                         std::optional<FixedDropout> dropout = std::nullopt);

// Admission mask for causal attention over valid keys, laid out batch x heads x T x T.
ad::EntryMask causal_mask(const EncoderInput& input, std::size_t heads);

// a + MultiHeadAttention(LayerNorm(a)) with the given admission mask.
ad::Tensor attention_block(const ad::Tensor& a, const BlockParams& block, const ad::EntryMask& mask,
                           std::size_t heads, double eps, const std::vector<double>* weight_dropout = nullptr);

// a + gate * FFN(LayerNorm(a)), FFN = ReLU(x W1 + b1) W2 + b2.
ad::Tensor ffn_block(const ad::Tensor& a, const BlockParams& block, std::span<const double> gate, double eps);

// Dot product of h_t with every row of the item table.
std::vector<double> score_items(std::span<const double> h_t, const ad::Tensor& item_embedding);

}  // namespace lma4rec::model
