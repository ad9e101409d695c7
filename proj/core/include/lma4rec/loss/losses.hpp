#pragma once

#include <cstdint>
#include <span>

#include "lma4rec/autodiff/tensor.hpp"
#include "lma4rec/model/encoder.hpp"

namespace lma4rec::loss {

struct LossWeights {
  double lambda = 0.1;       // weight of the contrastive term
  double temperature = 1.0;  // similarity divisor in the contrastive term

  void validate() const;
};

// Pooled representations of two views; row i of both views is the same sequence.
struct ViewPair {
  ad::Tensor view_a;  // N x d
  ad::Tensor view_b;  // N x d
};

// Mean over target positions of -log(e^{s.v+} / (e^{s.v+} + e^{s.v-})), with
// one positive and one negative item per position. `positives`, `negatives`
// and `targets` are laid out batch x length like h; positions with
// targets[i] == 0 are ignored.
ad::Tensor next_item_loss(const model::SequenceEmbedding& h, const ad::Tensor& item_embedding,
                          std::span<const std::int64_t> positives, std::span<const std::int64_t> negatives,
                          std::span<const std::uint8_t> targets);

// Representation at the last valid position of each sequence, N x d.
ad::Tensor pool_sequence(const model::SequenceEmbedding& h);

// NT-Xent over the 2N pooled vectors: dot-product similarity divided by the
// temperature, each anchor's positive is the other view of its sequence and
// the remaining 2N - 2 vectors are negatives. Mean over all 2N anchors.
ad::Tensor info_nce(const ViewPair& views, double temperature);

// l_rs + lambda * l_ssl
ad::Tensor joint_loss(const ad::Tensor& l_rs, const ad::Tensor& l_ssl, double lambda);

}  // namespace lma4rec::loss
