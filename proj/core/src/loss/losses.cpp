#include "lma4rec/loss/losses.hpp"

#include "lma4rec/autodiff/ops.hpp"
#include "lma4rec/error.hpp"

namespace lma4rec::loss {

void LossWeights::validate() const {
  if (!(lambda >= 0.0)) throw ContractError("loss: lambda must be >= 0");
  if (!(temperature > 0.0)) throw ContractError("loss: temperature must be > 0");
}

ad::Tensor next_item_loss(const model::SequenceEmbedding& h, const ad::Tensor& item_embedding,
                          std::span<const std::int64_t> positives, std::span<const std::int64_t> negatives,
                          std::span<const std::uint8_t> targets) {
  const std::size_t cells = h.batch * h.length;
  if (positives.size() != cells || negatives.size() != cells || targets.size() != cells) {
    throw DimensionError("next_item_loss: label arrays must have batch x length = " + std::to_string(cells) +
                         " entries");
  }
  std::vector<std::int64_t> rows;
  std::vector<std::int64_t> pos;
  std::vector<std::int64_t> neg;
  for (std::size_t i = 0; i < cells; ++i) {
    if (!targets[i]) continue;
    rows.push_back(static_cast<std::int64_t>(i));
    pos.push_back(positives[i]);
    neg.push_back(negatives[i]);
  }
  if (rows.empty()) throw ContractError("next_item_loss: batch has no target positions");
  const std::size_t d = h.h.dim(2);
  const std::size_t n = rows.size();
  const ad::Tensor flat = ad::reshape(h.h, {cells, d});
  const ad::Tensor s = ad::embedding_lookup(flat, rows, {n});
  const ad::Tensor pos_logit = ad::sum_lastdim(ad::mul(s, ad::embedding_lookup(item_embedding, pos, {n})));
  const ad::Tensor neg_logit = ad::sum_lastdim(ad::mul(s, ad::embedding_lookup(item_embedding, neg, {n})));
  // -log(e^p / (e^p + e^q)) = softplus(q - p)
  return ad::mean(ad::softplus(ad::sub(neg_logit, pos_logit)));
}

ad::Tensor pool_sequence(const model::SequenceEmbedding& h) {
  std::vector<std::int64_t> rows(h.batch);
  for (std::size_t b = 0; b < h.batch; ++b) {
    std::int64_t last = -1;
    for (std::size_t t = 0; t < h.length; ++t) {
      if (h.valid[b * h.length + t]) last = static_cast<std::int64_t>(b * h.length + t);
    }
    if (last < 0) throw ContractError("pool_sequence: sequence " + std::to_string(b) + " has no valid position");
    rows[b] = last;
  }
  const std::size_t d = h.h.dim(2);
  return ad::embedding_lookup(ad::reshape(h.h, {h.batch * h.length, d}), rows, {h.batch});
}

ad::Tensor info_nce(const ViewPair& views, double temperature) {
  if (!(temperature > 0.0)) throw ContractError("info_nce: temperature must be > 0");
  if (views.view_a.shape() != views.view_b.shape() || views.view_a.rank() != 2) {
    throw DimensionError("info_nce: views must both be N x d, got " + ad::to_string(views.view_a.shape()) + " and " +
                         ad::to_string(views.view_b.shape()));
  }
  const std::size_t n = views.view_a.dim(0);
  if (n < 2) throw ContractError("info_nce: need at least 2 sequences per batch to form negatives");
  const std::size_t m = 2 * n;
  const ad::Tensor z = ad::concat_rows(views.view_a, views.view_b);
  const ad::Tensor sim = ad::scale(ad::matmul(z, ad::transpose(z)), 1.0 / temperature);
  auto mask = std::make_shared<std::vector<std::uint8_t>>(m * m, 1);
  for (std::size_t i = 0; i < m; ++i) (*mask)[i * m + i] = 0;
  std::vector<std::int64_t> partner(m);
  for (std::size_t i = 0; i < m; ++i) partner[i] = static_cast<std::int64_t>(i < n ? i + n : i - n);
  const ad::Tensor log_prob = ad::log_softmax_lastdim(sim, mask);
  return ad::scale(ad::mean(ad::gather_lastdim(log_prob, partner)), -1.0);
}

ad::Tensor joint_loss(const ad::Tensor& l_rs, const ad::Tensor& l_ssl, double lambda) {
  return ad::add(l_rs, ad::scale(l_ssl, lambda));
}

}  // namespace lma4rec::loss
