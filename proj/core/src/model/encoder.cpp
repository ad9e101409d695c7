#include "lma4rec/model/encoder.hpp"

#include <cmath>

#include "lma4rec/error.hpp"

namespace lma4rec::model {

EncoderInput make_input(std::span<const std::vector<std::int64_t>> sequences, std::size_t length) {
  if (length == 0) throw ContractError("make_input: length must be positive");
  EncoderInput in;
  in.batch = sequences.size();
  in.length = length;
  in.items.assign(in.batch * length, 0);
  in.valid.assign(in.batch * length, 0);
  for (std::size_t b = 0; b < in.batch; ++b) {
    const auto& s = sequences[b];
    const std::size_t keep = std::min(s.size(), length);
    const std::size_t pad = length - keep;
    for (std::size_t i = 0; i < keep; ++i) {
      in.items[b * length + pad + i] = s[s.size() - keep + i];
      in.valid[b * length + pad + i] = 1;
    }
  }
  return in;
}

lbd::GateScales eval_scales(const SasrecParams& params) {
  return params.config.use_lbd ? lbd::expected_scales(params.gates) : lbd::identity_scales(params.gates);
}

ad::EntryMask causal_mask(const EncoderInput& input, std::size_t heads) {
  const std::size_t t = input.length;
  auto mask = std::make_shared<std::vector<std::uint8_t>>(input.batch * heads * t * t, 0);
  for (std::size_t b = 0; b < input.batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      std::uint8_t* m = mask->data() + (b * heads + h) * t * t;
      for (std::size_t q = 0; q < t; ++q) {
        for (std::size_t k = 0; k <= q; ++k) m[q * t + k] = input.valid[b * t + k];
      }
    }
  }
  return mask;
}

namespace {

std::vector<double> dropout_factors(std::size_t n, double rate, Rng& rng) {
  std::vector<double> f(n);
  const double keep_scale = 1.0 / (1.0 - rate);
  for (double& v : f) v = rng.uniform01() < rate ? 0.0 : keep_scale;
  return f;
}

// [B,T,d] -> [B,H,T,dh]
ad::Tensor split_heads(const ad::Tensor& x, std::size_t heads) {
  const std::size_t b = x.dim(0), t = x.dim(1), d = x.dim(2);
  return ad::permute(ad::reshape(x, {b, t, heads, d / heads}), {0, 2, 1, 3});
}

// [B,H,T,dh] -> [B,T,d]
ad::Tensor merge_heads(const ad::Tensor& x) {
  const std::size_t b = x.dim(0), h = x.dim(1), t = x.dim(2), dh = x.dim(3);
  return ad::reshape(ad::permute(x, {0, 2, 1, 3}), {b, t, h * dh});
}

}  // namespace

ad::Tensor attention_block(const ad::Tensor& a, const BlockParams& block, const ad::EntryMask& mask,
                           std::size_t heads, double eps, const std::vector<double>* weight_dropout) {
  if (a.rank() != 3) throw DimensionError("attention_block: expected [B,T,d], got " + ad::to_string(a.shape()));
  const std::size_t d = a.dim(2);
  const ad::Tensor x = ad::layer_norm(a, block.attn_norm_gain, block.attn_norm_bias, eps);
  const ad::Tensor q = split_heads(ad::matmul(x, block.w_query), heads);
  const ad::Tensor k = split_heads(ad::matmul(x, block.w_key), heads);
  const ad::Tensor v = split_heads(ad::matmul(x, block.w_value), heads);
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(d / heads));
  ad::Tensor weights = ad::softmax_lastdim(ad::scale(ad::matmul(q, ad::transpose(k)), inv_sqrt), mask);
  if (weight_dropout != nullptr) {
    weights = ad::mul(weights, ad::Tensor::constant(weights.shape(), *weight_dropout));
  }
  const ad::Tensor context = merge_heads(ad::matmul(weights, v));
  return ad::add(a, ad::matmul(context, block.w_out));
}

ad::Tensor ffn_block(const ad::Tensor& a, const BlockParams& block, std::span<const double> gate, double eps) {
  const ad::Tensor x = ad::layer_norm(a, block.ffn_norm_gain, block.ffn_norm_bias, eps);
  const ad::Tensor inner = ad::relu(ad::add_bias(ad::matmul(x, block.w_inner), block.b_inner));
  const ad::Tensor out = ad::add_bias(ad::matmul(inner, block.w_outer), block.b_outer);
  return ad::add(a, ad::scale_lastdim(out, gate));
}

SequenceEmbedding encode(const SasrecParams& params, const EncoderInput& input, const lbd::GateScales& gates,
                         std::optional<FixedDropout> dropout) {
  const ModelConfig& cfg = params.config;
  const std::size_t d = cfg.embed_dim;
  const std::size_t b = input.batch;
  const std::size_t t = input.length;
  if (b == 0) throw ContractError("encode: empty batch");
  if (t > cfg.max_len) {
    throw ContractError("encode: input length " + std::to_string(t) + " exceeds max_len " + std::to_string(cfg.max_len));
  }
  if (gates.size() != params.blocks.size()) {
    throw ContractError("encode: " + std::to_string(gates.size()) + " gate vectors for " +
                        std::to_string(params.blocks.size()) + " blocks");
  }
  for (const auto idx : input.items) {
    if (idx < 0 || idx > params.mask_token()) {
      throw IndexError("encode: item index " + std::to_string(idx) + " outside [0, " +
                       std::to_string(params.mask_token()) + "]");
    }
  }

  // Positions count back from the most recent item, so extra left padding
  // never shifts the embedding of a valid position.
  std::vector<std::int64_t> positions(b * t);
  for (std::size_t i = 0; i < b; ++i) {
    for (std::size_t j = 0; j < t; ++j) positions[i * t + j] = static_cast<std::int64_t>(t - 1 - j);
  }
  std::vector<double> timeline(b * t * d);
  for (std::size_t i = 0; i < b * t; ++i) {
    std::fill_n(timeline.begin() + static_cast<std::ptrdiff_t>(i * d), d, input.valid[i] ? 1.0 : 0.0);
  }

  std::optional<Rng> drop_rng;
  if (dropout) drop_rng.emplace(dropout->seed);

  ad::Tensor x = ad::scale(ad::embedding_lookup(params.item_embedding, input.items, {b, t}),
                           std::sqrt(static_cast<double>(d)));
  x = ad::add(x, ad::embedding_lookup(params.position_embedding, positions, {b, t}));
  if (drop_rng && cfg.embedding_dropout > 0.0) {
    Rng r = drop_rng->derive("embedding");
    auto f = dropout_factors(b * t * d, cfg.embedding_dropout, r);
    for (std::size_t i = 0; i < f.size(); ++i) timeline[i] *= f[i];
  }
  x = ad::mul(x, ad::Tensor::constant({b, t, d}, std::move(timeline)));

  const ad::EntryMask mask = causal_mask(input, cfg.num_heads);
  for (std::size_t c = 0; c < params.blocks.size(); ++c) {
    std::optional<std::vector<double>> weight_drop;
    if (drop_rng && cfg.attention_dropout > 0.0) {
      Rng r = drop_rng->derive("attention", c);
      weight_drop = dropout_factors(mask->size(), cfg.attention_dropout, r);
    }
    x = attention_block(x, params.blocks[c], mask, cfg.num_heads, cfg.layer_norm_eps,
                        weight_drop ? &*weight_drop : nullptr);
    x = ffn_block(x, params.blocks[c], gates[c], cfg.layer_norm_eps);
  }
  return SequenceEmbedding{x, b, t, input.valid};
}

std::vector<double> score_items(std::span<const double> h_t, const ad::Tensor& item_embedding) {
  const std::size_t d = item_embedding.dim(1);
  if (h_t.size() != d) {
    throw DimensionError("score_items: vector of length " + std::to_string(h_t.size()) + " against table " +
                         ad::to_string(item_embedding.shape()));
  }
  const std::size_t v = item_embedding.dim(0);
  const auto e = item_embedding.data();
  std::vector<double> scores(v, 0.0);
  for (std::size_t i = 0; i < v; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += h_t[j] * e[i * d + j];
    scores[i] = s;
  }
  return scores;
}

}  // namespace lma4rec::model
