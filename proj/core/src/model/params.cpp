#include "lma4rec/model/params.hpp"

#include <algorithm>
#include <cmath>

#include "lma4rec/error.hpp"

namespace lma4rec::model {

void ModelConfig::validate() const {
  if (embed_dim == 0 || num_heads == 0 || num_blocks == 0 || max_len == 0) {
    throw ContractError("model: embed_dim, num_heads, num_blocks and max_len must be positive");
  }
  if (embed_dim % num_heads != 0) {
    throw ContractError("model: embed_dim " + std::to_string(embed_dim) + " is not divisible by num_heads " +
                        std::to_string(num_heads));
  }
  if (!(attention_dropout >= 0.0 && attention_dropout < 1.0) || !(embedding_dropout >= 0.0 && embedding_dropout < 1.0)) {
    throw ContractError("model: fixed dropout rates must lie in [0,1)");
  }
  if (!(lbd_init_keep > 0.0 && lbd_init_keep < 1.0)) throw ContractError("model: lbd_init_keep must lie in (0,1)");
  if (!(layer_norm_eps > 0.0)) throw ContractError("model: layer_norm_eps must be positive");
}

namespace {

ad::Tensor xavier(std::size_t rows, std::size_t cols, Rng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::vector<double> v(rows * cols);
  for (double& x : v) x = (2.0 * rng.uniform01() - 1.0) * a;
  return ad::Tensor::parameter({rows, cols}, std::move(v));
}

ad::Tensor normal(std::size_t rows, std::size_t cols, double stddev, Rng& rng) {
  std::vector<double> v(rows * cols);
  for (double& x : v) x = rng.normal(0.0, stddev);
  return ad::Tensor::parameter({rows, cols}, std::move(v));
}

ad::Tensor filled(std::size_t n, double value) {
  return ad::Tensor::parameter({n}, std::vector<double>(n, value));
}

ad::Tensor copy_leaf(const ad::Tensor& t) {
  return ad::Tensor::parameter(t.shape(), std::vector<double>(t.data().begin(), t.data().end()));
}

}  // namespace

SasrecParams SasrecParams::init(const ModelConfig& config, std::size_t num_items, Rng& rng) {
  config.validate();
  if (num_items < 2) throw ContractError("model: need at least 2 items");
  const std::size_t d = config.embed_dim;
  SasrecParams p;
  p.config = config;
  p.num_items = num_items;
  const double emb_std = 1.0 / std::sqrt(static_cast<double>(d));
  p.item_embedding = normal(num_items + 2, d, emb_std, rng);
  p.position_embedding = normal(config.max_len, d, emb_std, rng);
  for (std::size_t c = 0; c < config.num_blocks; ++c) {
    BlockParams b;
    b.attn_norm_gain = filled(d, 1.0);
    b.attn_norm_bias = filled(d, 0.0);
    b.w_query = xavier(d, d, rng);
    b.w_key = xavier(d, d, rng);
    b.w_value = xavier(d, d, rng);
    b.w_out = xavier(d, d, rng);
    b.ffn_norm_gain = filled(d, 1.0);
    b.ffn_norm_bias = filled(d, 0.0);
    b.w_inner = xavier(d, d, rng);
    b.b_inner = filled(d, 0.0);
    b.w_outer = xavier(d, d, rng);
    b.b_outer = filled(d, 0.0);
    p.blocks.push_back(std::move(b));
    p.gates.push_back(lbd::make_gate(c, d, config.lbd_init_keep));
  }
  p.freeze_padding();
  return p;
}

std::vector<ad::Tensor> SasrecParams::tensors() const {
  std::vector<ad::Tensor> out{item_embedding, position_embedding};
  for (const auto& b : blocks) {
    out.insert(out.end(), {b.attn_norm_gain, b.attn_norm_bias, b.w_query, b.w_key, b.w_value, b.w_out,
                           b.ffn_norm_gain, b.ffn_norm_bias, b.w_inner, b.b_inner, b.w_outer, b.b_outer});
  }
  return out;
}

std::vector<std::string> SasrecParams::tensor_names() const {
  std::vector<std::string> out{"item_embedding", "position_embedding"};
  for (std::size_t c = 0; c < blocks.size(); ++c) {
    const std::string pre = "block" + std::to_string(c) + ".";
    for (const char* n : {"attn_norm_gain", "attn_norm_bias", "w_query", "w_key", "w_value", "w_out", "ffn_norm_gain",
                          "ffn_norm_bias", "w_inner", "b_inner", "w_outer", "b_outer"}) {
      out.push_back(pre + n);
    }
  }
  return out;
}

SasrecParams SasrecParams::clone() const {
  SasrecParams p;
  p.config = config;
  p.num_items = num_items;
  p.item_embedding = copy_leaf(item_embedding);
  p.position_embedding = copy_leaf(position_embedding);
  for (const auto& b : blocks) {
    p.blocks.push_back(BlockParams{copy_leaf(b.attn_norm_gain), copy_leaf(b.attn_norm_bias), copy_leaf(b.w_query),
                                   copy_leaf(b.w_key), copy_leaf(b.w_value), copy_leaf(b.w_out),
                                   copy_leaf(b.ffn_norm_gain), copy_leaf(b.ffn_norm_bias), copy_leaf(b.w_inner),
                                   copy_leaf(b.b_inner), copy_leaf(b.w_outer), copy_leaf(b.b_outer)});
  }
  p.gates = gates;
  return p;
}

void SasrecParams::zero_grad() {
  for (auto& t : tensors()) t.zero_grad();
}

void SasrecParams::freeze_padding() {
  const std::size_t d = config.embed_dim;
  auto values = item_embedding.mutable_data();
  std::fill(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
  if (item_embedding.has_grad()) {
    auto g = item_embedding.mutable_grad();
    std::fill(g.begin(), g.begin() + static_cast<std::ptrdiff_t>(d), 0.0);
  }
}

}  // namespace lma4rec::model
