#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "lma4rec/autodiff/grad_check.hpp"
#include "lma4rec/error.hpp"
#include "lma4rec/loss/losses.hpp"
#include "lma4rec/model/checkpoint.hpp"
#include "lma4rec/model/encoder.hpp"

using namespace lma4rec;
using model::ModelConfig;
using model::SasrecParams;

namespace {

SasrecParams small_model(std::size_t d = 8, std::size_t t = 8, std::size_t items = 12, std::uint64_t seed = 1) {
  ModelConfig c;
  c.embed_dim = d;
  c.max_len = t;
  Rng rng(seed);
  return SasrecParams::init(c, items, rng);
}

std::vector<double> row(const model::SequenceEmbedding& h, std::size_t b, std::size_t t) {
  const std::size_t d = h.h.dim(2);
  const auto v = h.h.data();
  const auto start = v.begin() + static_cast<std::ptrdiff_t>((b * h.length + t) * d);
  return {start, start + static_cast<std::ptrdiff_t>(d)};
}

std::filesystem::path temp_path(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("lma4rec_test_" + name);
}

}  // namespace

TEST(ModelConfig, DefaultsAndValidation) {
  const ModelConfig c;
  EXPECT_EQ(c.embed_dim, 64U);
  EXPECT_EQ(c.num_heads, 2U);
  EXPECT_EQ(c.num_blocks, 2U);
  EXPECT_EQ(c.max_len, 50U);
  EXPECT_EQ(c.attention_dropout, 0.0);
  EXPECT_NO_THROW(c.validate());
  ModelConfig bad = c;
  bad.embed_dim = 63;
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(SasrecParams, ShapesAndReservedRows) {
  const auto p = small_model(8, 6, 10);
  EXPECT_EQ(p.item_embedding.shape(), (ad::Shape{12, 8}));
  EXPECT_EQ(p.position_embedding.shape(), (ad::Shape{6, 8}));
  EXPECT_EQ(p.blocks.size(), 2U);
  EXPECT_EQ(p.gates.size(), 2U);
  EXPECT_EQ(p.gates[0].width(), 8U);
  EXPECT_EQ(p.mask_token(), 11);
  for (std::size_t k = 0; k < 8; ++k) EXPECT_EQ(p.item_embedding.at(k), 0.0);
  EXPECT_NEAR(lbd::sigmoid(p.gates[1].logits[3]), 0.9, 1e-12);
  EXPECT_EQ(p.tensors().size(), p.tensor_names().size());
}

TEST(SasrecParams, CloneIsDeep) {
  auto p = small_model();
  auto q = p.clone();
  q.item_embedding.mutable_data()[9] += 1.0;
  q.gates[0].logits[0] = 0.0;
  EXPECT_NE(p.item_embedding.at(9), q.item_embedding.at(9));
  EXPECT_NE(p.gates[0].logits[0], 0.0);
}

TEST(Encode, OutputShape) {
  const auto p = small_model();
  const std::vector<std::vector<std::int64_t>> seqs{{1, 2, 3}, {4, 5, 6, 7, 8, 9, 10, 11, 12, 1}};
  const auto input = model::make_input(seqs, 8);
  const auto h = model::encode(p, input, model::eval_scales(p));
  EXPECT_EQ(h.h.shape(), (ad::Shape{2, 8, 8}));
  // Longer sequences keep their most recent items.
  EXPECT_EQ(input.items[8], 6);
  EXPECT_EQ(input.items[15], 1);
  EXPECT_EQ(input.items[4], 0);
  EXPECT_EQ(input.items[5], 1);
}

TEST(Encode, CausalityLeavesEarlierPositionsBitIdentical) {
  const auto p = small_model();
  const auto gates = model::eval_scales(p);
  const std::vector<std::vector<std::int64_t>> a{{1, 2, 3, 4, 5, 6, 7, 8}};
  auto b = a;
  b[0][5] = 11;
  const auto ha = model::encode(p, model::make_input(a, 8), gates);
  const auto hb = model::encode(p, model::make_input(b, 8), gates);
  for (std::size_t t = 0; t < 5; ++t) EXPECT_EQ(row(ha, 0, t), row(hb, 0, t)) << t;
  EXPECT_NE(row(ha, 0, 5), row(hb, 0, 5));
}

TEST(Encode, PaddingInvariance) {
  const auto p = small_model();
  const auto gates = model::eval_scales(p);
  const std::vector<std::vector<std::int64_t>> s{{3, 9, 4}};
  const auto short_h = model::encode(p, model::make_input(s, 3), gates);
  const auto long_h = model::encode(p, model::make_input(s, 8), gates);
  for (std::size_t t = 0; t < 3; ++t) {
    const auto x = row(short_h, 0, t);
    const auto y = row(long_h, 0, 5 + t);
    for (std::size_t k = 0; k < x.size(); ++k) EXPECT_NEAR(x[k], y[k], 1e-12);
  }
}

TEST(Encode, EvalModeIsDeterministic) {
  const auto p = small_model();
  const std::vector<std::vector<std::int64_t>> s{{3, 9, 4, 1}, {2}};
  const auto input = model::make_input(s, 8);
  const auto h1 = model::encode(p, input, model::eval_scales(p));
  const auto h2 = model::encode(p, input, model::eval_scales(p));
  EXPECT_TRUE(std::equal(h1.h.data().begin(), h1.h.data().end(), h2.h.data().begin()));
}

TEST(Encode, RejectsBadIndicesAndGateCounts) {
  const auto p = small_model();
  const std::vector<std::vector<std::int64_t>> bad{{1, 14}};
  EXPECT_THROW(model::encode(p, model::make_input(bad, 8), model::eval_scales(p)), IndexError);
  const std::vector<std::vector<std::int64_t>> ok{{1, 2}};
  EXPECT_THROW(model::encode(p, model::make_input(ok, 8), lbd::GateScales{}), ContractError);
}

TEST(Encode, FixedDropoutIsReproducibleBySeed) {
  ModelConfig c;
  c.embed_dim = 8;
  c.max_len = 6;
  c.embedding_dropout = 0.3;
  c.attention_dropout = 0.3;
  Rng rng(2);
  const auto p = SasrecParams::init(c, 10, rng);
  const std::vector<std::vector<std::int64_t>> s{{1, 2, 3, 4}};
  const auto input = model::make_input(s, 6);
  const auto g = model::eval_scales(p);
  const auto a = model::encode(p, input, g, model::FixedDropout{5});
  const auto b = model::encode(p, input, g, model::FixedDropout{5});
  const auto e = model::encode(p, input, g, model::FixedDropout{6});
  const auto none = model::encode(p, input, g);
  EXPECT_TRUE(std::equal(a.h.data().begin(), a.h.data().end(), b.h.data().begin()));
  EXPECT_FALSE(std::equal(a.h.data().begin(), a.h.data().end(), e.h.data().begin()));
  EXPECT_FALSE(std::equal(a.h.data().begin(), a.h.data().end(), none.h.data().begin()));
}

TEST(FfnBlock, ZeroMaskIsPureResidual) {
  const auto p = small_model();
  Rng rng(3);
  std::vector<double> v(2 * 3 * 8);
  for (double& x : v) x = rng.normal(0, 1);
  const auto a = ad::Tensor::constant({2, 3, 8}, v);
  const std::vector<double> zeros(8, 0.0);
  const auto y = model::ffn_block(a, p.blocks[0], zeros, 1e-8);
  EXPECT_TRUE(std::equal(y.data().begin(), y.data().end(), a.data().begin()));
}

TEST(FfnBlock, OnesMaskIsPreNormResidualFfn) {
  const auto p = small_model(4, 2, 5);
  const auto& blk = p.blocks[0];
  const std::vector<double> x{0.3, -1.0, 2.0, 0.5};
  const auto a = ad::Tensor::constant({1, 1, 4}, x);
  const std::vector<double> ones(4, 1.0);
  const auto y = model::ffn_block(a, blk, ones, 1e-8);
  // Direct loop: LayerNorm -> W1 + b1 -> ReLU -> W2 + b2 -> residual.
  double mean = 0.0, var = 0.0;
  for (double e : x) mean += e / 4;
  for (double e : x) var += (e - mean) * (e - mean) / 4;
  std::vector<double> n(4), h(4), out(4);
  for (std::size_t i = 0; i < 4; ++i) {
    n[i] = (x[i] - mean) / std::sqrt(var + 1e-8) * blk.ffn_norm_gain.at(i) + blk.ffn_norm_bias.at(i);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double s = blk.b_inner.at(j);
    for (std::size_t i = 0; i < 4; ++i) s += n[i] * blk.w_inner.at(i * 4 + j);
    h[j] = std::max(0.0, s);
  }
  for (std::size_t j = 0; j < 4; ++j) {
    double s = blk.b_outer.at(j);
    for (std::size_t i = 0; i < 4; ++i) s += h[i] * blk.w_outer.at(i * 4 + j);
    EXPECT_NEAR(y.at(j), x[j] + s, 1e-12);
  }
}

TEST(FfnBlock, GradientCheck) {
  auto p = small_model();
  Rng rng(4);
  std::vector<double> v(2 * 3 * 8), w(2 * 3 * 8), gate(8);
  for (double& x : v) x = rng.normal(0, 1);
  for (double& x : w) x = rng.normal(0, 1);
  for (double& x : gate) x = rng.uniform01() < 0.7 ? 1.0 : 0.0;
  auto a = ad::Tensor::parameter({2, 3, 8}, v);
  const auto wt = ad::Tensor::constant({2, 3, 8}, w);
  const auto& b = p.blocks[0];
  const auto r = ad::grad_check([&] { return ad::sum(ad::mul(model::ffn_block(a, b, gate, 1e-8), wt)); },
                                {a, b.ffn_norm_gain, b.ffn_norm_bias, b.w_inner, b.b_inner, b.w_outer, b.b_outer});
  EXPECT_LT(r.max_relative_error, 1e-4);
}

TEST(AttentionBlock, SinglePositionAttendsToItself) {
  const auto p = small_model(4, 1, 5);
  const std::vector<std::vector<std::int64_t>> s{{2}};
  const auto input = model::make_input(s, 1);
  const auto mask = model::causal_mask(input, 2);
  const std::vector<double> x{0.3, -1.0, 2.0, 0.5};
  const auto a = ad::Tensor::constant({1, 1, 4}, x);
  const auto& blk = p.blocks[0];
  const auto y = model::attention_block(a, blk, mask, 2, 1e-8);
  // With one key the attention output is the value projection itself.
  const auto normed = ad::layer_norm(a, blk.attn_norm_gain, blk.attn_norm_bias, 1e-8);
  const auto expected = ad::add(a, ad::matmul(ad::matmul(normed, blk.w_value), blk.w_out));
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(y.at(k), expected.at(k), 1e-12);
}

TEST(AttentionBlock, CausalMaskAdmitsValidPrefixOnly) {
  const std::vector<std::vector<std::int64_t>> s{{4, 5}};
  const auto input = model::make_input(s, 4);
  const auto m = model::causal_mask(input, 1);
  // Rows are queries 0..3, columns keys 0..3; positions 0 and 1 are padding.
  const std::vector<std::uint8_t> expected{0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 1};
  EXPECT_EQ(*m, expected);
  const auto w = ad::softmax_lastdim(ad::Tensor::constant({1, 1, 4, 4}, std::vector<double>(16, 0.3)), m);
  EXPECT_NEAR(w.at(12) + w.at(13) + w.at(14) + w.at(15), 1.0, 1e-12);
}

TEST(AttentionBlock, FutureBlindness) {
  const auto p = small_model();
  const std::vector<std::vector<std::int64_t>> s{{1, 2, 3, 4, 5, 6, 7, 8}};
  const auto input = model::make_input(s, 8);
  const auto mask = model::causal_mask(input, 2);
  Rng rng(5);
  std::vector<double> v(8 * 8);
  for (double& x : v) x = rng.normal(0, 1);
  auto w = v;
  for (std::size_t k = 0; k < 8; ++k) w[4 * 8 + k] += 1.0;
  const auto ya = model::attention_block(ad::Tensor::constant({1, 8, 8}, v), p.blocks[0], mask, 2, 1e-8);
  const auto yb = model::attention_block(ad::Tensor::constant({1, 8, 8}, w), p.blocks[0], mask, 2, 1e-8);
  for (std::size_t i = 0; i < 4 * 8; ++i) EXPECT_EQ(ya.at(i), yb.at(i));
}

TEST(ScoreItems, ZeroVectorAndOrthonormalTable) {
  const auto table = ad::Tensor::constant({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
  const std::vector<double> zero(3, 0.0), e1{0, 1, 0};
  for (double s : model::score_items(zero, table)) EXPECT_EQ(s, 0.0);
  const auto scores = model::score_items(e1, table);
  EXPECT_EQ(std::max_element(scores.begin(), scores.end()) - scores.begin(), 1);
}

TEST(ScoreItems, MatchesDirectLoop) {
  Rng rng(6);
  std::vector<double> t(5 * 4), h(4);
  for (double& x : t) x = rng.normal(0, 1);
  for (double& x : h) x = rng.normal(0, 1);
  const auto scores = model::score_items(h, ad::Tensor::constant({5, 4}, t));
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t k = 0; k < 4; ++k) s += h[k] * t[i * 4 + k];
    EXPECT_EQ(scores[i], s);
  }
}

TEST(Encoder, FullGradientCheckWithFrozenMasks) {
  auto p = small_model(8, 8, 12, 7);
  const std::vector<std::vector<std::int64_t>> s{{1, 2, 3, 4, 5, 6, 7, 8}, {9, 10, 11}};
  const auto input = model::make_input(s, 8);
  Rng rng(8);
  lbd::GateScales gates;
  for (const auto& g : p.gates) gates.push_back(lbd::sample_draw(std::vector{g}, rng).true_scales()[0]);
  std::vector<std::int64_t> pos(16), neg(16);
  for (std::size_t i = 0; i < 16; ++i) {
    pos[i] = 1 + static_cast<std::int64_t>(i % 12);
    neg[i] = 1 + static_cast<std::int64_t>((i * 5 + 3) % 12);
  }
  const auto r = ad::grad_check(
      [&] {
        const auto h = model::encode(p, input, gates);
        return loss::next_item_loss(h, p.item_embedding, pos, neg, input.valid);
      },
      p.tensors());
  const auto names = p.tensor_names();
  for (std::size_t i = 0; i < names.size(); ++i) EXPECT_LT(r.per_param[i], 1e-4) << names[i];
}

TEST(Checkpoint, RoundTripIsExact) {
  auto p = small_model();
  p.gates[1].logits[2] = -0.25;
  const auto path = temp_path("roundtrip.bin");
  model::save_checkpoint(path, p, {{"best_epoch", 3}});
  const auto c = model::load_checkpoint(path);
  EXPECT_EQ(c.metadata.at("best_epoch"), 3);
  EXPECT_EQ(c.params.num_items, p.num_items);
  EXPECT_EQ(c.params.config.embed_dim, p.config.embed_dim);
  const auto a = p.tensors();
  const auto b = c.params.tensors();
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].shape(), b[i].shape());
    EXPECT_TRUE(std::equal(a[i].data().begin(), a[i].data().end(), b[i].data().begin()));
  }
  EXPECT_EQ(c.params.gates[1].logits, p.gates[1].logits);
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptionVersionAndMagicAreRefused) {
  const auto p = small_model();
  const auto path = temp_path("corrupt.bin");
  model::save_checkpoint(path, p);
  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  const auto write = [&](const std::string& b) { std::ofstream(path, std::ios::binary) << b; };

  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x5a;
  write(flipped);
  EXPECT_THROW(model::load_checkpoint(path), FormatError);

  auto version = bytes;
  version[8] = 9;
  write(version);
  try {
    model::load_checkpoint(path);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("version 9"), std::string::npos) << e.what();
  }

  auto magic = bytes;
  magic[0] = 'X';
  write(magic);
  EXPECT_THROW(model::load_checkpoint(path), FormatError);

  write(bytes.substr(0, bytes.size() - 20));
  EXPECT_THROW(model::load_checkpoint(path), FormatError);
  std::filesystem::remove(path);
}
