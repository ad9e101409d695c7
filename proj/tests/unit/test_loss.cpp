#include <gtest/gtest.h>

#include <cmath>

#include "lma4rec/autodiff/grad_check.hpp"
#include "lma4rec/error.hpp"
#include "lma4rec/loss/losses.hpp"
#include "oracles.hpp"

using namespace lma4rec;

namespace {

// h with one row per (sequence, position); valid everywhere unless given.
model::SequenceEmbedding embedding(std::size_t b, std::size_t t, std::size_t d, std::vector<double> values,
                                   std::vector<std::uint8_t> valid = {}) {
  if (valid.empty()) valid.assign(b * t, 1);
  return {ad::Tensor::parameter({b, t, d}, std::move(values)), b, t, std::move(valid)};
}

oracle::Matrix random_matrix(std::size_t n, std::size_t d, Rng& rng) {
  oracle::Matrix m(n, std::vector<double>(d));
  for (auto& r : m) {
    for (double& x : r) x = rng.normal(0, 1);
  }
  return m;
}

ad::Tensor to_tensor(const oracle::Matrix& m) {
  std::vector<double> flat;
  for (const auto& r : m) flat.insert(flat.end(), r.begin(), r.end());
  return ad::Tensor::parameter({m.size(), m[0].size()}, flat);
}

}  // namespace

TEST(NextItemLoss, SymmetricLogitsGiveLn2) {
  // Positive and negative rows are identical, so s.v+ == s.v-.
  const auto table = ad::Tensor::constant({3, 2}, {0, 0, 0.4, -1.3, 0.4, -1.3});
  const auto h = embedding(1, 2, 2, {0.7, 0.2, -1.5, 3.0});
  const std::vector<std::int64_t> pos{1, 1}, neg{2, 2};
  const std::vector<std::uint8_t> targets{1, 1};
  EXPECT_NEAR(loss::next_item_loss(h, table, pos, neg, targets).item(), std::log(2.0), 1e-12);
}

TEST(NextItemLoss, ClosedFormAndSeparation) {
  const auto table = ad::Tensor::constant({3, 2}, {0, 0, 1, 0, 0, 1});
  const std::vector<std::int64_t> pos{1}, neg{2};
  const std::vector<std::uint8_t> targets{1};
  EXPECT_NEAR(loss::next_item_loss(embedding(1, 1, 2, {1, 0}), table, pos, neg, targets).item(),
              -std::log(std::exp(1.0) / (std::exp(1.0) + 1.0)), 1e-12);
  EXPECT_LT(loss::next_item_loss(embedding(1, 1, 2, {60, 0}), table, pos, neg, targets).item(), 1e-20);
}

TEST(NextItemLoss, IgnoresPaddedPositionsAndRequiresTargets) {
  const auto table = ad::Tensor::constant({3, 2}, {0, 0, 1, 0, 0, 1});
  const std::vector<std::int64_t> pos{0, 1}, neg{0, 2};
  const std::vector<std::uint8_t> targets{0, 1};
  const double a = loss::next_item_loss(embedding(1, 2, 2, {5, 5, 1, 0}, targets), table, pos, neg, targets).item();
  const double b = loss::next_item_loss(embedding(1, 2, 2, {-9, 2, 1, 0}, targets), table, pos, neg, targets).item();
  EXPECT_EQ(a, b);
  const std::vector<std::uint8_t> none{0, 0};
  EXPECT_THROW(loss::next_item_loss(embedding(1, 2, 2, {1, 1, 1, 1}), table, pos, neg, none), ContractError);
}

TEST(PoolSequence, LastValidPosition) {
  // Left-padded toy batch: row 0 has 2 pads, row 1 none, T = 4.
  std::vector<double> v(2 * 4 * 3);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<double>(i);
  const std::vector<std::uint8_t> valid{0, 0, 1, 1, 1, 1, 1, 1};
  const auto pooled = loss::pool_sequence(embedding(2, 4, 3, v, valid));
  // The last valid position of each row is index T - 1 under left padding.
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(pooled.at(k), v[(0 * 4 + 3) * 3 + k]);
    EXPECT_EQ(pooled.at(3 + k), v[(1 * 4 + 3) * 3 + k]);
  }
}

TEST(PoolSequence, RightPaddedIndexArithmetic) {
  // Right-padded row with pad_count = 1 pools at T - pad_count - 1.
  std::vector<double> v(1 * 3 * 2);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 10.0 + static_cast<double>(i);
  const std::vector<std::uint8_t> valid{1, 1, 0};
  const auto pooled = loss::pool_sequence(embedding(1, 3, 2, v, valid));
  EXPECT_EQ(pooled.at(0), v[(3 - 1 - 1) * 2]);
}

TEST(PoolSequence, SinglePositionAndEmpty) {
  const auto pooled = loss::pool_sequence(embedding(1, 1, 2, {4, 5}));
  EXPECT_EQ(pooled.at(1), 5.0);
  EXPECT_THROW(loss::pool_sequence(embedding(1, 2, 1, {1, 2}, {0, 0})), ContractError);
}

TEST(InfoNce, OrthogonalClosedForm) {
  for (double tau : {1.0, 0.5, 2.0}) {
    const auto a = ad::Tensor::constant({2, 2}, {1, 0, 0, 1});
    const double expected = -std::log(std::exp(1.0 / tau) / (std::exp(1.0 / tau) + 2.0));
    EXPECT_NEAR(loss::info_nce({a, a}, tau).item(), expected, 1e-12) << tau;
  }
}

TEST(InfoNce, MatchesDoubleLoopOracle) {
  Rng rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + rng.uniform_int(0, 6), d = 1 + rng.uniform_int(0, 5);
    const double tau = 0.2 + 2.0 * rng.uniform01();
    const auto a = random_matrix(n, d, rng);
    const auto b = random_matrix(n, d, rng);
    EXPECT_NEAR(loss::info_nce({to_tensor(a), to_tensor(b)}, tau).item(), oracle::nt_xent(a, b, tau), 1e-10);
  }
}

TEST(InfoNce, PermutationAndViewExchangeInvariance) {
  Rng rng(2);
  const auto a = random_matrix(5, 3, rng);
  const auto b = random_matrix(5, 3, rng);
  const double base = loss::info_nce({to_tensor(a), to_tensor(b)}, 1.0).item();
  EXPECT_NEAR(loss::info_nce({to_tensor(b), to_tensor(a)}, 1.0).item(), base, 1e-12);
  const std::vector<std::size_t> perm{3, 0, 4, 2, 1};
  oracle::Matrix pa, pb;
  for (std::size_t i : perm) {
    pa.push_back(a[i]);
    pb.push_back(b[i]);
  }
  EXPECT_NEAR(loss::info_nce({to_tensor(pa), to_tensor(pb)}, 1.0).item(), base, 1e-12);
}

TEST(InfoNce, NonNegativeAndMonotoneInPositiveSimilarity) {
  Rng rng(3);
  auto a = random_matrix(3, 4, rng);
  auto b = random_matrix(3, 4, rng);
  // Orthogonal coordinates for the positive pair of anchor 0 so that raising
  // it leaves every negative similarity alone.
  for (auto* m : {&a, &b}) {
    for (auto& r : *m) r.push_back(0.0);
  }
  double prev = loss::info_nce({to_tensor(a), to_tensor(b)}, 1.0).item();
  EXPECT_GE(prev, 0.0);
  for (int step = 1; step <= 5; ++step) {
    a[0].back() = 0.5 * step;
    b[0].back() = 0.5 * step;
    // Moving along a fresh axis also raises the self-similarity, which is
    // excluded; the negatives with other rows stay fixed.
    const double cur = loss::info_nce({to_tensor(a), to_tensor(b)}, 1.0).item();
    EXPECT_GE(cur, 0.0);
    EXPECT_LT(cur, prev);
    prev = cur;
  }
}

TEST(InfoNce, NeedsTwoSequences) {
  const auto a = ad::Tensor::constant({1, 2}, {1, 0});
  EXPECT_THROW(loss::info_nce({a, a}, 1.0), ContractError);
  EXPECT_THROW(loss::info_nce({ad::Tensor::zeros({2, 2}), ad::Tensor::zeros({2, 2})}, 0.0), ContractError);
}

TEST(InfoNce, GradientCheck) {
  Rng rng(4);
  auto a = to_tensor(random_matrix(4, 3, rng));
  auto b = to_tensor(random_matrix(4, 3, rng));
  const auto r = ad::grad_check([&] { return loss::info_nce({a, b}, 0.7); }, {a, b});
  EXPECT_LT(r.max_relative_error, 1e-5);
}

TEST(JointLoss, Arithmetic) {
  const auto l_rs = ad::Tensor::scalar(1.0);
  const auto l_ssl = ad::Tensor::scalar(2.0);
  EXPECT_DOUBLE_EQ(loss::joint_loss(l_rs, l_ssl, 0.1).item(), 1.2);
  EXPECT_EQ(loss::joint_loss(l_rs, l_ssl, 0.0).item(), 1.0);
}

TEST(JointLoss, PiecewiseLinearInLambda) {
  const auto l_rs = ad::Tensor::scalar(0.8);
  const auto l_ssl = ad::Tensor::scalar(3.3);
  for (double lambda : {0.0, 0.1, 0.2, 0.3, 0.4, 0.5}) {
    EXPECT_EQ(loss::joint_loss(l_rs, l_ssl, lambda).item(), 0.8 + lambda * 3.3);
  }
}

TEST(JointLoss, GradientIsSumOfParts) {
  auto x = ad::Tensor::parameter({3}, {0.5, -1.0, 2.0});
  const auto f = [&] { return ad::sum(ad::mul(x, x)); };
  const auto g = [&] { return ad::sum(ad::exp(x)); };
  ad::backward(loss::joint_loss(f(), g(), 0.3));
  const std::vector<double> joint(x.grad().begin(), x.grad().end());
  for (std::size_t i = 0; i < 3; ++i) {
    const double xi = x.data()[i];
    EXPECT_NEAR(joint[i], 2 * xi + 0.3 * std::exp(xi), 1e-12);
  }
}

TEST(LossWeights, Validation) {
  loss::LossWeights w;
  EXPECT_EQ(w.lambda, 0.1);
  EXPECT_EQ(w.temperature, 1.0);
  w.temperature = 0.0;
  EXPECT_THROW(w.validate(), ContractError);
  w.temperature = 1.0;
  w.lambda = -0.1;
  EXPECT_THROW(w.validate(), ContractError);
}
