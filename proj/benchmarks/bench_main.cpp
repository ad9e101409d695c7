#include <benchmark/benchmark.h>

#include "lma4rec/augment/correlation.hpp"
#include "lma4rec/augment/operators.hpp"
#include "lma4rec/autodiff/ops.hpp"
#include "lma4rec/data/dataset.hpp"
#include "lma4rec/data/synthetic.hpp"
#include "lma4rec/eval/metrics.hpp"
#include "lma4rec/lbd/arm.hpp"
#include "lma4rec/loss/losses.hpp"
#include "lma4rec/model/encoder.hpp"
#include "lma4rec/train/trainer.hpp"

using namespace lma4rec;

namespace {

data::SplitDataset synthetic_split(std::size_t users) {
  data::SyntheticConfig sc;
  sc.users = users;
  const auto rows = data::generate_cyclic(sc);
  const auto catalog = data::Catalog::build(rows);
  return data::leave_one_out_split(data::build_sequences(rows, catalog), catalog.num_items());
}

model::SasrecParams make_model(std::size_t d, std::size_t t, std::size_t items) {
  model::ModelConfig mc;
  mc.embed_dim = d;
  mc.max_len = t;
  Rng rng(1);
  return model::SasrecParams::init(mc, items, rng);
}

}  // namespace

static void BM_Gemm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> a(n * n, 0.5), b(n * n, 0.25), c(n * n);
  for (auto _ : state) {
    ad::kernel::gemm(n, n, n, a.data(), false, b.data(), false, c.data(), false);
    benchmark::DoNotOptimize(c.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n * n * n));
}
BENCHMARK(BM_Gemm)->Arg(32)->Arg(64)->Arg(128);

static void BM_EncodeEval(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const auto params = make_model(d, 50, 1000);
  std::vector<std::vector<std::int64_t>> seqs(64);
  Rng rng(2);
  for (auto& s : seqs) {
    for (int i = 0; i < 50; ++i) s.push_back(rng.uniform_int(1, 1000));
  }
  const auto input = model::make_input(seqs, 50);
  const auto gates = model::eval_scales(params);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(model::encode(params, input, gates).h.data().data());
}
BENCHMARK(BM_EncodeEval)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

static void BM_InfoNce(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(3);
  std::vector<double> a(n * 64), b(n * 64);
  for (auto& x : a) x = rng.normal(0, 1);
  for (auto& x : b) x = rng.normal(0, 1);
  const auto va = ad::Tensor::constant({n, 64}, a);
  const auto vb = ad::Tensor::constant({n, 64}, b);
  ad::NoGradGuard no_grad;
  for (auto _ : state) benchmark::DoNotOptimize(loss::info_nce({va, vb}, 1.0).item());
}
BENCHMARK(BM_InfoNce)->Arg(64)->Arg(256);

static void BM_ArmGradient(benchmark::State& state) {
  const std::vector<lbd::BernoulliGate> gates{lbd::make_gate(0, 256, 0.9), lbd::make_gate(1, 256, 0.9)};
  Rng rng(4);
  for (auto _ : state) {
    const std::vector<lbd::GateDraw> draws{lbd::sample_draw(gates, rng), lbd::sample_draw(gates, rng),
                                           lbd::sample_draw(gates, rng)};
    benchmark::DoNotOptimize(lbd::arm_gradient(0.7, 0.5, draws, gates));
  }
}
BENCHMARK(BM_ArmGradient);

static void BM_SelectAugmentation(benchmark::State& state) {
  const auto split = synthetic_split(200);
  const auto table = augment::build_correlation(split.train_sequences(), split.num_items);
  const augment::AugmentConfig cfg;
  const auto seq = split.users.front().train;
  Rng rng(5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(augment::select_augmentation(seq, cfg, table, 21, rng).items.data());
  }
}
BENCHMARK(BM_SelectAugmentation);

static void BM_BuildCorrelation(benchmark::State& state) {
  const auto split = synthetic_split(static_cast<std::size_t>(state.range(0)));
  const auto seqs = split.train_sequences();
  for (auto _ : state) benchmark::DoNotOptimize(augment::build_correlation(seqs, split.num_items));
}
BENCHMARK(BM_BuildCorrelation)->Arg(200)->Arg(2000)->Unit(benchmark::kMillisecond);

static void BM_TrainStep(benchmark::State& state) {
  const auto split = synthetic_split(200);
  const auto table = augment::build_correlation(split.train_sequences(), split.num_items);
  auto params = make_model(32, 20, split.num_items);
  augment::AugmentConfig ac;
  ac.max_len = 20;
  train::TrainConfig tc;
  tc.no_ssl = state.range(0) == 0;
  train::Trainer trainer(params, tc, {table, ac});
  Rng rng(6);
  const auto batch = data::make_batches(split, 32, 20, rng, 0).front();
  for (auto _ : state) benchmark::DoNotOptimize(trainer.step(batch, rng).l_total);
}
BENCHMARK(BM_TrainStep)->ArgName("ssl")->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

static void BM_Evaluate(benchmark::State& state) {
  const auto split = synthetic_split(200);
  const auto params = make_model(32, 20, split.num_items);
  for (auto _ : state) benchmark::DoNotOptimize(eval::evaluate(params, split, data::Target::kTest).ndcg.at(10));
}
BENCHMARK(BM_Evaluate)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
