#include "lma4rec/train/sweep.hpp"

#include <bit>
#include <ostream>

#include <fmt/format.h>

#include "lma4rec/error.hpp"

namespace lma4rec::train {

std::uint64_t sweep_seed(std::uint64_t base_seed, double lambda, std::size_t hidden_size) {
  const std::uint64_t h = Rng::mix_seed(base_seed, "sweep-lambda", std::bit_cast<std::uint64_t>(lambda));
  return Rng::mix_seed(h, "sweep-hidden", hidden_size);
}

std::vector<SweepRow> sweep(const data::SplitDataset& split, const augment::CorrelationTable& correlations,
                            std::span<const double> lambdas, std::span<const std::size_t> hidden_sizes,
                            const model::ModelConfig& base_model, const augment::AugmentConfig& augment_config,
                            const TrainConfig& base_train) {
  if (lambdas.empty() || hidden_sizes.empty()) throw ContractError("sweep: grids must be nonempty");
  std::vector<SweepRow> rows;
  eval::EvalOptions eval_options;
  eval_options.mask_history = base_train.mask_history;
  for (double lambda : lambdas) {
    for (std::size_t hidden : hidden_sizes) {
      model::ModelConfig mc = base_model;
      mc.embed_dim = hidden;
      TrainConfig tc = base_train;
      tc.weights.lambda = lambda;
      tc.seed = sweep_seed(base_train.seed, lambda, hidden);
      FitResult r = fit(split, correlations, mc, augment_config, tc);
      SweepRow row;
      row.lambda = lambda;
      row.hidden_size = hidden;
      row.seed = tc.seed;
      row.test = eval::evaluate(r.best, split, data::Target::kTest, eval_options);
      row.log = std::move(r.log);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows) {
  out << "lambda,hidden_size";
  for (const auto& name : eval::metric_names()) out << ',' << name;
  out << '\n';
  for (const auto& r : rows) {
    out << fmt::format("{},{}", r.lambda, r.hidden_size);
    for (std::size_t k : eval::kCutoffs) out << fmt::format(",{:.6f}", r.test.hr.at(k));
    for (std::size_t k : eval::kCutoffs) out << fmt::format(",{:.6f}", r.test.ndcg.at(k));
    out << '\n';
  }
}

}  // namespace lma4rec::train
