#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lma4rec/train/trainer.hpp"

namespace lma4rec::train {

inline constexpr double kLambdaGrid[] = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
inline constexpr std::size_t kHiddenGrid[] = {64, 128, 192, 256, 320};

struct SweepRow {
  double lambda = 0.0;
  std::size_t hidden_size = 0;
  std::uint64_t seed = 0;
  eval::MetricsReport test;
  TrainLog log;
};

// Seed for one grid point, independent of where the point sits in the grid.
std::uint64_t sweep_seed(std::uint64_t base_seed, double lambda, std::size_t hidden_size);

// Runs fit for every (lambda, hidden) pair, lambda-major, and reports test metrics.
std::vector<SweepRow> sweep(const data::SplitDataset& split, const augment::CorrelationTable& correlations,
                            std::span<const double> lambdas, std::span<const std::size_t> hidden_sizes,
                            const model::ModelConfig& base_model, const augment::AugmentConfig& augment_config,
                            const TrainConfig& base_train);

// Header: lambda,hidden_size,HR@5,HR@10,HR@20,NDCG@5,NDCG@10,NDCG@20
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace lma4rec::train
