#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lma4rec/data/dataset.hpp"
#include "lma4rec/model/params.hpp"

namespace lma4rec::eval {

inline constexpr std::size_t kCutoffs[] = {5, 10, 20};

// 1-based rank of `target` among items 1..N, where scores[i - 1] is item i's
// score. Items with a strictly greater score rank ahead; equal scores are
// ordered by ascending item index.
std::size_t rank_target(std::span<const double> scores, std::int64_t target);

double hr_at_k(std::span<const std::size_t> ranks, std::size_t k);
// Single relevant item per user: 1 / log2(rank + 1) within the cutoff, else 0.
double ndcg_at_k(std::span<const std::size_t> ranks, std::size_t k);

struct MetricsReport {
  std::string split;
  std::size_t users = 0;
  std::map<std::size_t, double> hr;
  std::map<std::size_t, double> ndcg;

  static MetricsReport from_ranks(std::string split, std::span<const std::size_t> ranks);
  bool operator==(const MetricsReport&) const = default;
};

struct EvalOptions {
  std::size_t batch_size = 256;
  std::size_t max_len = 0;  // 0: the model's max_len
  // Remove the user's history items (other than the target) from the candidates.
  bool mask_history = false;
};

// Ranks of the held-out target for every user, scored from the last position
// of the history encoded in evaluation mode.
std::vector<std::size_t> rank_users(const model::SasrecParams& params, const data::SplitDataset& split,
                                    data::Target target, const EvalOptions& options = {});

MetricsReport evaluate(const model::SasrecParams& params, const data::SplitDataset& split, data::Target target,
                       const EvalOptions& options = {});

// {"split", "users", "metrics": {"HR@5", ..., "NDCG@20"}}
nlohmann::json to_json(const MetricsReport& report);
MetricsReport report_from_json(const nlohmann::json& j);
// Aligned rows, one per metric, as "Metric  value".
std::string to_text(const MetricsReport& report);
std::vector<std::string> metric_names();

}  // namespace lma4rec::eval
