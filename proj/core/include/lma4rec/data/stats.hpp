#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "lma4rec/data/dataset.hpp"

namespace lma4rec::data {

struct StatsReport {
  std::string name;
  std::size_t users = 0;
  std::size_t items = 0;
  std::size_t interactions = 0;
  double avg_length = 0.0;  // interactions / users
  double sparsity = 0.0;    // 1 - interactions / (users * items)
};

StatsReport make_stats(std::string name, std::size_t users, std::size_t items, std::size_t interactions);
StatsReport dataset_stats(const SplitDataset& split, std::string name = "dataset");
StatsReport dataset_stats(const std::vector<Interaction>& interactions, std::string name = "dataset");

nlohmann::json to_json(const StatsReport& report);
// Aligned columns: Dataset, users, items, interactions, avg.length, sparsity.
std::string to_text(const std::vector<StatsReport>& reports);
// Sparsity as a percentage string with two decimals, e.g. "99.95%".
std::string format_sparsity(double sparsity);

}  // namespace lma4rec::data
