#include "lma4rec/data/stats.hpp"

#include <unordered_set>

#include <fmt/format.h>

namespace lma4rec::data {

StatsReport make_stats(std::string name, std::size_t users, std::size_t items, std::size_t interactions) {
  StatsReport r;
  r.name = std::move(name);
  r.users = users;
  r.items = items;
  r.interactions = interactions;
  r.avg_length = users == 0 ? 0.0 : static_cast<double>(interactions) / static_cast<double>(users);
  const double cells = static_cast<double>(users) * static_cast<double>(items);
  r.sparsity = cells == 0.0 ? 0.0 : 1.0 - static_cast<double>(interactions) / cells;
  return r;
}

StatsReport dataset_stats(const SplitDataset& split, std::string name) {
  std::size_t n = 0;
  for (const auto& u : split.users) n += u.train.size() + 2;
  return make_stats(std::move(name), split.users.size(), split.num_items, n);
}

StatsReport dataset_stats(const std::vector<Interaction>& interactions, std::string name) {
  std::unordered_set<std::string> users;
  std::unordered_set<std::string> items;
  for (const auto& r : interactions) {
    users.insert(r.user_key);
    items.insert(r.item_key);
  }
  return make_stats(std::move(name), users.size(), items.size(), interactions.size());
}

nlohmann::json to_json(const StatsReport& r) {
  return {{"dataset", r.name},
          {"users", r.users},
          {"items", r.items},
          {"interactions", r.interactions},
          {"avg_length", r.avg_length},
          {"avg_length_definition", "interactions / users"},
          {"sparsity", r.sparsity}};
}

std::string format_sparsity(double sparsity) { return fmt::format("{:.2f}%", sparsity * 100.0); }

std::string to_text(const std::vector<StatsReport>& reports) {
  std::string out = fmt::format("{:<12}{:>10}{:>10}{:>14}{:>12}{:>10}\n", "Dataset", "users", "items", "interactions",
                                "avg.length", "sparsity");
  for (const auto& r : reports) {
    out += fmt::format("{:<12}{:>10}{:>10}{:>14}{:>12.1f}{:>10}\n", r.name, r.users, r.items, r.interactions,
                       r.avg_length, format_sparsity(r.sparsity));
  }
  return out;
}

}  // namespace lma4rec::data
