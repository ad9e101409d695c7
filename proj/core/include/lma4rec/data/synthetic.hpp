#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lma4rec/data/ingest.hpp"

namespace lma4rec::data {

// Users walk a cycle over the items: item i is followed by (i + 1) mod items,
// except that with probability 1 - rule_prob a training transition jumps to a
// uniformly chosen other item. The last two transitions (the held-out
// validation and test targets) always follow the rule when clean_holdout is set.
struct SyntheticConfig {
  std::size_t users = 200;
  std::size_t items = 20;
  double rule_prob = 0.9;
  std::size_t min_len = 8;
  std::size_t max_len = 16;
  bool clean_holdout = true;
  std::uint64_t seed = 1;
};

std::vector<Interaction> generate_cyclic(const SyntheticConfig& config);

}  // namespace lma4rec::data
