#include "lma4rec/data/synthetic.hpp"

#include <string>

#include "lma4rec/error.hpp"
#include "lma4rec/random.hpp"

namespace lma4rec::data {

std::vector<Interaction> generate_cyclic(const SyntheticConfig& config) {
  if (config.items < 2 || config.users == 0) throw ContractError("synthetic: need >= 2 items and >= 1 user");
  if (config.min_len < 3 || config.max_len < config.min_len) throw ContractError("synthetic: need 3 <= min_len <= max_len");
  if (!(config.rule_prob >= 0.0 && config.rule_prob <= 1.0)) throw ContractError("synthetic: rule_prob must lie in [0,1]");
  Rng rng(config.seed);
  const auto n = static_cast<std::int64_t>(config.items);
  std::vector<Interaction> out;
  for (std::size_t u = 0; u < config.users; ++u) {
    const auto len = static_cast<std::size_t>(
        rng.uniform_int(static_cast<std::int64_t>(config.min_len), static_cast<std::int64_t>(config.max_len)));
    std::int64_t item = rng.uniform_int(0, n - 1);
    for (std::size_t t = 0; t < len; ++t) {
      out.push_back(Interaction{"u" + std::to_string(u), "i" + std::to_string(item), static_cast<std::int64_t>(t)});
      const bool holdout = t + 3 >= len;  // transitions into the last two positions
      const bool follow = (config.clean_holdout && holdout) || rng.uniform01() < config.rule_prob;
      if (follow) {
        item = (item + 1) % n;
      } else {
        std::int64_t jump = rng.uniform_int(0, n - 2);
        if (jump >= (item + 1) % n) ++jump;
        item = jump;
      }
    }
  }
  return out;
}

}  // namespace lma4rec::data
