#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "lma4rec/augment/correlation.hpp"
#include "lma4rec/random.hpp"

namespace lma4rec::augment {

using Sequence = std::vector<std::int64_t>;

enum class Operator { kCrop, kMask, kReorder, kSubstitute, kInsert, kIdentity };

std::string_view operator_name(Operator op);
inline constexpr Operator kAllOperators[] = {Operator::kCrop, Operator::kMask, Operator::kReorder,
                                             Operator::kSubstitute, Operator::kInsert};

struct AugmentConfig {
  double crop_ratio = 0.6;
  double mask_ratio = 0.3;
  double reorder_ratio = 0.3;
  double substitute_ratio = 0.3;
  double insert_ratio = 0.3;
  std::size_t short_sequence_threshold = 4;
  std::size_t correlation_window = 5;
  std::size_t correlation_top_k = 10;
  std::size_t max_len = 50;

  void validate() const;
};

struct AugmentResult {
  Sequence items;
  Operator op = Operator::kIdentity;
  bool skipped = false;  // the operator's precondition failed and the input was returned as is
};

// floor(ratio * len), robust to representation error in the product.
std::size_t ratio_count(double ratio, std::size_t len);

// Contiguous slice of length max(1, floor(ratio * len)) at a uniform start.
AugmentResult crop(std::span<const std::int64_t> seq, double ratio, Rng& rng);
// floor(ratio * len) distinct positions replaced by the mask token.
AugmentResult mask_items(std::span<const std::int64_t> seq, double ratio, std::int64_t mask_token, Rng& rng);
// Shuffles one contiguous window of floor(ratio * len) items.
AugmentResult reorder(std::span<const std::int64_t> seq, double ratio, Rng& rng);
// floor(ratio * len) distinct positions replaced by their item's top correlate.
AugmentResult substitute(std::span<const std::int64_t> seq, double ratio, const CorrelationTable& table, Rng& rng);
// After each of floor(ratio * len) distinct positions inserts that item's top
// correlate; keeps the most recent max_len items.
AugmentResult insert(std::span<const std::int64_t> seq, double ratio, const CorrelationTable& table,
                     std::size_t max_len, Rng& rng);

// Deterministic cores of substitute/insert for explicit positions.
Sequence substitute_at(std::span<const std::int64_t> seq, std::span<const std::size_t> positions,
                       const CorrelationTable& table);
Sequence insert_at(std::span<const std::int64_t> seq, std::span<const std::size_t> positions,
                   const CorrelationTable& table, std::size_t max_len);

// Runs one specific operator with the ratios from `config`.
AugmentResult apply_operator(Operator op, std::span<const std::int64_t> seq, const AugmentConfig& config,
                             const CorrelationTable& table, std::int64_t mask_token, Rng& rng);

// Sequences no longer than the threshold draw uniformly from {substitute,
// insert}; longer ones from all five operators.
AugmentResult select_augmentation(std::span<const std::int64_t> seq, const AugmentConfig& config,
                                  const CorrelationTable& table, std::int64_t mask_token, Rng& rng);

}  // namespace lma4rec::augment
