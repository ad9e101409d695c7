#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <unordered_map>
#include <vector>

namespace lma4rec::augment {

struct Correlate {
  std::int64_t item = 0;
  double score = 0.0;
};

// Pairwise scores from item occurrence counts over sliding windows:
// every window of `window` consecutive positions (or the whole sequence when
// shorter) is one coordinate, and score(a, b) is the cosine between the two
// items' count vectors. Zero when a and b never share a window. Symmetric.
class CoOccurrence {
 public:
  CoOccurrence(std::span<const std::vector<std::int64_t>> sequences, std::size_t num_items, std::size_t window);

  double score(std::int64_t a, std::int64_t b) const;
  std::size_t num_items() const noexcept { return num_items_; }
  // Non-zero scores of item a against every other item.
  const std::unordered_map<std::int64_t, double>& row(std::int64_t a) const;

 private:
  std::size_t num_items_;
  std::vector<std::unordered_map<std::int64_t, double>> dots_;
  std::vector<double> norms_sq_;
  std::vector<std::unordered_map<std::int64_t, double>> scores_;
};

// Top-k correlates per item, in decreasing score (ties by ascending item index).
class CorrelationTable {
 public:
  CorrelationTable() = default;
  explicit CorrelationTable(std::size_t num_items) : rows_(num_items + 2) {}

  std::size_t num_items() const noexcept { return rows_.empty() ? 0 : rows_.size() - 2; }
  std::span<const Correlate> correlates(std::int64_t item) const;
  std::optional<std::int64_t> top(std::int64_t item) const;
  // Replaces the list for `item` (used by tests and by the TSV reader).
  void set(std::int64_t item, std::vector<Correlate> list);

  friend bool operator==(const CorrelationTable& a, const CorrelationTable& b);

 private:
  std::vector<std::vector<Correlate>> rows_;
};

// Built from training sequences only; an item is never its own correlate.
CorrelationTable build_correlation(std::span<const std::vector<std::int64_t>> sequences, std::size_t num_items,
                                   std::size_t window = 5, std::size_t top_k = 10);

// TSV with header "item\tcorrelate\tscore", one row per retained pair.
void write_correlation_tsv(std::ostream& out, const CorrelationTable& table);
CorrelationTable read_correlation_tsv(std::istream& in, std::size_t num_items);

}  // namespace lma4rec::augment
