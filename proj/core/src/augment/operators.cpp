#include "lma4rec/augment/operators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "lma4rec/error.hpp"

namespace lma4rec::augment {

std::string_view operator_name(Operator op) {
  switch (op) {
    case Operator::kCrop: return "crop";
    case Operator::kMask: return "mask";
    case Operator::kReorder: return "reorder";
    case Operator::kSubstitute: return "substitute";
    case Operator::kInsert: return "insert";
    case Operator::kIdentity: return "identity";
  }
  return "unknown";
}

void AugmentConfig::validate() const {
  for (double r : {crop_ratio, mask_ratio, reorder_ratio, substitute_ratio, insert_ratio}) {
    if (!(r > 0.0 && r <= 1.0)) throw ContractError("augment: ratios must lie in (0,1]");
  }
  if (short_sequence_threshold < 1) throw ContractError("augment: short_sequence_threshold must be >= 1");
  if (correlation_window < 1 || correlation_top_k < 1) throw ContractError("augment: correlation window/top_k must be >= 1");
  if (max_len < 1) throw ContractError("augment: max_len must be >= 1");
}

std::size_t ratio_count(double ratio, std::size_t len) {
  const double c = std::floor(ratio * static_cast<double>(len) + 1e-9);
  return c <= 0.0 ? 0 : std::min(len, static_cast<std::size_t>(c));
}

namespace {

Sequence to_vec(std::span<const std::int64_t> s) { return Sequence(s.begin(), s.end()); }

// `count` distinct positions in [0, len), in ascending order.
std::vector<std::size_t> choose_positions(std::size_t len, std::size_t count, Rng& rng) {
  std::vector<std::size_t> idx(len);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = static_cast<std::size_t>(rng.uniform_int(static_cast<std::int64_t>(i), static_cast<std::int64_t>(len - 1)));
    std::swap(idx[i], idx[j]);
  }
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace

AugmentResult crop(std::span<const std::int64_t> seq, double ratio, Rng& rng) {
  if (seq.size() < 2) return {to_vec(seq), Operator::kCrop, true};
  const std::size_t len = std::max<std::size_t>(1, ratio_count(ratio, seq.size()));
  const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(seq.size() - len)));
  return {Sequence(seq.begin() + static_cast<std::ptrdiff_t>(start),
                   seq.begin() + static_cast<std::ptrdiff_t>(start + len)),
          Operator::kCrop, false};
}

AugmentResult mask_items(std::span<const std::int64_t> seq, double ratio, std::int64_t mask_token, Rng& rng) {
  Sequence out = to_vec(seq);
  if (seq.empty()) return {out, Operator::kMask, true};
  for (std::size_t p : choose_positions(seq.size(), ratio_count(ratio, seq.size()), rng)) out[p] = mask_token;
  return {out, Operator::kMask, false};
}

AugmentResult reorder(std::span<const std::int64_t> seq, double ratio, Rng& rng) {
  Sequence out = to_vec(seq);
  if (seq.size() < 2) return {out, Operator::kReorder, true};
  const std::size_t len = ratio_count(ratio, seq.size());
  if (len <= 1) return {out, Operator::kReorder, false};
  const auto start = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(seq.size() - len)));
  rng.shuffle(std::span<std::int64_t>(out.data() + start, len));
  return {out, Operator::kReorder, false};
}

Sequence substitute_at(std::span<const std::int64_t> seq, std::span<const std::size_t> positions,
                       const CorrelationTable& table) {
  Sequence out = to_vec(seq);
  for (std::size_t p : positions) {
    if (p >= out.size()) throw IndexError("substitute_at: position " + std::to_string(p) + " out of range");
    if (const auto c = table.top(seq[p])) out[p] = *c;
  }
  return out;
}

Sequence insert_at(std::span<const std::int64_t> seq, std::span<const std::size_t> positions,
                   const CorrelationTable& table, std::size_t max_len) {
  std::vector<std::uint8_t> after(seq.size(), 0);
  for (std::size_t p : positions) {
    if (p >= seq.size()) throw IndexError("insert_at: position " + std::to_string(p) + " out of range");
    after[p] = 1;
  }
  Sequence out;
  out.reserve(seq.size() + positions.size());
  for (std::size_t i = 0; i < seq.size(); ++i) {
    out.push_back(seq[i]);
    if (after[i]) {
      if (const auto c = table.top(seq[i])) out.push_back(*c);
    }
  }
  if (out.size() > max_len) out.erase(out.begin(), out.end() - static_cast<std::ptrdiff_t>(max_len));
  return out;
}

AugmentResult substitute(std::span<const std::int64_t> seq, double ratio, const CorrelationTable& table, Rng& rng) {
  if (seq.empty()) return {Sequence{}, Operator::kSubstitute, true};
  const auto pos = choose_positions(seq.size(), ratio_count(ratio, seq.size()), rng);
  return {substitute_at(seq, pos, table), Operator::kSubstitute, false};
}

AugmentResult insert(std::span<const std::int64_t> seq, double ratio, const CorrelationTable& table,
                     std::size_t max_len, Rng& rng) {
  if (seq.empty()) return {Sequence{}, Operator::kInsert, true};
  const auto pos = choose_positions(seq.size(), ratio_count(ratio, seq.size()), rng);
  return {insert_at(seq, pos, table, max_len), Operator::kInsert, false};
}

AugmentResult apply_operator(Operator op, std::span<const std::int64_t> seq, const AugmentConfig& config,
                             const CorrelationTable& table, std::int64_t mask_token, Rng& rng) {
  switch (op) {
    case Operator::kCrop: return crop(seq, config.crop_ratio, rng);
    case Operator::kMask: return mask_items(seq, config.mask_ratio, mask_token, rng);
    case Operator::kReorder: return reorder(seq, config.reorder_ratio, rng);
    case Operator::kSubstitute: return substitute(seq, config.substitute_ratio, table, rng);
    case Operator::kInsert: return insert(seq, config.insert_ratio, table, config.max_len, rng);
    case Operator::kIdentity: return {to_vec(seq), Operator::kIdentity, false};
  }
  throw ContractError("apply_operator: unknown operator");
}

AugmentResult select_augmentation(std::span<const std::int64_t> seq, const AugmentConfig& config,
                                  const CorrelationTable& table, std::int64_t mask_token, Rng& rng) {
  Operator op;
  if (seq.size() <= config.short_sequence_threshold) {
    op = rng.uniform_int(0, 1) == 0 ? Operator::kSubstitute : Operator::kInsert;
  } else {
    op = kAllOperators[static_cast<std::size_t>(rng.uniform_int(0, 4))];
  }
  AugmentResult r = apply_operator(op, seq, config, table, mask_token, rng);
  if (r.items.empty()) r.items = to_vec(seq);
  return r;
}

}  // namespace lma4rec::augment
