#include "lma4rec/augment/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "lma4rec/error.hpp"

namespace lma4rec::augment {

CoOccurrence::CoOccurrence(std::span<const std::vector<std::int64_t>> sequences, std::size_t num_items,
                           std::size_t window)
    : num_items_(num_items), dots_(num_items + 2), norms_sq_(num_items + 2, 0.0), scores_(num_items + 2) {
  if (window == 0) throw ContractError("correlation: window must be positive");
  const auto max_item = static_cast<std::int64_t>(num_items);
  std::map<std::int64_t, double> counts;
  for (const auto& seq : sequences) {
    if (seq.empty()) continue;
    const std::size_t w = std::min(window, seq.size());
    for (std::size_t start = 0; start + w <= seq.size(); ++start) {
      counts.clear();
      for (std::size_t i = start; i < start + w; ++i) {
        if (seq[i] < 1 || seq[i] > max_item) {
          throw IndexError("correlation: item index " + std::to_string(seq[i]) + " outside [1, " +
                           std::to_string(num_items) + "]");
        }
        counts[seq[i]] += 1.0;
      }
      for (const auto& [a, ca] : counts) {
        norms_sq_[static_cast<std::size_t>(a)] += ca * ca;
        for (const auto& [b, cb] : counts) {
          if (a != b) dots_[static_cast<std::size_t>(a)][b] += ca * cb;
        }
      }
    }
  }
  for (std::size_t a = 1; a <= num_items; ++a) {
    for (const auto& [b, dot] : dots_[a]) {
      scores_[a][b] = dot / std::sqrt(norms_sq_[a] * norms_sq_[static_cast<std::size_t>(b)]);
    }
  }
}

double CoOccurrence::score(std::int64_t a, std::int64_t b) const {
  if (a < 1 || b < 1 || static_cast<std::size_t>(a) > num_items_ || static_cast<std::size_t>(b) > num_items_) {
    throw IndexError("correlation: item index out of range");
  }
  const auto& r = scores_[static_cast<std::size_t>(a)];
  const auto it = r.find(b);
  return it == r.end() ? 0.0 : it->second;
}

const std::unordered_map<std::int64_t, double>& CoOccurrence::row(std::int64_t a) const {
  if (a < 1 || static_cast<std::size_t>(a) > num_items_) throw IndexError("correlation: item index out of range");
  return scores_[static_cast<std::size_t>(a)];
}

std::span<const Correlate> CorrelationTable::correlates(std::int64_t item) const {
  if (item < 0 || static_cast<std::size_t>(item) >= rows_.size()) return {};
  return rows_[static_cast<std::size_t>(item)];
}

std::optional<std::int64_t> CorrelationTable::top(std::int64_t item) const {
  const auto list = correlates(item);
  if (list.empty()) return std::nullopt;
  return list.front().item;
}

void CorrelationTable::set(std::int64_t item, std::vector<Correlate> list) {
  if (item < 1 || static_cast<std::size_t>(item) > num_items()) {
    throw IndexError("correlation table: item " + std::to_string(item) + " out of range");
  }
  for (const auto& c : list) {
    if (c.item == item) throw ContractError("correlation table: an item cannot be its own correlate");
  }
  rows_[static_cast<std::size_t>(item)] = std::move(list);
}

bool operator==(const CorrelationTable& a, const CorrelationTable& b) {
  if (a.rows_.size() != b.rows_.size()) return false;
  for (std::size_t i = 0; i < a.rows_.size(); ++i) {
    if (a.rows_[i].size() != b.rows_[i].size()) return false;
    for (std::size_t j = 0; j < a.rows_[i].size(); ++j) {
      if (a.rows_[i][j].item != b.rows_[i][j].item || a.rows_[i][j].score != b.rows_[i][j].score) return false;
    }
  }
  return true;
}

CorrelationTable build_correlation(std::span<const std::vector<std::int64_t>> sequences, std::size_t num_items,
                                   std::size_t window, std::size_t top_k) {
  const CoOccurrence co(sequences, num_items, window);
  CorrelationTable table(num_items);
  for (std::size_t a = 1; a <= num_items; ++a) {
    const auto item = static_cast<std::int64_t>(a);
    std::vector<Correlate> list;
    for (const auto& [b, s] : co.row(item)) {
      if (s > 0.0) list.push_back({b, s});
    }
    std::sort(list.begin(), list.end(), [](const Correlate& x, const Correlate& y) {
      return x.score != y.score ? x.score > y.score : x.item < y.item;
    });
    if (list.size() > top_k) list.resize(top_k);
    table.set(item, std::move(list));
  }
  return table;
}

void write_correlation_tsv(std::ostream& out, const CorrelationTable& table) {
  out << "item\tcorrelate\tscore\n";
  for (std::size_t a = 1; a <= table.num_items(); ++a) {
    for (const auto& c : table.correlates(static_cast<std::int64_t>(a))) {
      out << a << '\t' << c.item << '\t' << std::setprecision(17) << c.score << '\n';
    }
  }
}

CorrelationTable read_correlation_tsv(std::istream& in, std::size_t num_items) {
  CorrelationTable table(num_items);
  std::map<std::int64_t, std::vector<Correlate>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || (line_no == 1 && line.rfind("item", 0) == 0)) continue;
    std::istringstream fields(line);
    std::int64_t a = 0;
    Correlate c;
    if (!(fields >> a >> c.item >> c.score)) throw ParseError("malformed correlation row", line_no);
    rows[a].push_back(c);
  }
  for (auto& [a, list] : rows) table.set(a, std::move(list));
  return table;
}

}  // namespace lma4rec::augment
