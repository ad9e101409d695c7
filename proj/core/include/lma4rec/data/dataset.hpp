#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "lma4rec/data/ingest.hpp"

namespace lma4rec::data {

// Dense indices for users (0..M-1) and items (1..N). Item index 0 is padding,
// N + 1 the mask token; both are reserved and never mapped to a key.
class Catalog {
 public:
  // Indices are assigned in order of first appearance.
  static Catalog build(const std::vector<Interaction>& interactions);
  static Catalog from_keys(std::vector<std::string> user_keys, std::vector<std::string> item_keys);

  std::size_t num_users() const noexcept { return user_keys_.size(); }
  std::size_t num_items() const noexcept { return item_keys_.size(); }
  std::int64_t padding_index() const noexcept { return 0; }
  std::int64_t mask_index() const noexcept { return static_cast<std::int64_t>(num_items()) + 1; }

  std::int64_t user_index(const std::string& key) const;
  std::int64_t item_index(const std::string& key) const;
  const std::string& user_key(std::int64_t index) const;
  const std::string& item_key(std::int64_t index) const;

  const std::vector<std::string>& user_keys() const noexcept { return user_keys_; }
  const std::vector<std::string>& item_keys() const noexcept { return item_keys_; }

 private:
  std::vector<std::string> user_keys_;
  std::vector<std::string> item_keys_;  // item i has key item_keys_[i - 1]
  std::unordered_map<std::string, std::int64_t> user_index_;
  std::unordered_map<std::string, std::int64_t> item_index_;
};

// Iteratively drops users and items with fewer than `k` interactions until
// every remaining user and item has at least `k`. Order is preserved.
std::vector<Interaction> five_core_filter(const std::vector<Interaction>& interactions, std::size_t k = 5);

// True when every user and every item has at least k interactions.
bool is_k_core(const std::vector<Interaction>& interactions, std::size_t k = 5);

struct UserSequence {
  std::int64_t user = 0;
  std::vector<std::int64_t> items;
};

// Per-user item lists ordered by timestamp; ties keep file order. Users are in index order.
std::vector<UserSequence> build_sequences(const std::vector<Interaction>& interactions, const Catalog& catalog);

struct UserSplit {
  std::int64_t user = 0;
  std::vector<std::int64_t> train;  // s_1 .. s_{|S|-2}
  std::int64_t valid = 0;           // s_{|S|-1}
  std::int64_t test = 0;            // s_{|S|}

  std::vector<std::int64_t> full() const;
};

enum class Target { kValid, kTest };

struct SplitDataset {
  std::size_t num_items = 0;
  std::vector<UserSplit> users;
  std::size_t excluded = 0;  // sequences shorter than 3 dropped by the split

  // Training prefix sequences (used for correlation statistics).
  std::vector<std::vector<std::int64_t>> train_sequences() const;
  // The history encoded to predict `target`: train prefix, plus the validation item for test.
  std::vector<std::int64_t> history(std::size_t user_pos, Target target) const;
  std::int64_t target(std::size_t user_pos, Target target) const;
};

// Leave-one-out: last item is the test target, second-to-last the validation target.
SplitDataset leave_one_out_split(const std::vector<UserSequence>& sequences, std::size_t num_items);

// Versioned JSON cache of a processed split plus its catalog.
inline constexpr int kSplitCacheVersion = 1;

struct ProcessedData {
  Catalog catalog;
  SplitDataset split;
};

void save_processed(const std::filesystem::path& path, const ProcessedData& data);
// Throws FormatError on a wrong tag/version, Error when the file is missing.
ProcessedData load_processed(const std::filesystem::path& path);

}  // namespace lma4rec::data
