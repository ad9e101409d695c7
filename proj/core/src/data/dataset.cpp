#include "lma4rec/data/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>

#include <nlohmann/json.hpp>

#include "lma4rec/error.hpp"

namespace lma4rec::data {

Catalog Catalog::build(const std::vector<Interaction>& interactions) {
  std::vector<std::string> users;
  std::vector<std::string> items;
  std::unordered_map<std::string, bool> seen_user;
  std::unordered_map<std::string, bool> seen_item;
  for (const auto& r : interactions) {
    if (seen_user.emplace(r.user_key, true).second) users.push_back(r.user_key);
    if (seen_item.emplace(r.item_key, true).second) items.push_back(r.item_key);
  }
  return from_keys(std::move(users), std::move(items));
}

Catalog Catalog::from_keys(std::vector<std::string> user_keys, std::vector<std::string> item_keys) {
  Catalog c;
  c.user_keys_ = std::move(user_keys);
  c.item_keys_ = std::move(item_keys);
  for (std::size_t i = 0; i < c.user_keys_.size(); ++i) {
    if (!c.user_index_.emplace(c.user_keys_[i], static_cast<std::int64_t>(i)).second) {
      throw ContractError("catalog: duplicate user key " + c.user_keys_[i]);
    }
  }
  for (std::size_t i = 0; i < c.item_keys_.size(); ++i) {
    if (!c.item_index_.emplace(c.item_keys_[i], static_cast<std::int64_t>(i + 1)).second) {
      throw ContractError("catalog: duplicate item key " + c.item_keys_[i]);
    }
  }
  return c;
}

std::int64_t Catalog::user_index(const std::string& key) const {
  const auto it = user_index_.find(key);
  if (it == user_index_.end()) throw IndexError("unknown user key " + key);
  return it->second;
}

std::int64_t Catalog::item_index(const std::string& key) const {
  const auto it = item_index_.find(key);
  if (it == item_index_.end()) throw IndexError("unknown item key " + key);
  return it->second;
}

const std::string& Catalog::user_key(std::int64_t index) const {
  if (index < 0 || static_cast<std::size_t>(index) >= user_keys_.size()) {
    throw IndexError("user index " + std::to_string(index) + " out of range");
  }
  return user_keys_[static_cast<std::size_t>(index)];
}

const std::string& Catalog::item_key(std::int64_t index) const {
  if (index < 1 || static_cast<std::size_t>(index) > item_keys_.size()) {
    throw IndexError("item index " + std::to_string(index) + " out of range");
  }
  return item_keys_[static_cast<std::size_t>(index - 1)];
}

namespace {

struct Counts {
  std::unordered_map<std::string, std::size_t> users;
  std::unordered_map<std::string, std::size_t> items;
};

Counts count(const std::vector<Interaction>& interactions) {
  Counts c;
  for (const auto& r : interactions) {
    ++c.users[r.user_key];
    ++c.items[r.item_key];
  }
  return c;
}

}  // namespace

std::vector<Interaction> five_core_filter(const std::vector<Interaction>& interactions, std::size_t k) {
  std::vector<Interaction> current = interactions;
  for (;;) {
    const Counts c = count(current);
    std::vector<Interaction> next;
    next.reserve(current.size());
    for (const auto& r : current) {
      if (c.users.at(r.user_key) >= k && c.items.at(r.item_key) >= k) next.push_back(r);
    }
    if (next.size() == current.size()) break;
    current = std::move(next);
  }
  if (current.empty()) {
    throw Error(std::to_string(k) + "-core filtering removed every interaction; use a smaller k or denser data");
  }
  return current;
}

bool is_k_core(const std::vector<Interaction>& interactions, std::size_t k) {
  const Counts c = count(interactions);
  for (const auto& [key, n] : c.users) {
    if (n < k) return false;
  }
  for (const auto& [key, n] : c.items) {
    if (n < k) return false;
  }
  return true;
}

std::vector<UserSequence> build_sequences(const std::vector<Interaction>& interactions, const Catalog& catalog) {
  std::vector<std::vector<std::pair<std::int64_t, std::int64_t>>> per_user(catalog.num_users());
  for (const auto& r : interactions) {
    per_user[static_cast<std::size_t>(catalog.user_index(r.user_key))].emplace_back(r.timestamp,
                                                                                   catalog.item_index(r.item_key));
  }
  std::vector<UserSequence> out;
  out.reserve(per_user.size());
  for (std::size_t u = 0; u < per_user.size(); ++u) {
    auto& events = per_user[u];
    if (events.empty()) continue;
    std::stable_sort(events.begin(), events.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    UserSequence s;
    s.user = static_cast<std::int64_t>(u);
    s.items.reserve(events.size());
    for (const auto& e : events) s.items.push_back(e.second);
    out.push_back(std::move(s));
  }
  return out;
}

std::vector<std::int64_t> UserSplit::full() const {
  std::vector<std::int64_t> s = train;
  s.push_back(valid);
  s.push_back(test);
  return s;
}

std::vector<std::vector<std::int64_t>> SplitDataset::train_sequences() const {
  std::vector<std::vector<std::int64_t>> out;
  out.reserve(users.size());
  for (const auto& u : users) out.push_back(u.train);
  return out;
}

std::vector<std::int64_t> SplitDataset::history(std::size_t user_pos, Target t) const {
  const auto& u = users.at(user_pos);
  std::vector<std::int64_t> h = u.train;
  if (t == Target::kTest) h.push_back(u.valid);
  return h;
}

std::int64_t SplitDataset::target(std::size_t user_pos, Target t) const {
  const auto& u = users.at(user_pos);
  return t == Target::kTest ? u.test : u.valid;
}

SplitDataset leave_one_out_split(const std::vector<UserSequence>& sequences, std::size_t num_items) {
  SplitDataset split;
  split.num_items = num_items;
  for (const auto& s : sequences) {
    if (s.items.size() < 3) {
      ++split.excluded;
      continue;
    }
    UserSplit u;
    u.user = s.user;
    u.train.assign(s.items.begin(), s.items.end() - 2);
    u.valid = s.items[s.items.size() - 2];
    u.test = s.items.back();
    split.users.push_back(std::move(u));
  }
  return split;
}

void save_processed(const std::filesystem::path& path, const ProcessedData& data) {
  nlohmann::json j;
  j["format"] = "lma4rec-split";
  j["version"] = kSplitCacheVersion;
  j["num_items"] = data.split.num_items;
  j["excluded"] = data.split.excluded;
  j["user_keys"] = data.catalog.user_keys();
  j["item_keys"] = data.catalog.item_keys();
  auto& users = j["users"] = nlohmann::json::array();
  for (const auto& u : data.split.users) {
    users.push_back({{"user", u.user}, {"train", u.train}, {"valid", u.valid}, {"test", u.test}});
  }
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump() << '\n';
}

ProcessedData load_processed(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("no such processed data: " + path.string());
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("processed data " + path.string() + " is not valid JSON");
  }
  if (j.value("format", "") != "lma4rec-split") throw FormatError(path.string() + " is not an lma4rec split cache");
  if (j.value("version", -1) != kSplitCacheVersion) {
    throw FormatError("split cache version " + std::to_string(j.value("version", -1)) + " is not supported (expected " +
                      std::to_string(kSplitCacheVersion) + ")");
  }
  ProcessedData d;
  try {
    d.catalog = Catalog::from_keys(j.at("user_keys").get<std::vector<std::string>>(),
                                   j.at("item_keys").get<std::vector<std::string>>());
    d.split.num_items = j.at("num_items").get<std::size_t>();
    d.split.excluded = j.at("excluded").get<std::size_t>();
    for (const auto& u : j.at("users")) {
      d.split.users.push_back(UserSplit{u.at("user").get<std::int64_t>(), u.at("train").get<std::vector<std::int64_t>>(),
                                        u.at("valid").get<std::int64_t>(), u.at("test").get<std::int64_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("split cache: ") + e.what());
  }
  if (d.split.num_items != d.catalog.num_items()) throw FormatError("split cache: item count disagrees with catalog");
  return d;
}

}  // namespace lma4rec::data
