#include "lma4rec/eval/metrics.hpp"

#include <cmath>

#include <fmt/format.h>

#include "lma4rec/autodiff/ops.hpp"
#include "lma4rec/error.hpp"
#include "lma4rec/model/encoder.hpp"

namespace lma4rec::eval {

std::size_t rank_target(std::span<const double> scores, std::int64_t target) {
  if (target < 1 || static_cast<std::size_t>(target) > scores.size()) {
    throw ContractError("rank_target: target " + std::to_string(target) + " outside [1, " +
                        std::to_string(scores.size()) + "]");
  }
  const auto t = static_cast<std::size_t>(target - 1);
  const double s = scores[t];
  std::size_t ahead = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i] > s || (scores[i] == s && i < t)) ++ahead;
  }
  return ahead + 1;
}

double hr_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ContractError("hr_at_k: no ranks");
  std::size_t hits = 0;
  for (std::size_t r : ranks) hits += r <= k ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(ranks.size());
}

double ndcg_at_k(std::span<const std::size_t> ranks, std::size_t k) {
  if (ranks.empty()) throw ContractError("ndcg_at_k: no ranks");
  double total = 0.0;
  for (std::size_t r : ranks) {
    if (r <= k) total += 1.0 / std::log2(static_cast<double>(r) + 1.0);
  }
  return total / static_cast<double>(ranks.size());
}

MetricsReport MetricsReport::from_ranks(std::string split, std::span<const std::size_t> ranks) {
  MetricsReport r;
  r.split = std::move(split);
  r.users = ranks.size();
  for (std::size_t k : kCutoffs) {
    r.hr[k] = hr_at_k(ranks, k);
    r.ndcg[k] = ndcg_at_k(ranks, k);
  }
  return r;
}

std::vector<std::size_t> rank_users(const model::SasrecParams& params, const data::SplitDataset& split,
                                    data::Target target, const EvalOptions& options) {
  const std::size_t length = options.max_len == 0 ? params.config.max_len : options.max_len;
  const std::size_t n_items = params.num_items;
  if (split.num_items != n_items) {
    throw ContractError("evaluate: split has " + std::to_string(split.num_items) + " items, model has " +
                        std::to_string(n_items));
  }
  const std::size_t d = params.config.embed_dim;
  const lbd::GateScales gates = model::eval_scales(params);
  const auto table = params.item_embedding.data();
  std::vector<std::size_t> ranks;
  ranks.reserve(split.users.size());
  ad::NoGradGuard no_grad;
  for (std::size_t start = 0; start < split.users.size(); start += options.batch_size) {
    const std::size_t q = std::min(options.batch_size, split.users.size() - start);
    std::vector<std::vector<std::int64_t>> histories;
    histories.reserve(q);
    for (std::size_t i = 0; i < q; ++i) histories.push_back(split.history(start + i, target));
    const model::EncoderInput input = model::make_input(histories, length);
    const model::SequenceEmbedding h = model::encode(params, input, gates);
    // Last position of each left-padded row, scored against items 1..N.
    std::vector<double> last(q * d);
    const auto hv = h.h.data();
    for (std::size_t i = 0; i < q; ++i) {
      std::copy_n(hv.begin() + static_cast<std::ptrdiff_t>((i * length + length - 1) * d), d,
                  last.begin() + static_cast<std::ptrdiff_t>(i * d));
    }
    std::vector<double> scores(q * n_items);
    ad::kernel::gemm(q, n_items, d, last.data(), false, table.data() + d, true, scores.data(), false);
    for (std::size_t i = 0; i < q; ++i) {
      std::span<double> row(scores.data() + i * n_items, n_items);
      const std::int64_t t = split.target(start + i, target);
      if (options.mask_history) {
        for (std::int64_t item : histories[i]) {
          if (item != t) row[static_cast<std::size_t>(item - 1)] = -std::numeric_limits<double>::infinity();
        }
      }
      ranks.push_back(rank_target(row, t));
    }
  }
  return ranks;
}

MetricsReport evaluate(const model::SasrecParams& params, const data::SplitDataset& split, data::Target target,
                       const EvalOptions& options) {
  const auto ranks = rank_users(params, split, target, options);
  return MetricsReport::from_ranks(target == data::Target::kTest ? "test" : "valid", ranks);
}

std::vector<std::string> metric_names() {
  std::vector<std::string> names;
  for (std::size_t k : kCutoffs) names.push_back("HR@" + std::to_string(k));
  for (std::size_t k : kCutoffs) names.push_back("NDCG@" + std::to_string(k));
  return names;
}

nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json metrics = nlohmann::json::object();
  for (std::size_t k : kCutoffs) {
    metrics["HR@" + std::to_string(k)] = r.hr.at(k);
    metrics["NDCG@" + std::to_string(k)] = r.ndcg.at(k);
  }
  return {{"split", r.split}, {"users", r.users}, {"metrics", metrics}};
}

MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.split = j.at("split").get<std::string>();
  r.users = j.at("users").get<std::size_t>();
  for (std::size_t k : kCutoffs) {
    r.hr[k] = j.at("metrics").at("HR@" + std::to_string(k)).get<double>();
    r.ndcg[k] = j.at("metrics").at("NDCG@" + std::to_string(k)).get<double>();
  }
  return r;
}

std::string to_text(const MetricsReport& r) {
  std::string out = fmt::format("{:<10}{:>10}\n", "Metric", r.split);
  for (std::size_t k : kCutoffs) out += fmt::format("{:<10}{:>10.4f}\n", "HR@" + std::to_string(k), r.hr.at(k));
  for (std::size_t k : kCutoffs) out += fmt::format("{:<10}{:>10.4f}\n", "NDCG@" + std::to_string(k), r.ndcg.at(k));
  out += fmt::format("{:<10}{:>10}\n", "users", r.users);
  return out;
}

}  // namespace lma4rec::eval
