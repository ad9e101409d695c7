#include "lma4rec/data/batch.hpp"

#include <numeric>

#include "lma4rec/error.hpp"

namespace lma4rec::data {

model::EncoderInput Batch::encoder_input() const {
  return model::EncoderInput{size, length, input, valid};
}

std::int64_t sample_negative(std::size_t num_items, std::int64_t exclude, Rng& rng) {
  if (num_items < 2) throw ContractError("sample_negative: need at least 2 items");
  const std::int64_t n = static_cast<std::int64_t>(num_items);
  std::int64_t v = rng.uniform_int(1, n - 1);
  if (exclude >= 1 && exclude <= n && v >= exclude) ++v;
  return v;
}

std::vector<Batch> make_batches(const SplitDataset& split, std::size_t batch_size, std::size_t length,
                                const Rng& rng, std::size_t epoch) {
  if (batch_size == 0 || length == 0) throw ContractError("make_batches: batch size and length must be positive");
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < split.users.size(); ++i) {
    if (split.users[i].train.size() >= 2) order.push_back(i);
  }
  if (order.empty()) throw ContractError("make_batches: no user has a training prefix of length >= 2");
  Rng shuffle_rng = rng.derive("batch-order", epoch);
  shuffle_rng.shuffle(std::span<std::size_t>(order));
  Rng neg_rng = rng.derive("negatives", epoch);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t q = std::min(batch_size, order.size() - start);
    Batch b;
    b.size = q;
    b.length = length;
    b.input.assign(q * length, 0);
    b.positive.assign(q * length, 0);
    b.negative.assign(q * length, 0);
    b.valid.assign(q * length, 0);
    for (std::size_t r = 0; r < q; ++r) {
      const auto& u = split.users[order[start + r]];
      b.users.push_back(u.user);
      const auto& s = u.train;
      const std::size_t n = s.size() - 1;  // number of (input, target) pairs
      const std::size_t keep = std::min(n, length);
      const std::size_t pad = length - keep;
      std::vector<std::int64_t> seq;
      seq.reserve(keep);
      for (std::size_t i = 0; i < keep; ++i) {
        const std::size_t src = n - keep + i;
        const std::size_t cell = r * length + pad + i;
        b.input[cell] = s[src];
        b.positive[cell] = s[src + 1];
        b.negative[cell] = sample_negative(split.num_items, s[src + 1], neg_rng);
        b.valid[cell] = 1;
        seq.push_back(s[src]);
      }
      b.sequences.push_back(std::move(seq));
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

}  // namespace lma4rec::data
