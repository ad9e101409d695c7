#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "lma4rec/data/dataset.hpp"
#include "lma4rec/model/encoder.hpp"
#include "lma4rec/random.hpp"

namespace lma4rec::data {

// Training mini-batch: per user, the training prefix shifted by one position
// into (input, next-item positive), left-padded to `length`, with one sampled
// negative per valid position.
struct Batch {
  std::size_t size = 0;
  std::size_t length = 0;
  std::vector<std::int64_t> users;
  std::vector<std::int64_t> input;     // size x length
  std::vector<std::int64_t> positive;  // size x length
  std::vector<std::int64_t> negative;  // size x length
  std::vector<std::uint8_t> valid;     // size x length
  std::vector<std::vector<std::int64_t>> sequences;  // unpadded (truncated) inputs

  model::EncoderInput encoder_input() const;
};

// Uniform item in [1, num_items] other than `exclude`.
std::int64_t sample_negative(std::size_t num_items, std::int64_t exclude, Rng& rng);

// The epoch's whole batch stream. User order is shuffled with a stream derived
// from (rng, epoch), so a given epoch is reproducible on its own.
std::vector<Batch> make_batches(const SplitDataset& split, std::size_t batch_size, std::size_t length,
                                const Rng& rng, std::size_t epoch);

}  // namespace lma4rec::data
