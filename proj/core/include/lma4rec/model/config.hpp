#pragma once

#include <cstddef>

namespace lma4rec::model {

struct ModelConfig {
  std::size_t embed_dim = 64;
  std::size_t num_heads = 2;
  std::size_t num_blocks = 2;
  std::size_t max_len = 50;
  double attention_dropout = 0.0;
  double embedding_dropout = 0.0;
  double lbd_init_keep = 0.9;
  // When false the FFN gates are fixed at 1 and never sampled.
  bool use_lbd = true;
  double layer_norm_eps = 1e-8;

  // Throws ContractError when the fields are inconsistent.
  void validate() const;
};

}  // namespace lma4rec::model
