#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "lma4rec/augment/operators.hpp"
#include "lma4rec/data/ingest.hpp"
#include "lma4rec/data/synthetic.hpp"
#include "lma4rec/model/config.hpp"
#include "lma4rec/train/trainer.hpp"

namespace lma4rec::cli {

struct DataPaths {
  std::string input;   // raw interactions
  std::string format;  // csv, tsv, jsonl; empty: from the extension
  std::string split;   // processed cache
  std::string name = "dataset";
  std::size_t core_k = 5;
};

// Everything a run needs; written next to its outputs as run_config.ini.
struct RunConfig {
  DataPaths data;
  std::string output_dir = "runs/default";
  std::uint64_t seed = 42;
  model::ModelConfig model;
  augment::AugmentConfig augment;
  train::TrainConfig train;  // train.seed and train.weights are taken from `seed` and the loss section
  data::SyntheticConfig synthetic;
  std::vector<double> sweep_lambdas{0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
  std::vector<std::size_t> sweep_hidden{64, 128, 192, 256, 320};

  // Train config with the run seed applied.
  train::TrainConfig resolved_train() const;
  void validate() const;
};

// Flat "section.key" names, e.g. "train.lambda", "model.embed_dim".
std::vector<std::string> config_keys();

// INI text; missing keys keep their defaults, unknown keys raise ParseError.
RunConfig read_run_config(std::istream& in);
RunConfig load_run_config(const std::filesystem::path& path);
void write_run_config(std::ostream& out, const RunConfig& config);
void save_run_config(const std::filesystem::path& path, const RunConfig& config);

// Sets one "section.key" from its text form. Throws ParseError on an unknown
// key or an unparsable value.
void apply_override(RunConfig& config, const std::string& key, const std::string& value);

}  // namespace lma4rec::cli
