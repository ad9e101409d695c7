#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "lma4rec/cli/run_config.hpp"
#include "lma4rec/data/stats.hpp"
#include "lma4rec/eval/metrics.hpp"

// The pipeline commands as library calls. Each writes its primary outputs to
// files under the output directory, archives the run configuration there,
// and reports progress on `log`.
namespace lma4rec::cli {

inline constexpr char kSplitFile[] = "split.json";
inline constexpr char kStatsJsonFile[] = "stats.json";
inline constexpr char kStatsTextFile[] = "stats.txt";
inline constexpr char kRunConfigFile[] = "run_config.ini";
inline constexpr char kCheckpointFile[] = "checkpoint.bin";
inline constexpr char kTrainLogFile[] = "train_log.jsonl";
inline constexpr char kCorrelationFile[] = "correlations.tsv";
inline constexpr char kSweepFile[] = "sweep.csv";

struct PreprocessOptions {
  bool synthetic = false;  // generate from config.synthetic instead of reading config.data.input
};

// ingest -> k-core filter -> sequences -> leave-one-out split -> stats.
data::StatsReport cmd_preprocess(const RunConfig& config, const PreprocessOptions& options, std::ostream& log);

// Fits on the cached split; writes the best checkpoint, the training log and
// the test metrics (metrics_test.json / metrics_test.txt).
eval::MetricsReport cmd_train(const RunConfig& config, std::ostream& log);

// Writes metrics_<split>.json and metrics_<split>.txt to `output_dir`.
eval::MetricsReport cmd_evaluate(const std::filesystem::path& checkpoint, const std::filesystem::path& split,
                                 data::Target target, const std::filesystem::path& output_dir, bool mask_history,
                                 std::ostream& log);

// Prints the input and one line "<operator>: <items>" per operator. Item
// indices must lie in [1, num_items]; when no split is given the vocabulary
// and correlations come from the sequence itself.
void cmd_augment_demo(const std::string& sequence, const augment::AugmentConfig& config, std::uint64_t seed,
                      const std::optional<std::filesystem::path>& split, std::ostream& out);

// Grid over config.sweep_lambdas x config.sweep_hidden; writes sweep.csv and
// one training log per grid point under sweep_logs/.
void cmd_sweep(const RunConfig& config, std::ostream& log);

std::vector<std::int64_t> parse_sequence(const std::string& text);

}  // namespace lma4rec::cli
