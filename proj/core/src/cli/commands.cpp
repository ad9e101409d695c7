#include "lma4rec/cli/commands.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "lma4rec/augment/correlation.hpp"
#include "lma4rec/error.hpp"
#include "lma4rec/model/checkpoint.hpp"
#include "lma4rec/train/sweep.hpp"

namespace lma4rec::cli {

namespace fs = std::filesystem;

namespace {

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

fs::path prepare_dir(const RunConfig& config) {
  const fs::path dir(config.output_dir);
  fs::create_directories(dir);
  save_run_config(dir / kRunConfigFile, config);
  return dir;
}

data::ProcessedData load_split(const RunConfig& config) {
  if (config.data.split.empty()) throw Error("no split cache configured (set data.split or pass --split)");
  return data::load_processed(config.data.split);
}

augment::CorrelationTable correlations_for(const data::SplitDataset& split, const augment::AugmentConfig& aug) {
  const auto seqs = split.train_sequences();
  return augment::build_correlation(seqs, split.num_items, aug.correlation_window, aug.correlation_top_k);
}

augment::AugmentConfig augment_for(const RunConfig& config) {
  augment::AugmentConfig a = config.augment;
  a.max_len = config.model.max_len;
  return a;
}

void write_metrics(const fs::path& dir, const eval::MetricsReport& report) {
  const std::string stem = "metrics_" + report.split;
  open_output(dir / (stem + ".json")) << eval::to_json(report).dump(2) << '\n';
  open_output(dir / (stem + ".txt")) << eval::to_text(report);
}

}  // namespace

std::vector<std::int64_t> parse_sequence(const std::string& text) {
  std::vector<std::int64_t> out;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    std::size_t used = 0;
    std::int64_t v = 0;
    try {
      v = std::stoll(tok, &used);
    } catch (const std::exception&) {
      throw IndexError("invalid item index '" + tok + "'");
    }
    if (used != tok.size()) throw IndexError("invalid item index '" + tok + "'");
    if (v < 1) throw IndexError("item index " + std::to_string(v) + " must be at least 1");
    out.push_back(v);
  }
  if (out.empty()) throw IndexError("empty sequence");
  return out;
}

data::StatsReport cmd_preprocess(const RunConfig& config, const PreprocessOptions& options, std::ostream& log) {
  config.validate();
  std::vector<data::Interaction> raw;
  if (options.synthetic) {
    raw = data::generate_cyclic(config.synthetic);
  } else {
    if (config.data.input.empty()) throw Error("no input given (set data.input or pass --input)");
    const fs::path input(config.data.input);
    if (!fs::exists(input)) throw Error("no such input: " + input.string());
    std::optional<data::InputFormat> fmt = config.data.format.empty() ? data::format_from_path(input)
                                                                      : data::parse_format(config.data.format);
    if (!fmt) throw Error("cannot determine the input format of " + input.string() + " (use --format)");
    raw = data::ingest(input, *fmt);
  }
  log << fmt::format("read {} interactions\n", raw.size());
  const auto filtered = data::five_core_filter(raw, config.data.core_k);
  log << fmt::format("{}-core filter kept {} interactions\n", config.data.core_k, filtered.size());
  data::ProcessedData processed{data::Catalog::build(filtered), {}};
  const auto sequences = data::build_sequences(filtered, processed.catalog);
  processed.split = data::leave_one_out_split(sequences, processed.catalog.num_items());

  const fs::path dir = prepare_dir(config);
  data::save_processed(dir / kSplitFile, processed);
  const data::StatsReport stats = data::dataset_stats(filtered, config.data.name);
  open_output(dir / kStatsJsonFile) << data::to_json(stats).dump(2) << '\n';
  open_output(dir / kStatsTextFile) << data::to_text({stats});
  log << data::to_text({stats});
  return stats;
}

eval::MetricsReport cmd_train(const RunConfig& config, std::ostream& log) {
  config.validate();
  const data::ProcessedData processed = load_split(config);
  const fs::path dir = prepare_dir(config);
  const augment::AugmentConfig aug = augment_for(config);
  const auto table = correlations_for(processed.split, aug);
  {
    auto out = open_output(dir / kCorrelationFile);
    augment::write_correlation_tsv(out, table);
  }
  const train::TrainConfig tc = config.resolved_train();
  auto log_file = open_output(dir / kTrainLogFile);
  const auto on_epoch = [&](const train::EpochRecord& r) {
    log_file << train::to_json(r).dump() << '\n';
    log_file.flush();
    log << fmt::format("epoch {:>4}  L_total {:.5f}  L_rs {:.5f}", r.epoch, r.l_total, r.l_rs);
    if (r.l_ssl) log << fmt::format("  L_ssl {:.5f}", *r.l_ssl);
    if (r.valid) log << fmt::format("  valid NDCG@10 {:.4f}", r.valid->ndcg.at(10));
    log << '\n';
  };
  train::FitResult result = train::fit(processed.split, table, config.model, aug, tc, on_epoch);
  const nlohmann::json meta = {{"best_epoch", result.log.best_epoch},
                               {"best_valid_ndcg10", result.log.best_valid_ndcg10},
                               {"epochs_run", result.log.epochs.size()},
                               {"seed", config.seed}};
  model::save_checkpoint(dir / kCheckpointFile, result.best, meta);
  eval::EvalOptions eo;
  eo.mask_history = tc.mask_history;
  const auto report = eval::evaluate(result.best, processed.split, data::Target::kTest, eo);
  write_metrics(dir, report);
  log << eval::to_text(report);
  return report;
}

eval::MetricsReport cmd_evaluate(const fs::path& checkpoint, const fs::path& split, data::Target target,
                                 const fs::path& output_dir, bool mask_history, std::ostream& log) {
  if (!fs::exists(checkpoint)) throw Error("no such input: " + checkpoint.string());
  const model::Checkpoint ckpt = model::load_checkpoint(checkpoint);
  const data::ProcessedData processed = data::load_processed(split);
  eval::EvalOptions eo;
  eo.mask_history = mask_history;
  const auto report = eval::evaluate(ckpt.params, processed.split, target, eo);
  fs::create_directories(output_dir);
  write_metrics(output_dir, report);
  log << eval::to_text(report);
  return report;
}

void cmd_augment_demo(const std::string& sequence, const augment::AugmentConfig& config, std::uint64_t seed,
                      const std::optional<fs::path>& split, std::ostream& out) {
  config.validate();
  const auto seq = parse_sequence(sequence);
  std::size_t num_items = 0;
  augment::CorrelationTable table;
  if (split) {
    const auto processed = data::load_processed(*split);
    num_items = processed.split.num_items;
    table = correlations_for(processed.split, config);
  } else {
    for (auto v : seq) num_items = std::max<std::size_t>(num_items, static_cast<std::size_t>(v));
    const std::vector<std::vector<std::int64_t>> one{seq};
    table = augment::build_correlation(one, num_items, config.correlation_window, config.correlation_top_k);
  }
  for (auto v : seq) {
    if (static_cast<std::size_t>(v) > num_items) {
      throw IndexError("item index " + std::to_string(v) + " outside [1, " + std::to_string(num_items) + "]");
    }
  }
  const auto mask_token = static_cast<std::int64_t>(num_items) + 1;
  out << fmt::format("{:<12}{}\n", "input:", fmt::join(seq, ","));
  const Rng root(seed);
  for (augment::Operator op : augment::kAllOperators) {
    Rng rng = root.derive("augment-demo", static_cast<std::uint64_t>(op));
    const auto r = augment::apply_operator(op, seq, config, table, mask_token, rng);
    out << fmt::format("{:<12}{}{}\n", std::string(augment::operator_name(op)) + ":", fmt::join(r.items, ","),
                       r.skipped ? "  (skipped)" : "");
  }
}

void cmd_sweep(const RunConfig& config, std::ostream& log) {
  config.validate();
  const data::ProcessedData processed = load_split(config);
  const fs::path dir = prepare_dir(config);
  const augment::AugmentConfig aug = augment_for(config);
  const auto table = correlations_for(processed.split, aug);
  const auto rows = train::sweep(processed.split, table, config.sweep_lambdas, config.sweep_hidden, config.model, aug,
                                 config.resolved_train());
  fs::create_directories(dir / "sweep_logs");
  for (const auto& r : rows) {
    auto out = open_output(dir / "sweep_logs" / fmt::format("lambda_{}_hidden_{}.jsonl", r.lambda, r.hidden_size));
    train::write_jsonl(out, r.log);
    log << fmt::format("lambda {:<4} hidden {:<4} test NDCG@10 {:.4f}\n", r.lambda, r.hidden_size, r.test.ndcg.at(10));
  }
  auto csv = open_output(dir / kSweepFile);
  train::write_sweep_csv(csv, rows);
}

}  // namespace lma4rec::cli
