#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "lma4rec/cli/commands.hpp"
#include "lma4rec/error.hpp"

namespace {

using lma4rec::cli::RunConfig;

// Flags shared by train and sweep, applied on top of the config file.
struct Overrides {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::string> split;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<double> lambda;
  std::optional<std::size_t> epochs;
  std::optional<std::size_t> dim;
  bool no_ssl = false;
  bool no_lma = false;
  bool no_da = false;

  void attach(CLI::App& cmd) {
    cmd.add_option("-c,--config", config_path, "INI run configuration");
    cmd.add_option("--set", sets, "Override a key, e.g. --set train.batch_size=64");
    cmd.add_option("--split", split, "Processed split cache");
    cmd.add_option("-o,--out", out, "Output directory");
    cmd.add_option("--seed", seed, "Run seed");
    cmd.add_option("--lambda", lambda, "Contrastive loss weight");
    cmd.add_option("--epochs", epochs, "Maximum epochs");
    cmd.add_option("--dim", dim, "Embedding size");
    cmd.add_flag("--no-ssl", no_ssl, "Drop the contrastive objective");
    cmd.add_flag("--no-lma", no_lma, "Use expected dropout gates and skip the gate update");
    cmd.add_flag("--no-da", no_da, "Use identity data augmentation");
  }

  RunConfig resolve() const {
    RunConfig c = config_path.empty() ? RunConfig{} : lma4rec::cli::load_run_config(config_path);
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw lma4rec::ParseError("--set expects key=value, got '" + s + "'", 0);
      lma4rec::cli::apply_override(c, s.substr(0, eq), s.substr(eq + 1));
    }
    if (split) c.data.split = *split;
    if (out) c.output_dir = *out;
    if (seed) c.seed = *seed;
    if (lambda) c.train.weights.lambda = *lambda;
    if (epochs) c.train.max_epochs = *epochs;
    if (dim) c.model.embed_dim = *dim;
    c.train.no_ssl = c.train.no_ssl || no_ssl;
    c.train.no_lma = c.train.no_lma || no_lma;
    c.train.no_da = c.train.no_da || no_da;
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sequential recommendation with learnable model augmentation"};
  app.require_subcommand(1);

  auto* pre = app.add_subcommand("preprocess", "Filter, split and summarise an interaction log");
  Overrides pre_ov;
  std::string input, format;
  bool synthetic = false;
  pre->add_option("-i,--input", input, "Interaction file (csv, tsv or jsonl)");
  pre->add_option("-f,--format", format, "Input format")->check(CLI::IsMember({"csv", "tsv", "jsonl"}));
  pre->add_flag("--synthetic", synthetic, "Generate the cyclic synthetic dataset instead of reading a file");
  pre->add_option("-c,--config", pre_ov.config_path, "INI run configuration");
  pre->add_option("--set", pre_ov.sets, "Override a key");
  pre->add_option("-o,--out", pre_ov.out, "Output directory");

  auto* trn = app.add_subcommand("train", "Train and report test metrics");
  Overrides train_ov;
  train_ov.attach(*trn);

  auto* evl = app.add_subcommand("evaluate", "Evaluate a checkpoint");
  std::string ckpt, split_path, target = "test", eval_out = ".";
  bool mask_history = false;
  evl->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
  evl->add_option("--split", split_path, "Processed split cache")->required();
  evl->add_option("--target", target, "valid or test")->check(CLI::IsMember({"valid", "test"}));
  evl->add_option("-o,--out", eval_out, "Output directory");
  evl->add_flag("--mask-history", mask_history, "Exclude history items from the candidates");

  auto* demo = app.add_subcommand("augment-demo", "Show each augmentation operator on one sequence");
  std::string sequence, demo_config, demo_split;
  std::uint64_t demo_seed = 0;
  demo->add_option("sequence", sequence, "Comma-separated item indices")->required();
  demo->add_option("--seed", demo_seed, "Seed");
  demo->add_option("-c,--config", demo_config, "INI run configuration");
  demo->add_option("--split", demo_split, "Processed split cache for the vocabulary and correlations");

  auto* swp = app.add_subcommand("sweep", "Grid over lambda and hidden size");
  Overrides sweep_ov;
  sweep_ov.attach(*swp);
  std::string lambdas, hidden;
  swp->add_option("--lambdas", lambdas, "Comma-separated lambda grid");
  swp->add_option("--hidden", hidden, "Comma-separated hidden-size grid");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pre->parsed()) {
      RunConfig c = pre_ov.resolve();
      if (!input.empty()) c.data.input = input;
      if (!format.empty()) c.data.format = format;
      if (pre_ov.out) c.output_dir = *pre_ov.out;
      lma4rec::cli::cmd_preprocess(c, {synthetic}, std::cout);
    } else if (trn->parsed()) {
      lma4rec::cli::cmd_train(train_ov.resolve(), std::cout);
    } else if (evl->parsed()) {
      lma4rec::cli::cmd_evaluate(ckpt, split_path,
                                 target == "valid" ? lma4rec::data::Target::kValid : lma4rec::data::Target::kTest,
                                 eval_out, mask_history, std::cout);
    } else if (demo->parsed()) {
      const RunConfig c = demo_config.empty() ? RunConfig{} : lma4rec::cli::load_run_config(demo_config);
      std::optional<std::filesystem::path> sp;
      if (!demo_split.empty()) sp = demo_split;
      lma4rec::cli::cmd_augment_demo(sequence, c.augment, demo_seed, sp, std::cout);
    } else if (swp->parsed()) {
      RunConfig c = sweep_ov.resolve();
      if (!lambdas.empty()) lma4rec::cli::apply_override(c, "sweep.lambdas", lambdas);
      if (!hidden.empty()) lma4rec::cli::apply_override(c, "sweep.hidden_sizes", hidden);
      lma4rec::cli::cmd_sweep(c, std::cout);
    }
  } catch (const std::exception& e) {
    std::cerr << "lma4rec: error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
