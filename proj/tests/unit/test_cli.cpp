#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "lma4rec/cli/commands.hpp"
#include "lma4rec/cli/run_config.hpp"
#include "lma4rec/error.hpp"

using namespace lma4rec;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures{LMA4REC_FIXTURES};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() /
            ("lma4rec_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    fs::create_directories(root_);
  }
  void TearDown() override { fs::remove_all(root_); }

  cli::RunConfig small_config(const std::string& out) const {
    cli::RunConfig c;
    c.output_dir = (root_ / out).string();
    c.synthetic.users = 30;
    c.synthetic.items = 8;
    c.model.embed_dim = 8;
    c.model.max_len = 8;
    c.train.batch_size = 16;
    c.train.max_epochs = 2;
    return c;
  }

  fs::path preprocess(const std::string& out = "data") {
    auto c = small_config(out);
    std::ostringstream log;
    cli::cmd_preprocess(c, {true}, log);
    return root_ / out / cli::kSplitFile;
  }

  fs::path root_;
};

}  // namespace

TEST(RunConfig, RoundTripsEveryKey) {
  cli::RunConfig c;
  c.seed = 7;
  c.model.embed_dim = 48;
  c.train.weights.lambda = 0.3;
  c.train.no_da = true;
  c.augment.crop_ratio = 0.45;
  c.sweep_hidden = {16, 32};
  std::stringstream ini;
  cli::write_run_config(ini, c);
  const auto back = cli::read_run_config(ini);
  std::stringstream again;
  cli::write_run_config(again, back);
  EXPECT_EQ(ini.str(), again.str());
  EXPECT_EQ(back.model.embed_dim, 48U);
  EXPECT_EQ(back.train.weights.lambda, 0.3);
  EXPECT_EQ(back.sweep_hidden, (std::vector<std::size_t>{16, 32}));
  EXPECT_EQ(back.resolved_train().seed, 7U);
  for (const auto& key : cli::config_keys()) EXPECT_NE(ini.str().find(key.substr(key.find('.') + 1)), std::string::npos) << key;
}

TEST(RunConfig, OverridesAndErrors) {
  cli::RunConfig c;
  cli::apply_override(c, "loss.lambda", "0.25");
  cli::apply_override(c, "train.no_ssl", "true");
  cli::apply_override(c, "sweep.lambdas", "0,0.5");
  EXPECT_EQ(c.train.weights.lambda, 0.25);
  EXPECT_TRUE(c.train.no_ssl);
  EXPECT_EQ(c.sweep_lambdas, (std::vector<double>{0.0, 0.5}));
  EXPECT_THROW(cli::apply_override(c, "train.bogus", "1"), ParseError);
  EXPECT_THROW(cli::apply_override(c, "model.embed_dim", "wide"), ParseError);
  std::istringstream unknown("[model]\ncolour = red\n");
  EXPECT_THROW(cli::read_run_config(unknown), ParseError);
  std::istringstream partial("[model]\nembed_dim = 16\n");
  const auto p = cli::read_run_config(partial);
  EXPECT_EQ(p.model.embed_dim, 16U);
  EXPECT_EQ(p.model.max_len, 50U);
}

TEST(ParseSequence, AcceptsCommaListsOnly) {
  EXPECT_EQ(cli::parse_sequence("1,2,3"), (std::vector<std::int64_t>{1, 2, 3}));
  EXPECT_THROW(cli::parse_sequence("1,x"), IndexError);
  EXPECT_THROW(cli::parse_sequence("0"), IndexError);
  EXPECT_THROW(cli::parse_sequence(""), IndexError);
}

TEST_F(CliTest, PreprocessIsByteStable) {
  const auto a = preprocess("a");
  const auto b = preprocess("b");
  EXPECT_EQ(slurp(a), slurp(b));
  EXPECT_TRUE(fs::exists(root_ / "a" / cli::kStatsJsonFile));
  EXPECT_TRUE(fs::exists(root_ / "a" / cli::kRunConfigFile));
}

TEST_F(CliTest, PreprocessFromFileAndMissingInput) {
  auto c = small_config("file");
  c.data.input = (kFixtures / "core200.tsv").string();
  std::ostringstream log;
  const auto stats = cli::cmd_preprocess(c, {}, log);
  EXPECT_EQ(stats.interactions, 184U);
  EXPECT_EQ(stats.users, 23U);
  c.data.input = (root_ / "nope.tsv").string();
  try {
    cli::cmd_preprocess(c, {}, log);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("no such input"), std::string::npos);
  }
}

TEST_F(CliTest, TrainArchivesConfigAndLosses) {
  const auto split = preprocess();
  auto c = small_config("run");
  c.data.split = split.string();
  c.train.weights.lambda = 0.1;
  std::ostringstream log;
  const auto report = cli::cmd_train(c, log);
  const fs::path dir = root_ / "run";
  EXPECT_EQ(cli::load_run_config(dir / cli::kRunConfigFile).train.weights.lambda, 0.1);
  std::ifstream lines(dir / cli::kTrainLogFile);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_TRUE(j.at("l_ssl").is_number());
    ++n;
  }
  EXPECT_EQ(n, 2U);
  const auto metrics = read_json(dir / "metrics_test.json");
  EXPECT_EQ(metrics.at("metrics").size(), 6U);
  EXPECT_EQ(eval::report_from_json(metrics), report);

  std::ostringstream elog;
  const auto again = cli::cmd_evaluate(dir / cli::kCheckpointFile, split, data::Target::kTest, root_ / "eval", false, elog);
  EXPECT_EQ(again, report);
  EXPECT_EQ(slurp(root_ / "eval" / "metrics_test.json"), slurp(dir / "metrics_test.json"));
}

TEST_F(CliTest, NoSslLogsNullContrastiveTerm) {
  auto c = small_config("nossl");
  c.data.split = preprocess().string();
  c.train.no_ssl = true;
  c.train.max_epochs = 1;
  std::ostringstream log;
  cli::cmd_train(c, log);
  std::ifstream in(root_ / "nossl" / cli::kTrainLogFile);
  std::string line;
  ASSERT_TRUE(std::getline(in, line));
  EXPECT_TRUE(nlohmann::json::parse(line).at("l_ssl").is_null());
}

TEST_F(CliTest, CorruptedCheckpointIsRejected) {
  auto c = small_config("bad");
  const auto split = preprocess();
  c.data.split = split.string();
  c.train.max_epochs = 1;
  std::ostringstream log;
  cli::cmd_train(c, log);
  const fs::path ckpt = root_ / "bad" / cli::kCheckpointFile;
  std::string bytes = slurp(ckpt);
  bytes[bytes.size() / 2] ^= 0x5a;
  std::ofstream(ckpt, std::ios::binary) << bytes;
  EXPECT_THROW(cli::cmd_evaluate(ckpt, split, data::Target::kTest, root_ / "e", false, log), FormatError);
  EXPECT_THROW(cli::cmd_evaluate(root_ / "none.bin", split, data::Target::kTest, root_ / "e", false, log), Error);
}

TEST(AugmentDemo, OneLinePerOperatorAndDeterministic) {
  const augment::AugmentConfig cfg;
  std::ostringstream a, b;
  cli::cmd_augment_demo("1,2,3,4,5,6,7,8", cfg, 3, std::nullopt, a);
  cli::cmd_augment_demo("1,2,3,4,5,6,7,8", cfg, 3, std::nullopt, b);
  EXPECT_EQ(a.str(), b.str());
  std::istringstream lines(a.str());
  std::string line;
  std::vector<std::string> out;
  while (std::getline(lines, line)) out.push_back(line);
  ASSERT_EQ(out.size(), 6U);
  EXPECT_EQ(out[0].rfind("input:", 0), 0U);
  const char* names[] = {"crop:", "mask:", "reorder:", "substitute:", "insert:"};
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(out[i + 1].rfind(names[i], 0), 0U) << out[i + 1];
  const auto crop = cli::parse_sequence(out[1].substr(out[1].find_last_of(' ') + 1));
  const std::vector<std::int64_t> input{1, 2, 3, 4, 5, 6, 7, 8};
  EXPECT_NE(std::search(input.begin(), input.end(), crop.begin(), crop.end()), input.end());
  std::ostringstream c;
  EXPECT_THROW(cli::cmd_augment_demo("1,zero", cfg, 3, std::nullopt, c), IndexError);
}

TEST_F(CliTest, SweepWritesOneRowPerGridPoint) {
  auto c = small_config("sweep");
  c.data.split = preprocess().string();
  c.train.max_epochs = 1;
  c.sweep_lambdas = {0.0, 0.1};
  c.sweep_hidden = {4, 8};
  std::ostringstream log;
  cli::cmd_sweep(c, log);
  std::istringstream csv(slurp(root_ / "sweep" / cli::kSweepFile));
  std::string line;
  std::size_t rows = 0;
  std::getline(csv, line);
  while (std::getline(csv, line)) ++rows;
  EXPECT_EQ(rows, 4U);
  EXPECT_TRUE(fs::exists(root_ / "sweep" / "sweep_logs" / "lambda_0.1_hidden_8.jsonl"));
}
