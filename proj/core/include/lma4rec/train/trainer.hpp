#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <nlohmann/json.hpp>

#include "lma4rec/augment/operators.hpp"
#include "lma4rec/data/batch.hpp"
#include "lma4rec/eval/metrics.hpp"
#include "lma4rec/loss/losses.hpp"
#include "lma4rec/model/encoder.hpp"
#include "lma4rec/train/adam.hpp"

namespace lma4rec::train {

struct TrainConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 40;  // evaluations without a new best validation NDCG@10
  std::size_t eval_every = 1;
  loss::LossWeights weights;
  bool no_ssl = false;  // drop the contrastive term and its views
  bool no_lma = false;  // expected gates everywhere, no ARM update
  bool no_da = false;   // identity data augmentation
  double phi_lr_scale = 1.0;
  double clip_norm = 5.0;  // global gradient norm cap; <= 0 disables
  bool mask_history = false;
  std::uint64_t seed = 42;

  void validate() const;
  AdamConfig adam() const { return {learning_rate, beta1, beta2, adam_eps}; }
};

// Everything random about one step, drawn up front so the loss can be
// re-evaluated under other gate factors with nothing else changing.
struct FrozenStep {
  model::EncoderInput rec_input;
  std::vector<std::int64_t> positive;
  std::vector<std::int64_t> negative;
  std::vector<std::uint8_t> targets;
  std::optional<model::EncoderInput> view_a;
  std::optional<model::EncoderInput> view_b;
  std::array<augment::Operator, 2> view_ops{augment::Operator::kIdentity, augment::Operator::kIdentity};
  std::vector<augment::AugmentResult> augmentations;  // 2 per sequence when views exist
  std::array<std::optional<model::FixedDropout>, 3> dropout{};

  bool has_views() const noexcept { return view_a.has_value(); }
  // 1 for the recommendation pass, plus 2 when views exist.
  std::size_t num_passes() const noexcept { return has_views() ? 3 : 1; }
};

struct StepContext {
  const augment::CorrelationTable& correlations;
  augment::AugmentConfig augment;
};

FrozenStep prepare_step(const data::Batch& batch, const model::SasrecParams& params, const TrainConfig& config,
                        const StepContext& context, Rng& rng);

struct JointLossTerms {
  ad::Tensor l_rs;
  std::optional<ad::Tensor> l_ssl;
  ad::Tensor total;
};

// Rec loss on pass 0 and, with views, contrastive loss between passes 1 and 2.
// `scales` holds one gate vector set per pass.
JointLossTerms compute_joint_loss(const model::SasrecParams& params, const FrozenStep& step,
                                  std::span<const lbd::GateScales> scales, const loss::LossWeights& weights);

struct StepStats {
  double l_rs = 0.0;
  std::optional<double> l_ssl;
  double l_total = 0.0;
  double l_total_anti = 0.0;
  std::size_t forward_passes = 0;    // recorded encoder passes
  std::size_t antithetic_passes = 0;  // joint-loss evaluations under antithetic masks
  std::size_t backward_passes = 0;
  std::size_t views_built = 0;
  std::array<std::size_t, 6> operator_counts{};  // indexed by augment::Operator
  double grad_norm = 0.0;      // continuous parameters, before clipping
  double phi_grad_norm = 0.0;  // gate logits
  bool expected_gates = false;
};

// Parameters and logits as Adam buffers in a fixed order.
std::vector<ParamBuffer> parameter_buffers(model::SasrecParams& params, std::span<const std::vector<double>> phi_grads,
                                           double phi_lr_scale);

class Trainer {
 public:
  Trainer(model::SasrecParams& params, TrainConfig config, StepContext context);

  StepStats step(const data::Batch& batch, Rng& rng);

  const AdamState& optimizer_state() const noexcept { return state_; }
  const TrainConfig& config() const noexcept { return config_; }

 private:
  model::SasrecParams& params_;
  TrainConfig config_;
  StepContext context_;
  AdamState state_;
  bool state_ready_ = false;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  std::size_t steps = 0;
  double l_rs = 0.0;
  std::optional<double> l_ssl;
  double l_total = 0.0;
  std::optional<eval::MetricsReport> valid;
  std::vector<double> keep_prob;  // mean sigmoid(phi) per gated layer
  std::size_t forward_passes = 0;
  std::size_t antithetic_passes = 0;
  std::size_t backward_passes = 0;
  std::array<std::size_t, 6> operator_counts{};
  double wall_time = 0.0;  // seconds since fit started
};

struct TrainLog {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_valid_ndcg10 = 0.0;
  bool stopped_early = false;
};

nlohmann::json to_json(const EpochRecord& record, bool include_wall_time = true);
// One JSON object per line.
void write_jsonl(std::ostream& out, const TrainLog& log, bool include_wall_time = true);

struct FitResult {
  model::SasrecParams best;
  TrainLog log;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Trains from a fresh initialisation seeded by config.seed and keeps the
// parameters with the best validation NDCG@10.
FitResult fit(const data::SplitDataset& split, const augment::CorrelationTable& correlations,
              const model::ModelConfig& model_config, const augment::AugmentConfig& augment_config,
              const TrainConfig& config, const EpochCallback& on_epoch = {});

}  // namespace lma4rec::train
