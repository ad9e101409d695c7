#include "lma4rec/train/trainer.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <ostream>

#include "lma4rec/error.hpp"

namespace lma4rec::train {

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw ContractError("train: learning_rate must be positive");
  if (patience < 1) throw ContractError("train: patience must be at least 1");
  if (batch_size < 1) throw ContractError("train: batch_size must be at least 1");
  if (eval_every < 1) throw ContractError("train: eval_every must be at least 1");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw ContractError("train: adam betas must lie in [0, 1)");
  }
  if (!(adam_eps > 0.0)) throw ContractError("train: adam eps must be positive");
  if (!(phi_lr_scale >= 0.0)) throw ContractError("train: phi_lr_scale must be non-negative");
  weights.validate();
}

namespace {

bool gates_active(const model::SasrecParams& params, const TrainConfig& config) {
  return params.config.use_lbd && !config.no_lma;
}

void check_finite(double value, const char* what) {
  if (!std::isfinite(value)) throw NonFiniteError(std::string("train_step: non-finite ") + what);
}

double sum_squares(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

FrozenStep prepare_step(const data::Batch& batch, const model::SasrecParams& params, const TrainConfig& config,
                        const StepContext& context, Rng& rng) {
  FrozenStep s;
  s.rec_input = batch.encoder_input();
  s.positive = batch.positive;
  s.negative = batch.negative;
  s.targets = batch.valid;
  const bool dropout = params.config.embedding_dropout > 0.0 || params.config.attention_dropout > 0.0;
  // A contrastive term needs at least one in-batch negative.
  if (!config.no_ssl && batch.size >= 2) {
    augment::AugmentConfig aug = context.augment;
    aug.max_len = batch.length;
    std::vector<std::vector<std::int64_t>> va;
    std::vector<std::vector<std::int64_t>> vb;
    va.reserve(batch.size);
    vb.reserve(batch.size);
    for (const auto& seq : batch.sequences) {
      for (int v = 0; v < 2; ++v) {
        augment::AugmentResult r;
        if (config.no_da) {
          r.items = seq;
        } else {
          r = augment::select_augmentation(seq, aug, context.correlations, params.mask_token(), rng);
        }
        (v == 0 ? va : vb).push_back(r.items);
        s.augmentations.push_back(std::move(r));
      }
    }
    s.view_a = model::make_input(va, batch.length);
    s.view_b = model::make_input(vb, batch.length);
  }
  if (dropout) {
    for (std::size_t p = 0; p < s.num_passes(); ++p) s.dropout[p] = model::FixedDropout{rng.engine()()};
  }
  return s;
}

JointLossTerms compute_joint_loss(const model::SasrecParams& params, const FrozenStep& step,
                                  std::span<const lbd::GateScales> scales, const loss::LossWeights& weights) {
  if (scales.size() != step.num_passes()) {
    throw ContractError("compute_joint_loss: " + std::to_string(scales.size()) + " gate sets for " +
                        std::to_string(step.num_passes()) + " passes");
  }
  JointLossTerms out;
  const auto h = model::encode(params, step.rec_input, scales[0], step.dropout[0]);
  out.l_rs = loss::next_item_loss(h, params.item_embedding, step.positive, step.negative, step.targets);
  if (!step.has_views()) {
    out.total = out.l_rs;
    return out;
  }
  const auto ha = model::encode(params, *step.view_a, scales[1], step.dropout[1]);
  const auto hb = model::encode(params, *step.view_b, scales[2], step.dropout[2]);
  out.l_ssl = loss::info_nce({loss::pool_sequence(ha), loss::pool_sequence(hb)}, weights.temperature);
  out.total = loss::joint_loss(out.l_rs, *out.l_ssl, weights.lambda);
  return out;
}

std::vector<ParamBuffer> parameter_buffers(model::SasrecParams& params, std::span<const std::vector<double>> phi_grads,
                                           double phi_lr_scale) {
  std::vector<ParamBuffer> out;
  for (auto& t : params.tensors()) {
    if (!t.has_grad()) throw ContractError("parameter_buffers: a parameter has no gradient");
    out.push_back({t.mutable_data(), t.grad(), 1.0});
  }
  if (phi_grads.size() != params.gates.size()) {
    throw ContractError("parameter_buffers: gradient count does not match the gates");
  }
  for (std::size_t g = 0; g < params.gates.size(); ++g) {
    out.push_back({params.gates[g].logits, phi_grads[g], phi_lr_scale});
  }
  return out;
}

Trainer::Trainer(model::SasrecParams& params, TrainConfig config, StepContext context)
    : params_(params), config_(std::move(config)), context_(std::move(context)) {
  config_.validate();
}

StepStats Trainer::step(const data::Batch& batch, Rng& rng) {
  StepStats stats;
  const FrozenStep frozen = prepare_step(batch, params_, config_, context_, rng);
  const std::size_t passes = frozen.num_passes();
  stats.views_built = frozen.augmentations.size();
  for (const auto& a : frozen.augmentations) ++stats.operator_counts[static_cast<std::size_t>(a.op)];

  params_.zero_grad();
  std::vector<std::vector<double>> phi_grads;
  for (const auto& g : params_.gates) phi_grads.emplace_back(g.width(), 0.0);

  JointLossTerms terms;
  if (gates_active(params_, config_)) {
    bool first = true;
    const lbd::MaskedLoss closure = [&](std::span<const lbd::GateScales> scales) {
      auto t = compute_joint_loss(params_, frozen, scales, config_.weights);
      if (first) {
        terms = t;
        first = false;
      }
      return t.total;
    };
    auto arm = lbd::arm_step(closure, params_.gates, rng, passes);
    stats.l_total_anti = arm.loss_anti;
    stats.antithetic_passes = arm.loss_evaluations - 1;
    phi_grads = std::move(arm.logit_grads);
  } else {
    stats.expected_gates = true;
    const lbd::GateScales fixed = model::eval_scales(params_);
    const std::vector<lbd::GateScales> scales(passes, fixed);
    terms = compute_joint_loss(params_, frozen, scales, config_.weights);
  }
  stats.forward_passes = passes;
  stats.l_rs = terms.l_rs.item();
  stats.l_total = terms.total.item();
  check_finite(stats.l_rs, "L_rs");
  if (terms.l_ssl) {
    stats.l_ssl = terms.l_ssl->item();
    check_finite(*stats.l_ssl, "L_ssl");
  }
  check_finite(stats.l_total, "L_total");
  if (stats.antithetic_passes > 0) check_finite(stats.l_total_anti, "antithetic L_total");

  ad::backward(terms.total);
  stats.backward_passes = 1;

  double sq = 0.0;
  for (const auto& t : params_.tensors()) sq += sum_squares(t.grad());
  stats.grad_norm = std::sqrt(sq);
  check_finite(stats.grad_norm, "gradient");
  if (config_.clip_norm > 0.0 && stats.grad_norm > config_.clip_norm) {
    const double f = config_.clip_norm / stats.grad_norm;
    for (auto t : params_.tensors()) {
      for (double& g : t.mutable_grad()) g *= f;
    }
  }
  double phi_sq = 0.0;
  for (const auto& g : phi_grads) phi_sq += sum_squares(g);
  stats.phi_grad_norm = std::sqrt(phi_sq);

  const auto buffers = parameter_buffers(params_, phi_grads, config_.phi_lr_scale);
  if (!state_ready_) {
    state_ = make_adam_state(buffers);
    state_ready_ = true;
  }
  adam_step(buffers, state_, config_.adam());
  params_.freeze_padding();
  params_.zero_grad();
  return stats;
}

nlohmann::json to_json(const EpochRecord& r, bool include_wall_time) {
  nlohmann::json j;
  j["epoch"] = r.epoch;
  j["steps"] = r.steps;
  j["l_rs"] = r.l_rs;
  j["l_ssl"] = r.l_ssl ? nlohmann::json(*r.l_ssl) : nlohmann::json(nullptr);
  j["l_total"] = r.l_total;
  j["valid"] = r.valid ? eval::to_json(*r.valid)["metrics"] : nlohmann::json(nullptr);
  j["keep_prob"] = r.keep_prob;
  j["passes"] = {{"forward", r.forward_passes}, {"antithetic", r.antithetic_passes}, {"backward", r.backward_passes}};
  nlohmann::json ops = nlohmann::json::object();
  for (std::size_t i = 0; i < r.operator_counts.size(); ++i) {
    ops[std::string(augment::operator_name(static_cast<augment::Operator>(i)))] = r.operator_counts[i];
  }
  j["augment_ops"] = ops;
  if (include_wall_time) j["wall_time"] = r.wall_time;
  return j;
}

void write_jsonl(std::ostream& out, const TrainLog& log, bool include_wall_time) {
  for (const auto& r : log.epochs) out << to_json(r, include_wall_time).dump() << '\n';
}

FitResult fit(const data::SplitDataset& split, const augment::CorrelationTable& correlations,
              const model::ModelConfig& model_config, const augment::AugmentConfig& augment_config,
              const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  augment_config.validate();
  if (split.users.empty()) throw ContractError("fit: split has no users");
  const Rng root(config.seed);
  Rng init_rng = root.derive("init");
  model::SasrecParams params = model::SasrecParams::init(model_config, split.num_items, init_rng);
  Trainer trainer(params, config, StepContext{correlations, augment_config});
  const Rng batch_rng = root.derive("batches");
  eval::EvalOptions eval_options;
  eval_options.mask_history = config.mask_history;

  FitResult result{params.clone(), {}};
  double best = -std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  const auto start = std::chrono::steady_clock::now();
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    Rng step_rng = root.derive("steps", epoch);
    double sum_rs = 0.0;
    double sum_ssl = 0.0;
    double sum_total = 0.0;
    for (const auto& batch : data::make_batches(split, config.batch_size, model_config.max_len, batch_rng, epoch)) {
      const StepStats s = trainer.step(batch, step_rng);
      ++rec.steps;
      sum_rs += s.l_rs;
      sum_total += s.l_total;
      if (s.l_ssl) sum_ssl += *s.l_ssl;
      rec.forward_passes += s.forward_passes;
      rec.antithetic_passes += s.antithetic_passes;
      rec.backward_passes += s.backward_passes;
      for (std::size_t i = 0; i < s.operator_counts.size(); ++i) rec.operator_counts[i] += s.operator_counts[i];
    }
    const double n = static_cast<double>(rec.steps);
    rec.l_rs = sum_rs / n;
    rec.l_total = sum_total / n;
    if (!config.no_ssl) rec.l_ssl = sum_ssl / n;
    for (const auto& g : params.gates) {
      double m = 0.0;
      for (double phi : g.logits) m += lbd::sigmoid(phi);
      rec.keep_prob.push_back(m / static_cast<double>(g.width()));
    }
    bool stop = false;
    if (epoch % config.eval_every == 0 || epoch == config.max_epochs) {
      rec.valid = eval::evaluate(params, split, data::Target::kValid, eval_options);
      const double score = rec.valid->ndcg.at(10);
      if (score > best) {
        best = score;
        since_best = 0;
        result.best = params.clone();
        result.log.best_epoch = epoch;
        result.log.best_valid_ndcg10 = score;
      } else if (++since_best >= config.patience) {
        stop = true;
      }
    }
    rec.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(result.log.epochs.back());
    if (stop) {
      result.log.stopped_early = true;
      break;
    }
  }
  return result;
}

}  // namespace lma4rec::train
