// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/meta_learners.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fpacoh/adamw.hpp"
#include "fpacoh/rng.hpp"

namespace fpacoh {
namespace {

constexpr int kMaxNonFiniteSteps = 10;

enum Stream : std::uint64_t { kInit = 1, kBatch = 2, kMeasurement = 3 };

std::vector<std::size_t> sample_batch(std::size_t n, std::size_t h, std::mt19937_64& rng) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  if (h >= n) return idx;
  for (std::size_t i = 0; i < h; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(h);
  return idx;
}

void validate_tasks(std::span<const TaskDataset> tasks) {
  if (tasks.empty()) throw EmptyData("meta-training requires at least one task");
  for (const auto& t : tasks) {
    if (t.empty()) throw EmptyData("meta-training task without observations");
    if (t.dim() != tasks.front().dim()) throw DimensionMismatch("meta-training tasks differ in input width");
  }
}

// Shared loop; `step_objective` evaluates the batch objective at the given params.
template <typename Objective>
std::vector<double> run_loop(const MetaTrainConfig& cfg, std::size_t n_tasks, Vector& params,
                             Objective&& step_objective) {
  AdamW opt({.lr = cfg.lr, .weight_decay = cfg.weight_decay, .lr_decay = cfg.lr_decay, .decay_every = 1000},
            params.size());
  auto batch_rng = make_rng(cfg.seed, {kBatch});
  std::vector<double> trace;
  trace.reserve(static_cast<std::size_t>(cfg.iterations));
  int non_finite = 0;
  for (int it = 0; it < cfg.iterations; ++it) {
    const auto batch = sample_batch(n_tasks, static_cast<std::size_t>(cfg.task_batch), batch_rng);
    ObjectiveValue obj;
    bool ok = true;
    try {
      obj = step_objective(batch);
      ok = std::isfinite(obj.value) && obj.grad.allFinite();
    } catch (const NotPositiveDefinite&) {
      ok = false;
    }
    if (!ok) {
      trace.push_back(std::numeric_limits<double>::quiet_NaN());
      if (++non_finite >= kMaxNonFiniteSteps) {
        throw TrainingDiverged("meta-training: non-finite objective for " + std::to_string(kMaxNonFiniteSteps) +
                               " consecutive steps at iteration " + std::to_string(it));
      }
      continue;
    }
    non_finite = 0;
    trace.push_back(obj.value);
    opt.step(params, obj.grad);
  }
  return trace;
}

}  // namespace

int MetaTrainConfig::resolved_feature_dim(Eigen::Index input_dim) const {
  if (feature_dim > 0) return feature_dim;
  return input_dim <= 2 ? 2 : 6;
}

void MetaTrainConfig::validate() const {
  if (!(lr > 0.0)) throw ConfigError("lr", "must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay", "must lie in (0, 1]");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay", "must be non-negative");
  if (task_batch < 1) throw ConfigError("task_batch", "must be >= 1");
  if (iterations < 0) throw ConfigError("iterations", "must be >= 0");
  if (!(hyperprior_lengthscale > 0.0)) throw ConfigError("hyperprior_lengthscale", "must be positive");
  if (!(hyperprior_outputscale > 0.0)) throw ConfigError("hyperprior_outputscale", "must be positive");
  if (!(kl_weight > 0.0)) throw ConfigError("kl_weight", "must be positive");
  if (feature_dim < 0) throw ConfigError("feature_dim", "must be >= 0");
  if (hidden_layers < 0 || hidden_width < 1) throw ConfigError("hidden_layers", "invalid network shape");
  if (measurement_task_points < 0 || measurement_uniform_points < 0 ||
      measurement_task_points + measurement_uniform_points == 0) {
    throw ConfigError("measurement_task_points", "measurement set would be empty");
  }
}

MeasurementSet sample_measurement_set(const TaskDataset& task, const Box& domain, std::mt19937_64& rng,
                                      int task_points, int uniform_points) {
  if (task.dim() != domain.dim()) throw DimensionMismatch("sample_measurement_set: task and domain widths differ");
  const auto take = std::min<std::size_t>(static_cast<std::size_t>(task_points), static_cast<std::size_t>(task.size()));
  const auto rows = sample_batch(static_cast<std::size_t>(task.size()), take, rng);
  MeasurementSet out;
  out.task_rows = static_cast<Eigen::Index>(rows.size());
  out.x.resize(out.task_rows + uniform_points, task.dim());
  for (std::size_t i = 0; i < rows.size(); ++i) out.x.row(static_cast<Eigen::Index>(i)) = task.x.row(static_cast<Eigen::Index>(rows[i]));
  if (uniform_points > 0) out.x.bottomRows(uniform_points) = domain.sample(rng, uniform_points);
  return out;
}

double kl_coefficient(double kappa, int n_tasks, Eigen::Index task_size) {
  const double n = n_tasks;
  return kappa / std::sqrt(n) + kappa / (n * static_cast<double>(task_size));
}

ObjectiveValue fpacoh_objective(const PriorLayout& layout, const Vector& params, std::span<const TaskDataset> batch,
                                std::span<const MeasurementSet> msets, const HyperPriorGp& hyperprior, int n_tasks,
                                double kappa) {
  if (batch.empty() || batch.size() != msets.size()) {
    throw DimensionMismatch("fpacoh_objective: batch and measurement sets must be non-empty and of equal size");
  }
  ad::Tape tape(params);
  ad::Var total;
  double mll_sum = 0.0;
  double kl_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      const TaskDataset& d = batch[i];
      const double inv_t = 1.0 / static_cast<double>(d.size());
      const double coef = kl_coefficient(kappa, n_tasks, d.size());
      ad::Var mll = gp_mll(layout, tape, d);
      TapeMarginal marg = prior_marginal(layout, tape, msets[i].x);
      ad::Var kl = ad::kl_to_fixed(marg.mean, marg.cov, hyperprior.marginal(msets[i].x), kJitterStart);
      mll_sum += -inv_t * mll.scalar();
      kl_sum += coef * kl.scalar();
      ad::Var term = ad::add(ad::scale(mll, -inv_t), ad::scale(kl, coef));
      total = total.tape() == nullptr ? term : ad::add(total, term);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("task " + std::to_string(i) + ": " + e.what());
    }
  }
  const double h = static_cast<double>(batch.size());
  ad::Var loss = ad::scale(total, 1.0 / h);
  return {loss.scalar(), tape.gradient(loss), mll_sum / h, kl_sum / h};
}

ObjectiveValue pacoh_map_objective(const PriorLayout& layout, const Vector& params,
                                   std::span<const TaskDataset> batch, int n_tasks, double kappa,
                                   double hyperprior_variance) {
  if (batch.empty()) throw DimensionMismatch("pacoh_map_objective: empty batch");
  ad::Tape tape(params);
  ad::Var phi = tape.param(0, params.size(), 1);
  ad::Var neg_log_prior = ad::scale(ad::squared_norm(phi), 0.5 / hyperprior_variance);
  ad::Var total;
  double mll_sum = 0.0;
  double reg_sum = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    try {
      const TaskDataset& d = batch[i];
      const double inv_t = 1.0 / static_cast<double>(d.size());
      const double coef = kl_coefficient(kappa, n_tasks, d.size());
      ad::Var mll = gp_mll(layout, tape, d);
      mll_sum += -inv_t * mll.scalar();
      reg_sum += coef * neg_log_prior.scalar();
      ad::Var term = ad::add(ad::scale(mll, -inv_t), ad::scale(neg_log_prior, coef));
      total = total.tape() == nullptr ? term : ad::add(total, term);
    } catch (const NotPositiveDefinite& e) {
      throw NotPositiveDefinite("task " + std::to_string(i) + ": " + e.what());
    }
  }
  const double h = static_cast<double>(batch.size());
  ad::Var loss = ad::scale(total, 1.0 / h);
  return {loss.scalar(), tape.gradient(loss), mll_sum / h, reg_sum / h};
}

double functional_kl(const GpPrior& prior, const Matrix& x_standardized, const HyperPriorGp& hyperprior) {
  Mvn p(prior.mean(x_standardized), prior.kernel(x_standardized, x_standardized), kJitterStart);
  return kl_mvn(p, hyperprior.marginal(x_standardized));
}

MetaTrainResult meta_train_fpacoh(std::span<const TaskDataset> tasks, const Box& domain,
                                  const MetaTrainConfig& config) {
  config.validate();
  validate_tasks(tasks);
  if (domain.dim() != tasks.front().dim()) throw DimensionMismatch("meta_train_fpacoh: domain width differs");
  const Standardizer standardizer = fit_standardizer(tasks);
  std::vector<TaskDataset> standardized;
  standardized.reserve(tasks.size());
  for (const auto& t : tasks) standardized.push_back(standardizer.transform(t));

  const auto layout = PriorLayout::make(static_cast<int>(domain.dim()), config.resolved_feature_dim(domain.dim()),
                                        config.hidden_layers, config.hidden_width);
  auto init_rng = make_rng(config.seed, {kInit});
  Vector params = layout.initial_params(init_rng);
  const HyperPriorGp hyperprior{config.hyperprior_lengthscale, config.hyperprior_outputscale};
  const int n = static_cast<int>(tasks.size());
  auto mset_rng = make_rng(config.seed, {kMeasurement});

  auto trace = run_loop(config, tasks.size(), params, [&](const std::vector<std::size_t>& batch) {
    std::vector<TaskDataset> data;
    std::vector<MeasurementSet> msets;
    for (std::size_t i : batch) {
      MeasurementSet m = sample_measurement_set(tasks[i], domain, mset_rng, config.measurement_task_points,
                                                config.measurement_uniform_points);
      m.x = standardizer.transform_x(m.x);
      msets.push_back(std::move(m));
      data.push_back(standardized[i]);
    }
    return fpacoh_objective(layout, params, data, msets, hyperprior, n, config.kl_weight);
  });
  return {GpPrior(layout, std::move(params), standardizer), std::move(trace)};
}

MetaTrainResult meta_train_pacoh_map(std::span<const TaskDataset> tasks, const PacohMapConfig& config) {
  config.base.validate();
  if (!(config.hyperprior_variance > 0.0)) throw ConfigError("hyperprior_variance", "must be positive");
  validate_tasks(tasks);
  const Standardizer standardizer = fit_standardizer(tasks);
  std::vector<TaskDataset> standardized;
  for (const auto& t : tasks) standardized.push_back(standardizer.transform(t));
  const auto dim = tasks.front().dim();
  const auto layout = PriorLayout::make(static_cast<int>(dim), config.base.resolved_feature_dim(dim),
                                        config.base.hidden_layers, config.base.hidden_width);
  auto init_rng = make_rng(config.base.seed, {kInit});
  Vector params = layout.initial_params(init_rng);
  const int n = static_cast<int>(tasks.size());

  auto trace = run_loop(config.base, tasks.size(), params, [&](const std::vector<std::size_t>& batch) {
    std::vector<TaskDataset> data;
    for (std::size_t i : batch) data.push_back(standardized[i]);
    return pacoh_map_objective(layout, params, data, n, config.base.kl_weight, config.hyperprior_variance);
  });
  return {GpPrior(layout, std::move(params), standardizer), std::move(trace)};
}

LearnedGp meta_train_learned_gp(std::span<const TaskDataset> tasks, const LearnedGpConfig& config) {
  validate_tasks(tasks);
  const Standardizer standardizer = fit_standardizer(tasks);
  std::vector<TaskDataset> standardized;
  for (const auto& t : tasks) standardized.push_back(standardizer.transform(t));
  SeFitOptions options;
  options.steps = config.iterations;
  options.lr = config.lr;
  options.learn_mean = true;
  const SeGpHypers hypers = fit_se_hypers(SeGpHypers{}, standardized, options);
  return {VanillaGp(tasks.front().dim(), hypers, false), standardizer};
}

}  // namespace fpacoh
