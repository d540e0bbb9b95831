// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "fpacoh/domain.hpp"
#include "fpacoh/gp_prior.hpp"
#include "fpacoh/se_gp.hpp"

namespace fpacoh {

/// Settings of the F-PACOH-MAP meta-training loop.
struct MetaTrainConfig {
  double lr = 1e-3;
  double lr_decay = 0.97;
  double weight_decay = 1e-4;
  int task_batch = 4;
  int iterations = 4000;
  double hyperprior_lengthscale = 0.3;
  double hyperprior_outputscale = 1.0;
  double kl_weight = 0.1;  // kappa
  int feature_dim = 0;     // 0 selects 2 for inputs of dimension <= 2 and 6 otherwise
  int hidden_layers = 3;
  int hidden_width = 32;
  int measurement_task_points = 10;
  int measurement_uniform_points = 10;
  std::uint64_t seed = 0;

  int resolved_feature_dim(Eigen::Index input_dim) const;
  /// Throws ConfigError on out-of-range settings.
  void validate() const;
};

/// PACOH-MAP: the same loop with a Gaussian hyper-prior N(0, variance*I) on
/// the prior parameters, weighted by `base.kl_weight`.
struct PacohMapConfig {
  MetaTrainConfig base;
  double hyperprior_variance = 10.0;
};

/// Points on which the functional KL is evaluated: a subset of the task
/// inputs (first `task_rows` rows) followed by uniform draws from the domain.
struct MeasurementSet {
  Matrix x;
  Eigen::Index task_rows = 0;
};

/// min(task_points, T) task inputs drawn without replacement, then
/// `uniform_points` i.i.d. uniform points from `domain`.
MeasurementSet sample_measurement_set(const TaskDataset& task, const Box& domain, std::mt19937_64& rng,
                                      int task_points = 10, int uniform_points = 10);

/// KL weight of one task: kappa * (1/sqrt(n) + 1/(n T)).
double kl_coefficient(double kappa, int n_tasks, Eigen::Index task_size);

struct ObjectiveValue {
  double value = 0.0;
  Vector grad;
  double mll_term = 0.0;  // mean of -(1/T_i) ln Z_i over the batch
  double reg_term = 0.0;  // mean of the weighted regularizer over the batch
};

/// Mini-batch F-PACOH-MAP objective and its gradient. `batch` and `msets`
/// live in standardized space.
ObjectiveValue fpacoh_objective(const PriorLayout& layout, const Vector& params, std::span<const TaskDataset> batch,
                                std::span<const MeasurementSet> msets, const HyperPriorGp& hyperprior, int n_tasks,
                                double kappa);

/// Mini-batch PACOH-MAP objective (parameter-space Gaussian hyper-prior).
ObjectiveValue pacoh_map_objective(const PriorLayout& layout, const Vector& params,
                                   std::span<const TaskDataset> batch, int n_tasks, double kappa,
                                   double hyperprior_variance);

/// KL(p_phi(h^X) || rho(h^X)) on one standardized measurement set.
double functional_kl(const GpPrior& prior, const Matrix& x_standardized, const HyperPriorGp& hyperprior);

struct MetaTrainResult {
  GpPrior prior;
  std::vector<double> loss_trace;
};

/// F-PACOH-MAP meta-training on raw task data; `domain` bounds the uniform
/// measurement points. Throws TrainingDiverged after 10 consecutive
/// non-finite steps.
MetaTrainResult meta_train_fpacoh(std::span<const TaskDataset> tasks, const Box& domain,
                                  const MetaTrainConfig& config);

MetaTrainResult meta_train_pacoh_map(std::span<const TaskDataset> tasks, const PacohMapConfig& config);

/// Constant-mean SE GP fitted by maximizing the summed log evidence of all
/// tasks in the shared standardized space.
struct LearnedGp {
  VanillaGp gp;
  Standardizer standardizer;
};

struct LearnedGpConfig {
  int iterations = 500;
  double lr = 0.05;
};

LearnedGp meta_train_learned_gp(std::span<const TaskDataset> tasks, const LearnedGpConfig& config = {});

}  // namespace fpacoh
