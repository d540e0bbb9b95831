// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fpacoh/dataset.hpp"
#include "fpacoh/linalg.hpp"

namespace fpacoh {

/// A Gaussian-process prior with Gaussian likelihood, evaluated in
/// standardized input/output space.
class GpModel {
 public:
  virtual ~GpModel() = default;

  virtual Eigen::Index input_dim() const = 0;
  virtual Vector mean(const Matrix& x) const = 0;
  virtual Matrix kernel(const Matrix& a, const Matrix& b) const = 0;
  virtual Vector kernel_diag(const Matrix& x) const;
  /// Likelihood variance sigma^2.
  virtual double noise_var() const = 0;
};

/// Predictive marginals of the latent function.
struct Marginals {
  Vector mean;
  Vector var;
};

/// A GP model conditioned on a training set, with its factorization cached
/// so that repeated predictions cost one cross-kernel evaluation each.
class ConditionedGp {
 public:
  ConditionedGp(const GpModel& model, TaskDataset train);

  Marginals marginals(const Matrix& query) const;
  Mvn joint(const Matrix& query) const;
  const TaskDataset& train() const { return train_; }

 private:
  const GpModel* model_;
  TaskDataset train_;
  Matrix chol_;
  Vector alpha_;
};

/// Closed-form log evidence ln N(y; m_X, K_X + sigma^2 I).
double gp_mll(const GpModel& model, const TaskDataset& data);

/// Joint posterior over the latent function at `query`; the prior marginals
/// when `train` is empty.
Mvn gp_posterior(const GpModel& model, const TaskDataset& train, const Matrix& query);

}  // namespace fpacoh
