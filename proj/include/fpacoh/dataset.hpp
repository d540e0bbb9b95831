// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

#include "fpacoh/linalg.hpp"

namespace fpacoh {

/// Observations of one task: one input per row of `x`, targets in `y`.
struct TaskDataset {
  Matrix x;
  Vector y;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index dim() const { return x.cols(); }
  bool empty() const { return y.size() == 0; }
};

/// Affine map into the standardized space the GP priors live in.
struct Standardizer {
  static constexpr double kStdFloor = 1e-8;

  Vector x_mean;
  Vector x_std;
  double y_mean = 0.0;
  double y_std = 1.0;

  static Standardizer identity(Eigen::Index dim);

  Matrix transform_x(const Matrix& x) const;
  Vector transform_y(const Vector& y) const;
  TaskDataset transform(const TaskDataset& d) const;
  Vector inverse_y(const Vector& y) const;
  /// Scales standardized variances back to raw output units.
  Vector inverse_var(const Vector& var) const;
};

/// Pooled per-dimension input moments and scalar output moments.
/// Throws EmptyData when the datasets contain no points.
Standardizer fit_standardizer(std::span<const TaskDataset> datasets);

}  // namespace fpacoh
