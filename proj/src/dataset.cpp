// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/dataset.hpp"

#include <algorithm>
#include <cmath>

namespace fpacoh {

Standardizer Standardizer::identity(Eigen::Index dim) {
  Standardizer s;
  s.x_mean = Vector::Zero(dim);
  s.x_std = Vector::Ones(dim);
  return s;
}

Matrix Standardizer::transform_x(const Matrix& x) const {
  if (x.cols() != x_mean.size()) throw DimensionMismatch("Standardizer: input width differs from fitted width");
  return ((x.rowwise() - x_mean.transpose()).array().rowwise() / x_std.transpose().array()).matrix();
}

Vector Standardizer::transform_y(const Vector& y) const { return (y.array() - y_mean) / y_std; }

TaskDataset Standardizer::transform(const TaskDataset& d) const { return {transform_x(d.x), transform_y(d.y)}; }

Vector Standardizer::inverse_y(const Vector& y) const { return (y.array() * y_std + y_mean).matrix(); }

Vector Standardizer::inverse_var(const Vector& var) const { return var * (y_std * y_std); }

Standardizer fit_standardizer(std::span<const TaskDataset> datasets) {
  Eigen::Index total = 0;
  Eigen::Index dim = -1;
  for (const auto& d : datasets) {
    if (d.empty()) continue;
    if (dim >= 0 && d.dim() != dim) throw DimensionMismatch("fit_standardizer: datasets have different input widths");
    dim = d.dim();
    total += d.size();
  }
  if (total == 0) throw EmptyData("fit_standardizer: no data points");

  Standardizer s;
  s.x_mean = Vector::Zero(dim);
  Vector x_sq = Vector::Zero(dim);
  double y_sum = 0.0;
  for (const auto& d : datasets) {
    if (d.empty()) continue;
    s.x_mean += d.x.colwise().sum().transpose();
    y_sum += d.y.sum();
  }
  const auto n = static_cast<double>(total);
  s.x_mean /= n;
  s.y_mean = y_sum / n;
  double y_sq = 0.0;
  for (const auto& d : datasets) {
    if (d.empty()) continue;
    x_sq += (d.x.rowwise() - s.x_mean.transpose()).array().square().colwise().sum().matrix().transpose();
    y_sq += (d.y.array() - s.y_mean).square().sum();
  }
  s.x_std = (x_sq / n).array().sqrt().max(Standardizer::kStdFloor).matrix();
  s.y_std = std::max(std::sqrt(y_sq / n), Standardizer::kStdFloor);
  return s;
}

}  // namespace fpacoh
