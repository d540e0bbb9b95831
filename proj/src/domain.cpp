// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/domain.hpp"

#include <cmath>

namespace fpacoh {

Box::Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size() || lower.size() == 0) throw DimensionMismatch("Box: bound lengths differ");
  if (!lower.allFinite() || !upper.allFinite() || (upper.array() < lower.array()).any()) {
    throw Error("Box: bounds must be finite with lower <= upper");
  }
}

Matrix Box::sample(std::mt19937_64& rng, Eigen::Index n) const {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Matrix out(n, dim());
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < dim(); ++j) out(i, j) = lower(j) + unit(rng) * (upper(j) - lower(j));
  }
  return out;
}

bool Box::contains(const Vector& x, double tol) const {
  return x.size() == dim() && (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
}

Vector Box::clamp(const Vector& x) const { return x.cwiseMax(lower).cwiseMin(upper); }

Domain::Domain(Matrix candidates) : space_(std::move(candidates)) {
  if (this->candidates().rows() == 0 || this->candidates().cols() == 0) throw EmptyData("Domain: no candidates");
}

Eigen::Index Domain::dim() const { return is_finite() ? candidates().cols() : box().dim(); }

Box Domain::bounding_box() const {
  if (!is_finite()) return box();
  return Box(candidates().colwise().minCoeff().transpose(), candidates().colwise().maxCoeff().transpose());
}

Matrix Domain::sample_uniform(std::mt19937_64& rng, Eigen::Index n) const {
  if (!is_finite()) return box().sample(rng, n);
  const Matrix& c = candidates();
  std::uniform_int_distribution<Eigen::Index> pick(0, c.rows() - 1);
  Matrix out(n, c.cols());
  for (Eigen::Index i = 0; i < n; ++i) out.row(i) = c.row(pick(rng));
  return out;
}

Standardizer Domain::input_moments() const {
  Standardizer s = Standardizer::identity(dim());
  if (!is_finite()) {
    s.x_mean = 0.5 * (box().lower + box().upper);
    s.x_std = (box().width() / std::sqrt(12.0)).cwiseMax(Standardizer::kStdFloor);
    return s;
  }
  const Matrix& c = candidates();
  s.x_mean = c.colwise().mean().transpose();
  s.x_std = ((c.rowwise() - s.x_mean.transpose()).array().square().colwise().mean().sqrt())
                .matrix()
                .transpose()
                .cwiseMax(Standardizer::kStdFloor);
  return s;
}

}  // namespace fpacoh
