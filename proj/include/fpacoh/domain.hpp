// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <variant>

#include "fpacoh/dataset.hpp"
#include "fpacoh/linalg.hpp"

namespace fpacoh {

/// Axis-aligned box [lower, upper].
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi);

  Eigen::Index dim() const { return lower.size(); }
  Vector width() const { return upper - lower; }
  /// n points drawn i.i.d. uniformly, one per row.
  Matrix sample(std::mt19937_64& rng, Eigen::Index n) const;
  bool contains(const Vector& x, double tol = 0.0) const;
  Vector clamp(const Vector& x) const;
};

/// Search space of a task: a continuous box or a finite candidate set (one
/// candidate per row).
class Domain {
 public:
  Domain(Box box) : space_(std::move(box)) {}  // NOLINT(google-explicit-constructor)
  explicit Domain(Matrix candidates);

  bool is_finite() const { return std::holds_alternative<Matrix>(space_); }
  Eigen::Index dim() const;
  const Box& box() const { return std::get<Box>(space_); }
  const Matrix& candidates() const { return std::get<Matrix>(space_); }
  /// The box itself, or the bounding box of the candidates.
  Box bounding_box() const;
  /// Uniform draws: from the box, or candidate rows with replacement.
  Matrix sample_uniform(std::mt19937_64& rng, Eigen::Index n) const;
  /// Input moments of the uniform distribution over the domain, with the
  /// output moments left at (0, 1).
  Standardizer input_moments() const;

 private:
  std::variant<Box, Matrix> space_;
};

}  // namespace fpacoh
