// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>

#include "fpacoh/errors.hpp"

namespace fpacoh {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

/// Jitter escalation policy shared by every factorization in the library:
/// the requested jitter is tried first, then max(10x, kJitterStart) up to
/// kJitterMax before giving up.
inline constexpr double kJitterStart = 1e-6;
inline constexpr double kJitterMax = 1e-2;

struct CholeskyFactor {
  Matrix lower;
  double jitter = 0.0;  // jitter actually added to the diagonal
};

/// Lower Cholesky factor of `m + jitter*I`, escalating jitter on failure.
CholeskyFactor cholesky_with_jitter(const Matrix& m, double jitter);

/// Returns L with L*L^T = m + j*I, where j >= jitter is the escalated jitter.
Matrix cholesky(const Matrix& m, double jitter);

/// Solves (L L^T) X = B.
Matrix chol_solve(const Matrix& lower, const Matrix& rhs);
Vector chol_solve(const Matrix& lower, const Vector& rhs);

/// ln|L L^T|.
double chol_logdet(const Matrix& lower);

/// (L L^T)^{-1}, computed through two triangular solves.
Matrix chol_inverse(const Matrix& lower);

/// Multivariate normal with a cached Cholesky factor of cov + jitter*I.
class Mvn {
 public:
  Mvn(Vector mean, Matrix cov, double jitter = 0.0);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& cov() const { return cov_; }
  const Matrix& chol() const { return chol_; }
  double jitter() const { return jitter_; }

 private:
  Vector mean_;
  Matrix cov_;
  Matrix chol_;
  double jitter_ = 0.0;
};

double mvn_logpdf(const Mvn& d, const Vector& x);

/// KL(p || q) between two multivariate normals, closed form.
double kl_mvn(const Mvn& p, const Mvn& q);

/// mean + chol * noise.
Vector mvn_sample(const Mvn& d, const Vector& noise);

}  // namespace fpacoh
