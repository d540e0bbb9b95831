// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/linalg.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <string>

namespace fpacoh {
namespace {

bool try_factor(const Matrix& m, double jitter, Matrix& out) {
  Matrix shifted = m;
  shifted.diagonal().array() += jitter;
  Eigen::LLT<Matrix> llt(shifted);
  if (llt.info() != Eigen::Success) return false;
  out = llt.matrixL();
  // LLT only inspects the lower triangle and may accept NaN pivots silently.
  return out.diagonal().allFinite() && (out.diagonal().array() > 0.0).all();
}

void require_square(const Matrix& m, const char* what) {
  if (m.rows() != m.cols() || m.rows() == 0) {
    throw DimensionMismatch(std::string(what) + ": expected a non-empty square matrix, got " +
                            std::to_string(m.rows()) + "x" + std::to_string(m.cols()));
  }
}

}  // namespace

CholeskyFactor cholesky_with_jitter(const Matrix& m, double jitter) {
  require_square(m, "cholesky");
  CholeskyFactor result;
  if (try_factor(m, jitter, result.lower)) {
    result.jitter = jitter;
    return result;
  }
  for (double j = std::max(jitter * 10.0, kJitterStart); j <= kJitterMax * (1.0 + 1e-12); j *= 10.0) {
    if (try_factor(m, j, result.lower)) {
      result.jitter = j;
      return result;
    }
  }
  throw NotPositiveDefinite("cholesky: matrix of size " + std::to_string(m.rows()) +
                            " is not positive definite with jitter up to " + std::to_string(kJitterMax));
}

Matrix cholesky(const Matrix& m, double jitter) { return cholesky_with_jitter(m, jitter).lower; }

Matrix chol_solve(const Matrix& lower, const Matrix& rhs) {
  Matrix z = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

Vector chol_solve(const Matrix& lower, const Vector& rhs) {
  Vector z = lower.triangularView<Eigen::Lower>().solve(rhs);
  return lower.transpose().triangularView<Eigen::Upper>().solve(z);
}

double chol_logdet(const Matrix& lower) { return 2.0 * lower.diagonal().array().log().sum(); }

Matrix chol_inverse(const Matrix& lower) {
  return chol_solve(lower, Matrix::Identity(lower.rows(), lower.cols()).eval());
}

Mvn::Mvn(Vector mean, Matrix cov, double jitter) : mean_(std::move(mean)), cov_(std::move(cov)) {
  require_square(cov_, "Mvn");
  if (cov_.rows() != mean_.size()) {
    throw DimensionMismatch("Mvn: mean has length " + std::to_string(mean_.size()) +
                            " but covariance is " + std::to_string(cov_.rows()) + "x" +
                            std::to_string(cov_.cols()));
  }
  auto factor = cholesky_with_jitter(cov_, jitter);
  chol_ = std::move(factor.lower);
  jitter_ = factor.jitter;
}

double mvn_logpdf(const Mvn& d, const Vector& x) {
  if (x.size() != d.dim()) throw DimensionMismatch("mvn_logpdf: point dimension differs from distribution");
  Vector z = d.chol().triangularView<Eigen::Lower>().solve(x - d.mean());
  return -0.5 * z.squaredNorm() - 0.5 * chol_logdet(d.chol()) - 0.5 * static_cast<double>(d.dim()) * kLog2Pi;
}

double kl_mvn(const Mvn& p, const Mvn& q) {
  if (p.dim() != q.dim()) throw DimensionMismatch("kl_mvn: distributions have different dimensions");
  const auto dim = static_cast<double>(p.dim());
  const Matrix& lq = q.chol();
  // tr(Kq^{-1} Kp) = ||Lq^{-1} Lp||_F^2 with both factors including their jitter.
  Matrix a = lq.triangularView<Eigen::Lower>().solve(p.chol());
  Vector b = lq.triangularView<Eigen::Lower>().solve(p.mean() - q.mean());
  double kl = 0.5 * (a.squaredNorm() + b.squaredNorm() - dim + chol_logdet(lq) - chol_logdet(p.chol()));
  return kl;
}

Vector mvn_sample(const Mvn& d, const Vector& noise) {
  if (noise.size() != d.dim()) throw DimensionMismatch("mvn_sample: noise dimension differs from distribution");
  return d.mean() + d.chol().triangularView<Eigen::Lower>() * noise;
}

}  // namespace fpacoh
