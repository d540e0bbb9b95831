// SPDX-License-Identifier: Apache-2.0
// Reference implementations used only by tests. Deliberately naive: explicit
// Gauss-Jordan inversion, plain loops, no Cholesky.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;

// Inverse and log-determinant by Gauss-Jordan elimination with partial pivoting.
struct Inverse {
  Matrix inv;
  double logdet = 0.0;
};

inline Inverse gauss_jordan(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  std::vector<std::vector<double>> m(n, std::vector<double>(2 * n, 0.0));
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) m[i][j] = a(i, j);
    m[i][n + i] = 1.0;
  }
  double logdet = 0.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    }
    if (m[p][c] == 0.0) throw std::runtime_error("singular");
    std::swap(m[p], m[c]);
    const double piv = m[c][c];
    logdet += std::log(std::abs(piv));
    for (int j = 0; j < 2 * n; ++j) m[c][j] /= piv;
    for (int r = 0; r < n; ++r) {
      if (r == c) continue;
      const double f = m[r][c];
      if (f == 0.0) continue;
      for (int j = 0; j < 2 * n; ++j) m[r][j] -= f * m[c][j];
    }
  }
  Inverse out;
  out.inv.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out.inv(i, j) = m[i][n + j];
  }
  out.logdet = logdet;
  return out;
}

inline double trace_of(const Matrix& m) {
  double s = 0.0;
  for (int i = 0; i < m.rows(); ++i) s += m(i, i);
  return s;
}

// Closed-form Gaussian KL computed from the explicit inverse.
inline double kl_direct(const Vector& mp, const Matrix& sp, const Vector& mq, const Matrix& sq) {
  const Inverse qi = gauss_jordan(sq);
  const Inverse pi = gauss_jordan(sp);
  const Vector d = mq - mp;
  const double quad = d.dot(qi.inv * d);
  return 0.5 * (trace_of(qi.inv * sp) + quad - static_cast<double>(mp.size()) + qi.logdet - pi.logdet);
}

// Lower factor by the textbook Cholesky-Banachiewicz loop, for sampling only.
inline Matrix lower_factor(const Matrix& a) {
  const int n = static_cast<int>(a.rows());
  Matrix l = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = i == j ? std::sqrt(s) : s / l(j, j);
    }
  }
  return l;
}

inline double log_density(const Vector& x, const Vector& mean, const Inverse& cov) {
  const Vector d = x - mean;
  return -0.5 * d.dot(cov.inv * d) - 0.5 * cov.logdet - 0.5 * static_cast<double>(x.size()) * std::log(2.0 * kPi);
}

// Monte-Carlo estimate of KL(p||q) = E_p[ln p - ln q].
inline double kl_monte_carlo(const Vector& mp, const Matrix& sp, const Vector& mq, const Matrix& sq, long samples,
                             std::mt19937_64& rng) {
  const Matrix l = lower_factor(sp);
  const Inverse pi = gauss_jordan(sp);
  const Inverse qi = gauss_jordan(sq);
  std::normal_distribution<double> z;
  Vector e(mp.size());
  double total = 0.0;
  for (long s = 0; s < samples; ++s) {
    for (int i = 0; i < e.size(); ++i) e(i) = z(rng);
    const Vector x = mp + l * e;
    total += log_density(x, mp, pi) - log_density(x, mq, qi);
  }
  return total / static_cast<double>(samples);
}

struct Posterior {
  Vector mean;
  Matrix cov;
};

// GP posterior through the explicit inverse of K + noise I.
inline Posterior gp_posterior(const Matrix& k_train, const Matrix& k_cross, const Matrix& k_query,
                              const Vector& m_train, const Vector& m_query, const Vector& y, double noise_var) {
  Matrix k = k_train;
  for (int i = 0; i < k.rows(); ++i) k(i, i) += noise_var;
  const Inverse ki = gauss_jordan(k);
  Posterior p;
  p.mean = m_query + k_cross.transpose() * (ki.inv * (y - m_train));
  p.cov = k_query - k_cross.transpose() * ki.inv * k_cross;
  return p;
}

// ln N(y; m, K + noise I) through the explicit inverse.
inline double gp_log_evidence(const Matrix& k_train, const Vector& m, const Vector& y, double noise_var) {
  Matrix k = k_train;
  for (int i = 0; i < k.rows(); ++i) k(i, i) += noise_var;
  return log_density(y, m, gauss_jordan(k));
}

// Squared-exponential kernel with the distance divided by 2*l (the hyper-prior convention).
inline Matrix se_kernel(const Matrix& a, const Matrix& b, double outputscale, double l) {
  Matrix k(a.rows(), b.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < b.rows(); ++j) {
      double d = 0.0;
      for (int c = 0; c < a.cols(); ++c) d += (a(i, c) - b(j, c)) * (a(i, c) - b(j, c));
      k(i, j) = outputscale * std::exp(-d / (2.0 * l));
    }
  }
  return k;
}

// Central differences of a scalar function.
inline Vector central_difference(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double x0 = xp(i);
    xp(i) = x0 + h;
    const double fp = f(xp);
    xp(i) = x0 - h;
    const double fm = f(xp);
    xp(i) = x0;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

// Fourth-order central differences (five-point stencil).
inline Vector central_difference_5(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (int i = 0; i < x.size(); ++i) {
    const double x0 = xp(i);
    double v[4];
    const double steps[4] = {-2.0, -1.0, 1.0, 2.0};
    for (int k = 0; k < 4; ++k) {
      xp(i) = x0 + steps[k] * h;
      v[k] = f(xp);
    }
    xp(i) = x0;
    g(i) = (v[0] - 8.0 * v[1] + 8.0 * v[2] - v[3]) / (12.0 * h);
  }
  return g;
}

// Random symmetric positive definite matrix A A^T + shift I.
inline Matrix random_spd(int n, std::mt19937_64& rng, double shift = 0.5) {
  std::normal_distribution<double> z;
  Matrix a(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) a(i, j) = z(rng);
  }
  Matrix s = a * a.transpose() / static_cast<double>(n);
  for (int i = 0; i < n; ++i) s(i, i) += shift;
  return s;
}

inline Vector random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> z(0.0, scale);
  Vector v(n);
  for (int i = 0; i < n; ++i) v(i) = z(rng);
  return v;
}

inline Matrix random_matrix(int r, int c, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(r, c);
  for (int i = 0; i < r; ++i) {
    for (int j = 0; j < c; ++j) m(i, j) = u(rng);
  }
  return m;
}

// Standard normal CDF by Simpson integration of the density from 0.
inline double normal_cdf_simpson(double z) {
  const int n = 20000;
  const double h = z / n;
  double s = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double x = i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    s += w * std::exp(-0.5 * x * x);
  }
  return 0.5 + s * h / 3.0 / std::sqrt(2.0 * kPi);
}

}  // namespace oracle
