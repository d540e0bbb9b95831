// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/se_gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fpacoh/adamw.hpp"
#include "fpacoh/autodiff.hpp"

namespace fpacoh {
namespace {

Matrix sq_dists(const Matrix& a, const Matrix& b) {
  Matrix d(a.rows(), b.rows());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < b.rows(); ++j) d(i, j) = (a.row(i) - b.row(j)).squaredNorm();
  }
  return d;
}

// Tape parameter order for SE fits.
enum : Eigen::Index { kMean = 0, kLogLength = 1, kLogScale = 2, kLogNoise = 3, kNumSe = 4 };

Vector pack(const SeGpHypers& h) {
  Vector p(kNumSe);
  p << h.mean, std::log(h.lengthscale), std::log(h.outputscale), std::log(h.noise_std);
  return p;
}

SeGpHypers unpack(const Vector& p) {
  return {p(kMean), std::exp(p(kLogLength)), std::exp(p(kLogScale)), std::exp(p(kLogNoise))};
}

// Returns (objective, gradient) of sum_i ln Z(D_i).
std::pair<double, Vector> mll_and_grad(const Vector& p, std::span<const TaskDataset> tasks) {
  ad::Tape tape(p);
  ad::Var mean = tape.param(kMean, 1, 1);
  ad::Var log_l = tape.param(kLogLength, 1, 1);
  ad::Var log_nu = tape.param(kLogScale, 1, 1);
  ad::Var log_sigma = tape.param(kLogNoise, 1, 1);
  ad::Var neg_inv_two_l2 = ad::scale(ad::exp(ad::scale(log_l, -2.0)), -0.5);
  ad::Var nu = ad::exp(log_nu);
  ad::Var noise = ad::exp(ad::scale(log_sigma, 2.0));
  ad::Var total;
  for (const auto& d : tasks) {
    if (d.empty()) continue;
    ad::Var dist = tape.constant(sq_dists(d.x, d.x));
    ad::Var k = ad::add_diag(ad::scale(ad::exp(ad::scale(dist, neg_inv_two_l2)), nu), noise);
    ad::Var m = ad::scale(tape.constant(Matrix::Ones(d.size(), 1)), mean);
    ad::Var ll = ad::gaussian_logpdf(d.y, m, k);
    total = total.tape() == nullptr ? ll : ad::add(total, ll);
  }
  if (total.tape() == nullptr) return {0.0, Vector::Zero(kNumSe)};
  return {total.scalar(), tape.gradient(total)};
}

}  // namespace

Matrix HyperPriorGp::kernel(const Matrix& a, const Matrix& b) const {
  return (outputscale * (-sq_dists(a, b).array() / (2.0 * lengthscale)).exp()).matrix();
}

Mvn HyperPriorGp::marginal(const Matrix& x) const {
  return Mvn(Vector::Zero(x.rows()), kernel(x, x), kJitterStart);
}

SeGpHypers SeGpBounds::clamp(SeGpHypers h) const {
  h.lengthscale = std::clamp(h.lengthscale, lengthscale_min, lengthscale_max);
  h.outputscale = std::clamp(h.outputscale, outputscale_min, outputscale_max);
  h.noise_std = std::clamp(h.noise_std, noise_min, noise_max);
  return h;
}

Vector VanillaGp::mean(const Matrix& x) const { return Vector::Constant(x.rows(), hypers_.mean); }

Matrix VanillaGp::kernel(const Matrix& a, const Matrix& b) const {
  const double l = hypers_.lengthscale;
  return (hypers_.outputscale * (-sq_dists(a, b).array() / (2.0 * l * l)).exp()).matrix();
}

Vector VanillaGp::kernel_diag(const Matrix& x) const { return Vector::Constant(x.rows(), hypers_.outputscale); }

double se_total_mll(const SeGpHypers& hypers, std::span<const TaskDataset> tasks) {
  double total = 0.0;
  for (const auto& d : tasks) {
    if (d.empty()) continue;
    total += gp_mll(VanillaGp(d.dim(), hypers), d);
  }
  return total;
}

SeGpHypers fit_se_hypers(const SeGpHypers& init, std::span<const TaskDataset> tasks, const SeFitOptions& options) {
  const SeGpHypers start = options.bounds.clamp(init);
  SeGpHypers best = start;
  double best_value = -std::numeric_limits<double>::infinity();
  try {
    Vector p = pack(start);
    AdamW opt({.lr = options.lr, .weight_decay = 0.0, .lr_decay = 1.0}, kNumSe);
    for (int step = 0; step <= options.steps; ++step) {
      auto [value, grad] = mll_and_grad(p, tasks);
      if (std::isfinite(value) && value > best_value) {
        best_value = value;
        best = unpack(p);
      }
      if (step == options.steps || !grad.allFinite()) break;
      if (!options.learn_mean) grad(kMean) = 0.0;
      Vector neg = -grad;
      opt.step(p, neg);
      p = pack(options.bounds.clamp(unpack(p)));
    }
  } catch (const Error&) {
    // keep the best iterate found before the failure
  }
  return best;
}

VanillaGp vanilla_gp_fit(const VanillaGp& gp, const TaskDataset& data) {
  if (!gp.fit_hypers() || data.size() < kVanillaMinFitPoints) return gp;
  const TaskDataset tasks[] = {data};
  SeFitOptions options;
  return VanillaGp(gp.input_dim(), fit_se_hypers(gp.hypers(), tasks, options), gp.fit_hypers());
}

}  // namespace fpacoh
