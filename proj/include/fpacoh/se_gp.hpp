// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>

#include "fpacoh/gp.hpp"

namespace fpacoh {

/// Zero-mean SE process nu * exp(-||x - x'||^2 / (2 l)) used as the
/// function-space hyper-prior. Note that `lengthscale` divides the squared
/// distance directly.
struct HyperPriorGp {
  double lengthscale = 0.3;
  double outputscale = 1.0;

  Matrix kernel(const Matrix& a, const Matrix& b) const;
  /// N(0, K_X) with the library jitter policy applied to its factor.
  Mvn marginal(const Matrix& x) const;
};

/// Hyper-parameters of a constant-mean GP with the conventional SE kernel
/// nu * exp(-||x - x'||^2 / (2 lengthscale^2)).
struct SeGpHypers {
  double mean = 0.0;
  double lengthscale = 0.5;
  double outputscale = 1.0;
  double noise_std = 0.05;

  bool operator==(const SeGpHypers&) const = default;
};

struct SeGpBounds {
  double lengthscale_min = 0.05, lengthscale_max = 5.0;
  double outputscale_min = 0.1, outputscale_max = 10.0;
  double noise_min = 1e-4, noise_max = 0.5;

  SeGpHypers clamp(SeGpHypers h) const;
};

/// Constant-mean SE-kernel GP (the Vanilla GP baseline and the shape of the
/// Learned-GP baseline).
class VanillaGp final : public GpModel {
 public:
  VanillaGp(Eigen::Index input_dim, SeGpHypers hypers = {}, bool fit_hypers = true)
      : input_dim_(input_dim), hypers_(hypers), fit_hypers_(fit_hypers) {}

  const SeGpHypers& hypers() const { return hypers_; }
  bool fit_hypers() const { return fit_hypers_; }

  Eigen::Index input_dim() const override { return input_dim_; }
  Vector mean(const Matrix& x) const override;
  Matrix kernel(const Matrix& a, const Matrix& b) const override;
  Vector kernel_diag(const Matrix& x) const override;
  double noise_var() const override { return hypers_.noise_std * hypers_.noise_std; }

 private:
  Eigen::Index input_dim_;
  SeGpHypers hypers_;
  bool fit_hypers_;
};

struct SeFitOptions {
  int steps = 200;
  double lr = 0.05;
  bool learn_mean = false;
  SeGpBounds bounds{};
};

/// Maximizes sum_i ln Z(D_i) over (mean, lengthscale, outputscale, noise) with
/// projected Adam in log space. Returns the best iterate seen, never worse than
/// `init`. Falls back to `init` on numerical failure.
SeGpHypers fit_se_hypers(const SeGpHypers& init, std::span<const TaskDataset> tasks, const SeFitOptions& options);

/// Sum of ln Z(D_i) under the given hyper-parameters.
double se_total_mll(const SeGpHypers& hypers, std::span<const TaskDataset> tasks);

/// Type-II MLE refit when enabled and at least 5 observations exist; the
/// default hyper-parameters otherwise.
VanillaGp vanilla_gp_fit(const VanillaGp& gp, const TaskDataset& data);

inline constexpr Eigen::Index kVanillaMinFitPoints = 5;

}  // namespace fpacoh
