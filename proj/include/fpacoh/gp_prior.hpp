// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>

#include "fpacoh/autodiff.hpp"
#include "fpacoh/dataset.hpp"
#include "fpacoh/gp.hpp"
#include "fpacoh/mlp.hpp"

namespace fpacoh {

/// Layout of the flat prior parameter vector: mean network, feature network,
/// then ln(outputscale), ln(lengthscale), ln(noise std).
class PriorLayout {
 public:
  PriorLayout(MlpSpec mean_spec, MlpSpec feature_spec);

  /// Defaults: 3 hidden tanh layers of 32 units, scalar mean output.
  static PriorLayout make(int input_dim, int feature_dim, int hidden_layers = 3, int hidden_width = 32);

  const MlpSpec& mean_spec() const { return mean_spec_; }
  const MlpSpec& feature_spec() const { return feature_spec_; }
  Eigen::Index mean_offset() const { return 0; }
  Eigen::Index feature_offset() const { return mean_spec_.param_count(); }
  Eigen::Index log_outputscale_index() const { return feature_offset() + feature_spec_.param_count(); }
  Eigen::Index log_lengthscale_index() const { return log_outputscale_index() + 1; }
  Eigen::Index log_noise_index() const { return log_outputscale_index() + 2; }
  Eigen::Index size() const { return log_outputscale_index() + 3; }
  int input_dim() const { return mean_spec_.input_dim; }

  /// Glorot-initialized networks with ln(nu)=0, ln(l)=0, ln(sigma)=ln(0.1).
  Vector initial_params(std::mt19937_64& rng) const;

  bool operator==(const PriorLayout&) const = default;

 private:
  MlpSpec mean_spec_;
  MlpSpec feature_spec_;
};

/// GP(m_phi(x), nu exp(-||Phi_phi(x) - Phi_phi(x')||^2 / (2 l))) with learned
/// Gaussian noise, living in the standardized space of `standardizer`.
class GpPrior final : public GpModel {
 public:
  GpPrior(PriorLayout layout, Vector params, Standardizer standardizer);

  const PriorLayout& layout() const { return layout_; }
  const Vector& params() const { return params_; }
  const Standardizer& standardizer() const { return standardizer_; }

  double outputscale() const;
  double lengthscale() const;
  double noise_std() const;

  Eigen::Index input_dim() const override { return layout_.input_dim(); }
  Vector mean(const Matrix& x) const override;
  Matrix features(const Matrix& x) const;
  Matrix kernel(const Matrix& a, const Matrix& b) const override;
  Vector kernel_diag(const Matrix& x) const override;
  double noise_var() const override;

 private:
  std::span<const double> block(Eigen::Index offset, Eigen::Index count) const;

  PriorLayout layout_;
  Vector params_;
  Standardizer standardizer_;
};

/// Entry (i,j) = nu * exp(-||Phi(a_i) - Phi(b_j)||^2 / (2 l)).
Matrix kernel_matrix(const GpPrior& prior, const Matrix& a, const Matrix& b);

/// Prior marginal over the latent function at `x`, recorded on a tape whose
/// parameter vector follows `layout`.
struct TapeMarginal {
  ad::Var mean;  // column
  ad::Var cov;   // K_phi(x, x)
};
TapeMarginal prior_marginal(const PriorLayout& layout, ad::Tape& tape, const Matrix& x);

/// Closed-form log evidence recorded on a tape (x, y already standardized).
ad::Var gp_mll(const PriorLayout& layout, ad::Tape& tape, const TaskDataset& data);

}  // namespace fpacoh
