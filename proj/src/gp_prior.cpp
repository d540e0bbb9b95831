// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/gp_prior.hpp"

#include <cmath>
#include <string>

namespace fpacoh {

PriorLayout::PriorLayout(MlpSpec mean_spec, MlpSpec feature_spec)
    : mean_spec_(mean_spec), feature_spec_(feature_spec) {
  mean_spec_.validate();
  feature_spec_.validate();
  if (mean_spec_.output_dim != 1) throw DimensionMismatch("PriorLayout: mean network must have one output");
  if (mean_spec_.input_dim != feature_spec_.input_dim) {
    throw DimensionMismatch("PriorLayout: mean and feature networks disagree on the input width");
  }
}

PriorLayout PriorLayout::make(int input_dim, int feature_dim, int hidden_layers, int hidden_width) {
  return PriorLayout(MlpSpec{input_dim, hidden_layers, hidden_width, 1},
                     MlpSpec{input_dim, hidden_layers, hidden_width, feature_dim});
}

Vector PriorLayout::initial_params(std::mt19937_64& rng) const {
  Vector params(size());
  params.segment(mean_offset(), mean_spec_.param_count()) = mlp_init(mean_spec_, rng);
  params.segment(feature_offset(), feature_spec_.param_count()) = mlp_init(feature_spec_, rng);
  params(log_outputscale_index()) = 0.0;
  params(log_lengthscale_index()) = 0.0;
  params(log_noise_index()) = std::log(0.1);
  return params;
}

GpPrior::GpPrior(PriorLayout layout, Vector params, Standardizer standardizer)
    : layout_(std::move(layout)), params_(std::move(params)), standardizer_(std::move(standardizer)) {
  if (params_.size() != layout_.size()) {
    throw DimensionMismatch("GpPrior: expected " + std::to_string(layout_.size()) + " parameters, got " +
                            std::to_string(params_.size()));
  }
  if (standardizer_.x_mean.size() != layout_.input_dim()) {
    throw DimensionMismatch("GpPrior: standardizer width differs from the network input width");
  }
}

std::span<const double> GpPrior::block(Eigen::Index offset, Eigen::Index count) const {
  return {params_.data() + offset, static_cast<std::size_t>(count)};
}

double GpPrior::outputscale() const { return std::exp(params_(layout_.log_outputscale_index())); }
double GpPrior::lengthscale() const { return std::exp(params_(layout_.log_lengthscale_index())); }
double GpPrior::noise_std() const { return std::exp(params_(layout_.log_noise_index())); }
double GpPrior::noise_var() const { return noise_std() * noise_std(); }

Vector GpPrior::mean(const Matrix& x) const {
  const auto& spec = layout_.mean_spec();
  return mlp_forward(spec, block(layout_.mean_offset(), spec.param_count()), x).col(0);
}

Matrix GpPrior::features(const Matrix& x) const {
  const auto& spec = layout_.feature_spec();
  return mlp_forward(spec, block(layout_.feature_offset(), spec.param_count()), x);
}

Matrix GpPrior::kernel(const Matrix& a, const Matrix& b) const {
  const Matrix fa = features(a);
  const Matrix fb = &a == &b ? fa : features(b);
  const double nu = outputscale();
  const double inv_two_l = 0.5 / lengthscale();
  Matrix k(fa.rows(), fb.rows());
  for (Eigen::Index i = 0; i < fa.rows(); ++i) {
    for (Eigen::Index j = 0; j < fb.rows(); ++j) k(i, j) = nu * std::exp(-(fa.row(i) - fb.row(j)).squaredNorm() * inv_two_l);
  }
  return k;
}

Vector GpPrior::kernel_diag(const Matrix& x) const { return Vector::Constant(x.rows(), outputscale()); }

Matrix kernel_matrix(const GpPrior& prior, const Matrix& a, const Matrix& b) {
  if (a.cols() != prior.input_dim() || b.cols() != prior.input_dim()) {
    throw DimensionMismatch("kernel_matrix: input width differs from the prior input width");
  }
  return prior.kernel(a, b);
}

TapeMarginal prior_marginal(const PriorLayout& layout, ad::Tape& tape, const Matrix& x) {
  if (x.cols() != layout.input_dim()) throw DimensionMismatch("prior_marginal: input width differs");
  ad::Var inputs = tape.constant(x);
  ad::Var mean = mlp_forward(layout.mean_spec(), tape, layout.mean_offset(), inputs);
  ad::Var feats = mlp_forward(layout.feature_spec(), tape, layout.feature_offset(), inputs);
  ad::Var log_nu = tape.param(layout.log_outputscale_index(), 1, 1);
  ad::Var log_l = tape.param(layout.log_lengthscale_index(), 1, 1);
  // -1/(2 l) = -0.5 * exp(-ln l)
  ad::Var neg_inv_two_l = ad::scale(ad::exp(ad::scale(log_l, -1.0)), -0.5);
  ad::Var k = ad::exp(ad::scale(ad::sq_dist(feats, feats), neg_inv_two_l));
  return {mean, ad::scale(k, ad::exp(log_nu))};
}

ad::Var gp_mll(const PriorLayout& layout, ad::Tape& tape, const TaskDataset& data) {
  if (data.empty()) throw EmptyData("gp_mll: empty dataset");
  TapeMarginal m = prior_marginal(layout, tape, data.x);
  ad::Var log_sigma = tape.param(layout.log_noise_index(), 1, 1);
  ad::Var cov = ad::add_diag(m.cov, ad::exp(ad::scale(log_sigma, 2.0)));
  return ad::gaussian_logpdf(data.y, m.mean, cov);
}

}  // namespace fpacoh
