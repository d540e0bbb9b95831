// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/gp.hpp"

#include <algorithm>

namespace fpacoh {

Vector GpModel::kernel_diag(const Matrix& x) const {
  Vector d(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const Matrix row = x.row(i);
    d(i) = kernel(row, row)(0, 0);
  }
  return d;
}

ConditionedGp::ConditionedGp(const GpModel& model, TaskDataset train) : model_(&model), train_(std::move(train)) {
  if (train_.empty()) return;
  if (train_.dim() != model.input_dim()) throw DimensionMismatch("ConditionedGp: training input width differs");
  Matrix k = model.kernel(train_.x, train_.x);
  k.diagonal().array() += model.noise_var();
  chol_ = cholesky(k, 0.0);
  alpha_ = chol_solve(chol_, Vector(train_.y - model.mean(train_.x)));
}

Marginals ConditionedGp::marginals(const Matrix& query) const {
  if (query.cols() != model_->input_dim()) throw DimensionMismatch("ConditionedGp: query width differs");
  Marginals out{model_->mean(query), model_->kernel_diag(query)};
  if (train_.empty()) return out;
  const Matrix cross = model_->kernel(train_.x, query);
  out.mean.noalias() += cross.transpose() * alpha_;
  const Matrix v = chol_.triangularView<Eigen::Lower>().solve(cross);
  out.var -= v.colwise().squaredNorm().transpose();
  out.var = out.var.cwiseMax(0.0);
  return out;
}

Mvn ConditionedGp::joint(const Matrix& query) const {
  if (query.cols() != model_->input_dim()) throw DimensionMismatch("ConditionedGp: query width differs");
  Vector mean = model_->mean(query);
  Matrix cov = model_->kernel(query, query);
  if (!train_.empty()) {
    const Matrix cross = model_->kernel(train_.x, query);
    mean.noalias() += cross.transpose() * alpha_;
    const Matrix v = chol_.triangularView<Eigen::Lower>().solve(cross);
    cov.noalias() -= v.transpose() * v;
  }
  cov = 0.5 * (cov + cov.transpose());
  return Mvn(std::move(mean), std::move(cov), kJitterStart);
}

double gp_mll(const GpModel& model, const TaskDataset& data) {
  if (data.empty()) throw EmptyData("gp_mll: empty dataset");
  Matrix k = model.kernel(data.x, data.x);
  k.diagonal().array() += model.noise_var();
  return mvn_logpdf(Mvn(model.mean(data.x), std::move(k)), data.y);
}

Mvn gp_posterior(const GpModel& model, const TaskDataset& train, const Matrix& query) {
  if (query.rows() == 0) throw DimensionMismatch("gp_posterior: empty query");
  return ConditionedGp(model, train).joint(query);
}

}  // namespace fpacoh
