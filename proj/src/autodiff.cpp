// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/autodiff.hpp"

#include <string>

namespace fpacoh::ad {
namespace {

Tape& tape_of(const Var& a) {
  if (a.tape() == nullptr) throw GraphError("operation on an unbound Var");
  return *a.tape();
}

Tape& common_tape(const Var& a, const Var& b) {
  if (a.tape() != b.tape()) throw GraphError("operands recorded on different tapes");
  return tape_of(a);
}

void require_shape(bool ok, const char* op, const Var& a, const Var& b) {
  if (!ok) {
    throw DimensionMismatch(std::string(op) + ": incompatible shapes " + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()));
  }
}

void require_scalar(const Var& s, const char* op) {
  if (s.rows() != 1 || s.cols() != 1) throw DimensionMismatch(std::string(op) + ": expected a 1x1 node");
}

}  // namespace

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw GraphError("value() of an unbound Var");
  return tape_->value(id_);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw DimensionMismatch("scalar() of a non-scalar node");
  return v(0, 0);
}

Tape::Tape(Vector params) : params_(std::move(params)) {}

Var Tape::param(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols) {
  if (offset < 0 || rows < 1 || cols < 1 || offset + rows * cols > params_.size()) {
    throw DimensionMismatch("Tape::param: block [" + std::to_string(offset) + ", +" +
                            std::to_string(rows * cols) + ") outside parameter vector of length " +
                            std::to_string(params_.size()));
  }
  Node node;
  node.value.resize(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) node.value(r, c) = params_(offset + r * cols + c);
  }
  node.needs_grad = true;
  node.param_offset = offset;
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Matrix value) {
  Node node;
  node.value = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::record(Matrix value, std::vector<Var> parents, Backward backward) {
  Node node;
  node.value = std::move(value);
  node.backward = std::move(backward);
  for (const Var& p : parents) {
    if (p.tape() != this) throw GraphError("parent recorded on a different tape");
    node.parents.push_back(p.id());
    node.needs_grad = node.needs_grad || nodes_[static_cast<std::size_t>(p.id())].needs_grad;
  }
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Vector Tape::gradient(const Var& loss) {
  if (loss.tape() != this) throw GraphError("loss recorded on a different tape");
  const auto root = static_cast<std::size_t>(loss.id());
  if (nodes_[root].value.size() != 1) throw GraphError("gradient requires a scalar loss");
  if (!nodes_[root].needs_grad) throw GraphError("loss does not depend on any parameter");

  std::vector<Matrix> grads(root + 1);
  grads[root] = Matrix::Ones(1, 1);
  Vector out = Vector::Zero(params_.size());
  std::vector<Matrix*> slots;

  for (std::size_t i = root + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.needs_grad || grads[i].size() == 0) continue;
    if (node.param_offset >= 0) {
      const Eigen::Index cols = node.value.cols();
      for (Eigen::Index r = 0; r < node.value.rows(); ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) out(node.param_offset + r * cols + c) += grads[i](r, c);
      }
      continue;
    }
    if (!node.backward) continue;
    slots.assign(node.parents.size(), nullptr);
    for (std::size_t k = 0; k < node.parents.size(); ++k) {
      const auto p = static_cast<std::size_t>(node.parents[k]);
      if (!nodes_[p].needs_grad) continue;
      if (grads[p].size() == 0) grads[p] = Matrix::Zero(nodes_[p].value.rows(), nodes_[p].value.cols());
      slots[k] = &grads[p];
    }
    node.backward(grads[i], slots);
    grads[i].resize(0, 0);
  }
  return out;
}

Var matmul(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_shape(a.cols() == b.rows(), "matmul", a, b);
  Matrix av = a.value();
  Matrix bv = b.value();
  Matrix out = av * bv;
  return t.record(std::move(out), {a, b}, [av, bv](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) pg[0]->noalias() += g * bv.transpose();
    if (pg[1]) pg[1]->noalias() += av.transpose() * g;
  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "add", a, b);
  return t.record(a.value() + b.value(), {a, b}, [](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) *pg[1] += g;
  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_shape(a.rows() == b.rows() && a.cols() == b.cols(), "sub", a, b);
  return t.record(a.value() - b.value(), {a, b}, [](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) *pg[1] -= g;
  });
}

Var add_row(const Var& a, const Var& row) {
  Tape& t = common_tape(a, row);
  require_shape(row.rows() == 1 && row.cols() == a.cols(), "add_row", a, row);
  Matrix out = a.value().rowwise() + row.value().row(0);
  return t.record(std::move(out), {a, row}, [](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) *pg[1] += g.colwise().sum();
  });
}

Var tanh(const Var& a) {
  Matrix out = a.value().array().tanh().matrix();
  Matrix y = out;
  return tape_of(a).record(std::move(out), {a}, [y](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) pg[0]->array() += g.array() * (1.0 - y.array().square());
  });
}

Var exp(const Var& a) {
  Matrix out = a.value().array().exp().matrix();
  Matrix y = out;
  return tape_of(a).record(std::move(out), {a}, [y](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) pg[0]->array() += g.array() * y.array();
  });
}

Var scale(const Var& a, const Var& s) {
  Tape& t = common_tape(a, s);
  require_scalar(s, "scale");
  const double sv = s.scalar();
  Matrix av = a.value();
  Matrix out = sv * av;
  return t.record(std::move(out), {a, s}, [av, sv](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += sv * g;
    if (pg[1]) (*pg[1])(0, 0) += (g.array() * av.array()).sum();
  });
}

Var scale(const Var& a, double c) {
  return tape_of(a).record(c * a.value(), {a}, [c](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += c * g;
  });
}

Var add_diag(const Var& a, const Var& s) {
  Tape& t = common_tape(a, s);
  require_scalar(s, "add_diag");
  if (a.rows() != a.cols()) throw DimensionMismatch("add_diag: expected a square matrix");
  Matrix out = a.value();
  out.diagonal().array() += s.scalar();
  return t.record(std::move(out), {a, s}, [](const Matrix& g, std::vector<Matrix*>& pg) {
    if (pg[0]) *pg[0] += g;
    if (pg[1]) (*pg[1])(0, 0) += g.trace();
  });
}

Var sq_dist(const Var& a, const Var& b) {
  Tape& t = common_tape(a, b);
  require_shape(a.cols() == b.cols(), "sq_dist", a, b);
  Matrix av = a.value();
  Matrix bv = b.value();
  Matrix out(av.rows(), bv.rows());
  for (Eigen::Index i = 0; i < av.rows(); ++i) {
    for (Eigen::Index j = 0; j < bv.rows(); ++j) out(i, j) = (av.row(i) - bv.row(j)).squaredNorm();
  }
  return t.record(std::move(out), {a, b}, [av, bv](const Matrix& g, std::vector<Matrix*>& pg) {
    // d/da_i = sum_j 2 g_ij (a_i - b_j);  d/db_j = sum_i 2 g_ij (b_j - a_i)
    const Vector row_sums = g.rowwise().sum();
    const Vector col_sums = g.colwise().sum().transpose();
    if (pg[0]) pg[0]->noalias() += 2.0 * (row_sums.asDiagonal() * av - g * bv);
    if (pg[1]) pg[1]->noalias() += 2.0 * (col_sums.asDiagonal() * bv - g.transpose() * av);
  });
}

Var sum(const Var& a) {
  const Eigen::Index r = a.rows();
  const Eigen::Index c = a.cols();
  return tape_of(a).record(Matrix::Constant(1, 1, a.value().sum()), {a},
                           [r, c](const Matrix& g, std::vector<Matrix*>& pg) {
                             if (pg[0]) pg[0]->array() += g(0, 0) * Matrix::Ones(r, c).array();
                           });
}

Var squared_norm(const Var& a) {
  Matrix av = a.value();
  return tape_of(a).record(Matrix::Constant(1, 1, av.squaredNorm()), {a},
                           [av](const Matrix& g, std::vector<Matrix*>& pg) {
                             if (pg[0]) *pg[0] += 2.0 * g(0, 0) * av;
                           });
}

Var gaussian_logpdf(const Vector& y, const Var& mean, const Var& cov, double jitter) {
  Tape& t = common_tape(mean, cov);
  if (mean.cols() != 1 || mean.rows() != y.size() || cov.rows() != y.size() || cov.cols() != y.size()) {
    throw DimensionMismatch("gaussian_logpdf: observation, mean and covariance sizes disagree");
  }
  const auto factor = cholesky_with_jitter(cov.value(), jitter);
  const Vector resid = y - mean.value().col(0);
  Vector alpha = chol_solve(factor.lower, resid);
  const double value = -0.5 * resid.dot(alpha) - 0.5 * chol_logdet(factor.lower) -
                       0.5 * static_cast<double>(y.size()) * kLog2Pi;
  Matrix lower = factor.lower;
  return t.record(Matrix::Constant(1, 1, value), {mean, cov},
                  [alpha, lower](const Matrix& g, std::vector<Matrix*>& pg) {
                    const double s = g(0, 0);
                    if (pg[0]) pg[0]->col(0) += s * alpha;
                    if (pg[1]) *pg[1] += 0.5 * s * (alpha * alpha.transpose() - chol_inverse(lower));
                  });
}

Var kl_to_fixed(const Var& mean, const Var& cov, const Mvn& q, double jitter) {
  Tape& t = common_tape(mean, cov);
  const Eigen::Index dim = q.dim();
  if (mean.cols() != 1 || mean.rows() != dim || cov.rows() != dim || cov.cols() != dim) {
    throw DimensionMismatch("kl_to_fixed: prior and reference dimensions disagree");
  }
  const auto factor = cholesky_with_jitter(cov.value(), jitter);
  const Matrix& lq = q.chol();
  const Matrix a = lq.triangularView<Eigen::Lower>().solve(factor.lower);
  const Vector diff = mean.value().col(0) - q.mean();
  const Vector b = lq.triangularView<Eigen::Lower>().solve(diff);
  const double value = 0.5 * (a.squaredNorm() + b.squaredNorm() - static_cast<double>(dim) + chol_logdet(lq) -
                              chol_logdet(factor.lower));
  Matrix kq_inv = chol_inverse(lq);
  Vector kq_inv_diff = kq_inv * diff;
  Matrix lower = factor.lower;
  return t.record(Matrix::Constant(1, 1, value), {mean, cov},
                  [kq_inv, kq_inv_diff, lower](const Matrix& g, std::vector<Matrix*>& pg) {
                    const double s = g(0, 0);
                    if (pg[0]) pg[0]->col(0) += s * kq_inv_diff;
                    if (pg[1]) *pg[1] += 0.5 * s * (kq_inv - chol_inverse(lower));
                  });
}

}  // namespace fpacoh::ad
