// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <vector>

#include "fpacoh/linalg.hpp"

namespace fpacoh::ad {

class Tape;

/// Handle to a matrix-valued node recorded on a Tape.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  double scalar() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  Tape* tape() const { return tape_; }
  int id() const { return id_; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode tape over a flat parameter vector.
///
/// Parameter blocks are row-major views into the flat vector; `gradient`
/// returns d(loss)/d(params) with the same layout. A tape is single-use and
/// not thread-safe; build one per loss evaluation.
class Tape {
 public:
  /// Receives the gradient of the node and one (possibly null) slot per parent.
  using Backward = std::function<void(const Matrix& grad, std::vector<Matrix*>& parent_grads)>;

  explicit Tape(Vector params);

  const Vector& params() const { return params_; }

  /// rows x cols block of the parameter vector starting at `offset`.
  Var param(Eigen::Index offset, Eigen::Index rows, Eigen::Index cols);
  Var constant(Matrix value);
  Var constant(double value);

  /// Records an op node. `backward` may be empty for nodes without parents.
  Var record(Matrix value, std::vector<Var> parents, Backward backward);

  /// Gradient of a 1x1 node with respect to the parameter vector.
  /// Throws GraphError if the node is not scalar or does not depend on any parameter.
  Vector gradient(const Var& loss);

  const Matrix& value(int id) const { return nodes_[static_cast<std::size_t>(id)].value; }
  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    std::vector<int> parents;
    Backward backward;
    bool needs_grad = false;
    Eigen::Index param_offset = -1;
  };

  Vector params_;
  std::vector<Node> nodes_;
};

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// a + 1*row, broadcasting a 1 x cols row vector over every row of a.
Var add_row(const Var& a, const Var& row);
Var tanh(const Var& a);
Var exp(const Var& a);
/// s * a for a 1x1 node s.
Var scale(const Var& a, const Var& s);
Var scale(const Var& a, double c);
/// a + s*I for a square a and a 1x1 node s.
Var add_diag(const Var& a, const Var& s);
/// Pairwise squared Euclidean distances between the rows of a and b.
Var sq_dist(const Var& a, const Var& b);
Var sum(const Var& a);
Var squared_norm(const Var& a);

/// Gaussian log-density ln N(y; mean, cov) with mean a column node and cov a square node.
/// The covariance is factorized with the library jitter policy starting at `jitter`.
Var gaussian_logpdf(const Vector& y, const Var& mean, const Var& cov, double jitter = 0.0);

/// KL(N(mean, cov) || q) for a fixed reference distribution q.
Var kl_to_fixed(const Var& mean, const Var& cov, const Mvn& q, double jitter = 0.0);

}  // namespace fpacoh::ad
