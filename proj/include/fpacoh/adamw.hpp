// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fpacoh/linalg.hpp"

namespace fpacoh {

struct AdamWConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double lr_decay = 0.97;   // multiplied into lr after every `decay_every` steps
  int decay_every = 1000;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// AdamW with decoupled weight decay and a step-wise learning-rate decay.
class AdamW {
 public:
  AdamW(AdamWConfig config, Eigen::Index num_params);

  /// Applies one update in place. Throws NonFiniteGradient if grad has NaN/inf.
  void step(Vector& params, const Vector& grad);

  /// Learning rate the next call to step() will use.
  double current_lr() const;
  long steps_taken() const { return step_; }
  const AdamWConfig& config() const { return config_; }
  const Vector& first_moment() const { return m_; }
  const Vector& second_moment() const { return v_; }

 private:
  AdamWConfig config_;
  long step_ = 0;
  Vector m_;
  Vector v_;
};

}  // namespace fpacoh
