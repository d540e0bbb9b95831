// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/adamw.hpp"

#include <cmath>

namespace fpacoh {

AdamW::AdamW(AdamWConfig config, Eigen::Index num_params)
    : config_(config), m_(Vector::Zero(num_params)), v_(Vector::Zero(num_params)) {
  if (!(config_.lr > 0.0)) throw Error("AdamW: learning rate must be positive");
  if (config_.decay_every < 1) throw Error("AdamW: decay_every must be >= 1");
}

double AdamW::current_lr() const {
  return config_.lr * std::pow(config_.lr_decay, static_cast<double>(step_ / config_.decay_every));
}

void AdamW::step(Vector& params, const Vector& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size()) {
    throw DimensionMismatch("AdamW::step: parameter/gradient length differs from optimizer state");
  }
  if (!grad.allFinite()) throw NonFiniteGradient("AdamW::step: gradient contains NaN or inf");
  const double lr = current_lr();
  ++step_;
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  m_ = b1 * m_ + (1.0 - b1) * grad;
  v_ = b2 * v_ + (1.0 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
  const Vector update = (m_ / c1).array() / ((v_ / c2).array().sqrt() + config_.eps);
  params -= lr * (update + config_.weight_decay * params);
}

}  // namespace fpacoh
