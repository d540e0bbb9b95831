// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <span>

#include "fpacoh/autodiff.hpp"
#include "fpacoh/linalg.hpp"

namespace fpacoh {

/// Fully connected network: `hidden_layers` tanh layers of `hidden_width`
/// units followed by a linear output layer.
///
/// Parameters are stored layer by layer as a row-major fan_in x fan_out
/// weight block followed by a fan_out bias block, so a batch of inputs
/// (one row per point) maps through `X * W + b`.
struct MlpSpec {
  int input_dim = 1;
  int hidden_layers = 3;
  int hidden_width = 32;
  int output_dim = 1;

  Eigen::Index param_count() const;
  void validate() const;
  bool operator==(const MlpSpec&) const = default;
};

/// Plain forward pass; `params` must hold exactly `spec.param_count()` values.
Matrix mlp_forward(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs);

/// Forward pass recorded on a tape; the network parameters start at `offset`.
ad::Var mlp_forward(const MlpSpec& spec, ad::Tape& tape, Eigen::Index offset, const ad::Var& inputs);

/// Glorot-uniform weights, zero biases.
Vector mlp_init(const MlpSpec& spec, std::mt19937_64& rng);

}  // namespace fpacoh
