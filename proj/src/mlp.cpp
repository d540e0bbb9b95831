// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/mlp.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace fpacoh {
namespace {

struct Layer {
  int fan_in;
  int fan_out;
  bool activation;
};

std::vector<Layer> layers_of(const MlpSpec& spec) {
  std::vector<Layer> layers;
  int width = spec.input_dim;
  for (int i = 0; i < spec.hidden_layers; ++i) {
    layers.push_back({width, spec.hidden_width, true});
    width = spec.hidden_width;
  }
  layers.push_back({width, spec.output_dim, false});
  return layers;
}

}  // namespace

Eigen::Index MlpSpec::param_count() const {
  Eigen::Index n = 0;
  for (const Layer& l : layers_of(*this)) n += static_cast<Eigen::Index>(l.fan_in + 1) * l.fan_out;
  return n;
}

void MlpSpec::validate() const {
  if (input_dim < 1 || output_dim < 1 || hidden_layers < 0 || (hidden_layers > 0 && hidden_width < 1)) {
    throw DimensionMismatch("MlpSpec: dimensions must be positive");
  }
}

Matrix mlp_forward(const MlpSpec& spec, std::span<const double> params, const Matrix& inputs) {
  spec.validate();
  if (static_cast<Eigen::Index>(params.size()) != spec.param_count()) {
    throw DimensionMismatch("mlp_forward: expected " + std::to_string(spec.param_count()) + " parameters, got " +
                            std::to_string(params.size()));
  }
  if (inputs.cols() != spec.input_dim) {
    throw DimensionMismatch("mlp_forward: inputs have " + std::to_string(inputs.cols()) + " columns, expected " +
                            std::to_string(spec.input_dim));
  }
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix h = inputs;
  std::size_t offset = 0;
  for (const Layer& l : layers_of(spec)) {
    Eigen::Map<const RowMajor> w(params.data() + offset, l.fan_in, l.fan_out);
    offset += static_cast<std::size_t>(l.fan_in) * l.fan_out;
    Eigen::Map<const Eigen::RowVectorXd> b(params.data() + offset, l.fan_out);
    offset += static_cast<std::size_t>(l.fan_out);
    Matrix z = h * w;
    z.rowwise() += b;
    h = l.activation ? Matrix(z.array().tanh().matrix()) : z;
  }
  return h;
}

ad::Var mlp_forward(const MlpSpec& spec, ad::Tape& tape, Eigen::Index offset, const ad::Var& inputs) {
  spec.validate();
  if (inputs.cols() != spec.input_dim) throw DimensionMismatch("mlp_forward: input width differs from spec");
  ad::Var h = inputs;
  for (const Layer& l : layers_of(spec)) {
    ad::Var w = tape.param(offset, l.fan_in, l.fan_out);
    offset += static_cast<Eigen::Index>(l.fan_in) * l.fan_out;
    ad::Var b = tape.param(offset, 1, l.fan_out);
    offset += l.fan_out;
    h = ad::add_row(ad::matmul(h, w), b);
    if (l.activation) h = ad::tanh(h);
  }
  return h;
}

Vector mlp_init(const MlpSpec& spec, std::mt19937_64& rng) {
  spec.validate();
  Vector params = Vector::Zero(spec.param_count());
  Eigen::Index offset = 0;
  for (const Layer& l : layers_of(spec)) {
    const double limit = std::sqrt(6.0 / static_cast<double>(l.fan_in + l.fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(l.fan_in) * l.fan_out; ++k) params(offset + k) = dist(rng);
    offset += static_cast<Eigen::Index>(l.fan_in + 1) * l.fan_out;
  }
  return params;
}

}  // namespace fpacoh
