// SPDX-License-Identifier: Apache-2.0
#include "fpacoh/checkpoint.hpp"

#include <fstream>
#include <sstream>

#include "fpacoh/errors.hpp"
#include "json.hpp"

namespace fpacoh {
namespace {

using nlohmann::json;

json spec_json(const MlpSpec& s) {
  return {{"input_dim", s.input_dim},
          {"hidden_layers", s.hidden_layers},
          {"hidden_width", s.hidden_width},
          {"output_dim", s.output_dim}};
}

MlpSpec spec_from(const json& j) {
  MlpSpec s;
  s.input_dim = j.at("input_dim").get<int>();
  s.hidden_layers = j.at("hidden_layers").get<int>();
  s.hidden_width = j.at("hidden_width").get<int>();
  s.output_dim = j.at("output_dim").get<int>();
  return s;
}

std::vector<double> to_vec(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_vec(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

std::string prior_to_json(const GpPrior& prior) {
  const auto& st = prior.standardizer();
  json j;
  j["format"] = "fpacoh-prior";
  j["version"] = 1;
  j["mean_net"] = spec_json(prior.layout().mean_spec());
  j["feature_net"] = spec_json(prior.layout().feature_spec());
  j["params"] = to_vec(prior.params());
  j["standardizer"] = {{"x_mean", to_vec(st.x_mean)},
                       {"x_std", to_vec(st.x_std)},
                       {"y_mean", st.y_mean},
                       {"y_std", st.y_std}};
  return j.dump(1);
}

GpPrior prior_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != "fpacoh-prior") throw SchemaError("checkpoint: wrong format tag");
    PriorLayout layout(spec_from(j.at("mean_net")), spec_from(j.at("feature_net")));
    Vector params = from_vec(j.at("params").get<std::vector<double>>());
    if (params.size() != layout.size()) throw SchemaError("checkpoint: parameter count does not match the specs");
    const auto& js = j.at("standardizer");
    Standardizer st;
    st.x_mean = from_vec(js.at("x_mean").get<std::vector<double>>());
    st.x_std = from_vec(js.at("x_std").get<std::vector<double>>());
    st.y_mean = js.at("y_mean").get<double>();
    st.y_std = js.at("y_std").get<double>();
    if (st.x_mean.size() != layout.input_dim() || st.x_std.size() != layout.input_dim()) {
      throw SchemaError("checkpoint: standardizer dimension does not match");
    }
    return GpPrior(std::move(layout), std::move(params), std::move(st));
  } catch (const json::exception& e) {
    throw SchemaError(std::string("checkpoint: ") + e.what());
  }
}

void save_prior(const GpPrior& prior, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path + "'");
  out << prior_to_json(prior) << '\n';
}

GpPrior load_prior(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return prior_from_json(ss.str());
}

}  // namespace fpacoh
