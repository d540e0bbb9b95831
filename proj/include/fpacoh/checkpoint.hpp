// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include "fpacoh/gp_prior.hpp"

namespace fpacoh {

/// JSON form of a prior: network specs, flat parameters and standardizer.
std::string prior_to_json(const GpPrior& prior);
GpPrior prior_from_json(const std::string& text);

void save_prior(const GpPrior& prior, const std::string& path);
/// Throws SchemaError for malformed files.
GpPrior load_prior(const std::string& path);

}  // namespace fpacoh
