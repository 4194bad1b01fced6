#pragma once

// nlohmann::json conversions for the library's value types.

#include <json.hpp>

#include "tinder/metrics.hpp"
#include "tinder/mixture.hpp"
#include "tinder/optimizer.hpp"

namespace tinder {

void to_json(nlohmann::json& j, const Matrix& m);
void from_json(const nlohmann::json& j, Matrix& m);

void to_json(nlohmann::json& j, const MixtureParams& p);
void from_json(const nlohmann::json& j, MixtureParams& p);

void to_json(nlohmann::json& j, const BetaPolicy& b);
void from_json(const nlohmann::json& j, BetaPolicy& b);

void to_json(nlohmann::json& j, const FitConfig& c);
void from_json(const nlohmann::json& j, FitConfig& c);

}  // namespace tinder
