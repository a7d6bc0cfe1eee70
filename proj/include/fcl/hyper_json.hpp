#pragma once

#include <json.hpp>

#include "fcl/lifelong_engine.hpp"

namespace fcl::lifelong_engine {

/// Missing keys keep their defaults; unknown keys are rejected so typos in
/// experiment configs fail loudly.
void to_json(nlohmann::json& j, const HyperParams& hp);
void from_json(const nlohmann::json& j, HyperParams& hp);

}  // namespace fcl::lifelong_engine
