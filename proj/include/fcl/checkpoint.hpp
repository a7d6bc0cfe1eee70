#pragma once

#include <filesystem>
#include <string>

#include "fcl/lifelong_engine.hpp"

namespace fcl::checkpoint {

// JSON text: {"format", "d", "p", "T", "decoder", "encoder", "acc_A", "acc_b",
// "acc_M", "acc_C", "representatives", "per_task", "config", ...}. Matrices
// are {"rows", "cols", "data"} with column-major data. Doubles are written
// in shortest round-trip form (at most 17 significant digits), so a save /
// load cycle is bit-exact.
inline constexpr const char* kFormat = "fcl3-checkpoint-v1";

std::string to_text(const lifelong_engine::EngineState& state);
lifelong_engine::EngineState from_text(const std::string& text);

void save(const lifelong_engine::EngineState& state, const std::filesystem::path& path);
lifelong_engine::EngineState load(const std::filesystem::path& path);

}  // namespace fcl::checkpoint
