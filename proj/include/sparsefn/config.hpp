#pragma once

#include <string>

#include <json.hpp>

#include "sparsefn/sim.hpp"

namespace sparsefn {

inline constexpr int schema_version = 1;

/// Parses and validates an experiment config. Unknown keys, type mismatches
/// and constraint violations raise InputError naming the offending path,
/// e.g. "loading.kind". Support indices in the file are 1-based.
SimConfig parse_config(const std::string& text);
SimConfig config_from_json(const nlohmann::json& j);

/// Canonical JSON with every field present (defaults filled in).
nlohmann::json config_to_json(const SimConfig& config);
std::string serialize_config(const SimConfig& config);

/// FNV-1a of the canonical serialization, as 16 hex digits.
std::string config_hash(const SimConfig& config);

}  // namespace sparsefn
