#pragma once

#include <cstdint>
#include <string>

#include <nlohmann/json.hpp>

#include "ldpfl/simulator.hpp"

namespace ldpfl {

// Parses the documented experiment-config schema. Unknown keys are hard
// errors; violations name the offending field path.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);

// Canonical JSON re-serialization of the parsed config: semantically equal
// configs hash equal regardless of key order in the source file.
nlohmann::json canonical_config(const ExperimentConfig& cfg);

// FNV-1a over the canonical dump, hex-encoded.
std::string config_hash(const ExperimentConfig& cfg);

std::string protocol_name(Protocol p);
std::string rule_name(AggregationRule r);
std::string attack_name(const AttackPlan& plan);

}  // namespace ldpfl
