#pragma once

#include <string>

#include <json.hpp>

#include "adbs/harness.hpp"

namespace adbs {

// Reads a RunConfig from a JSON tree. Missing keys keep their defaults;
// unknown keys and ill-typed values are rejected with the offending key path.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

nlohmann::json to_json(const RunConfig& config);
nlohmann::json to_json(const PolicyConfig& config);
nlohmann::json to_json(const EnvConfig& config);

std::string to_string(CovarianceChoice c);
CovarianceChoice covariance_choice_from_string(const std::string& s);

// "3" -> {3}; "0..9" -> {0, ..., 9}; "1,4,7" -> {1, 4, 7}.
std::vector<std::uint64_t> parse_seed_list(const std::string& text);

}  // namespace adbs
