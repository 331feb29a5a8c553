#pragma once

#include "sim/harness.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace sim {

/// Parses a JSON config into a SimConfig. Required keys: M, K, steps, seed,
/// rule. Everything else is defaulted (N=1000, eta=0.005, dropout p=0.5,
/// window=N, sample_every=N, ...). Unknown keys are rejected by name.
SimConfig parse_config(const std::string& text);
SimConfig parse_config_json(const nlohmann::json& doc);

nlohmann::json config_to_json(const SimConfig& cfg);

/// Applies one dotted-path override, e.g. "rule.dropout.p" = "0.5". The value
/// is parsed as JSON when possible, otherwise taken as a string. Intermediate
/// non-objects along the path are replaced.
void apply_override(nlohmann::json& doc, const std::string& key_path, const std::string& value);

/// Splits "key=value" and applies it.
void apply_override_expr(nlohmann::json& doc, const std::string& expr);

/// Reads the file, applies overrides, parses. Unreadable or invalid files
/// raise ConfigError.
SimConfig load_config_file(const std::string& path, const std::vector<std::string>& overrides);
nlohmann::json load_config_doc(const std::string& path, const std::vector<std::string>& overrides);

nlohmann::json summary_to_json(const RunSummary& summary, const SimConfig& cfg);
nlohmann::json compare_to_json(const CompareReport& report);
nlohmann::json verify_to_json(const VerifyReport& report);

} // namespace sim
