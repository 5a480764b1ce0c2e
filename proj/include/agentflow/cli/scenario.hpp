#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/sim/config.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::cli {

/// A parameter sweep: every value of `parameter` (a dotted config path) is
/// run once per seed.
struct Sweep {
  std::string parameter;
  std::vector<Json> values;
  std::vector<std::uint64_t> seeds;
};

/// A scenario file: a partial SimConfig plus an optional "sweep" block.
struct Scenario {
  Json config = Json::object();
  std::optional<Sweep> sweep;

  /// Validated config for one point. Throws ConfigError.
  sim::SimConfig at(const Json* value, std::optional<std::uint64_t> seed) const;
  sim::SimConfig base() const { return at(nullptr, std::nullopt); }
};

namespace detail {

inline std::vector<std::string> split_path(const std::string& dotted) {
  std::vector<std::string> parts;
  std::string cur;
  for (char ch : dotted) {
    if (ch == '.') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  parts.push_back(cur);
  return parts;
}

// Writes `value` at a dotted path, creating intermediate objects. Key
// validity is left to config_from_json.
inline void set_path(Json& root, const std::string& dotted, Json value) {
  auto parts = split_path(dotted);
  for (const auto& p : parts)
    if (p.empty()) throw ConfigError("'" + dotted + "': empty path component");
  Json* node = &root;
  for (std::size_t i = 0; i + 1 < parts.size(); ++i) {
    Json& next = (*node)[parts[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw ConfigError("'" + dotted + "': " + parts[i] + " is not an object");
    node = &next;
  }
  (*node)[parts.back()] = std::move(value);
}

}  // namespace detail

inline sim::SimConfig Scenario::at(const Json* value, std::optional<std::uint64_t> seed) const {
  Json patch = config;
  if (value) detail::set_path(patch, sweep ? sweep->parameter : std::string(), *value);
  if (seed) patch["seed"] = *seed;
  return sim::config_from_json(patch);
}

/// Parses the right-hand side of an override: JSON when it parses as JSON,
/// a plain string otherwise (so trace_level=full needs no quotes).
inline Json parse_override_value(const std::string& text) {
  Json v = Json::parse(text, nullptr, false);
  if (v.is_discarded()) return Json(text);
  return v;
}

/// Applies "a.b=value" to the scenario config.
inline void apply_override(Scenario& s, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError("override '" + assignment + "': expected key=value");
  detail::set_path(s.config, assignment.substr(0, eq), parse_override_value(assignment.substr(eq + 1)));
}

inline Sweep parse_sweep(const Json& j, std::uint64_t base_seed) {
  std::vector<std::string> errors;
  Sweep s;
  if (!j.is_object()) throw ConfigError("sweep: expected an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (it.key() != "parameter" && it.key() != "values" && it.key() != "seeds")
      errors.push_back("sweep." + it.key() + ": unknown key");

  if (!j.contains("parameter") || !j["parameter"].is_string() || j["parameter"].get<std::string>().empty())
    errors.push_back("sweep.parameter: expected a non-empty string");
  else
    s.parameter = j["parameter"].get<std::string>();
  if (s.parameter == "seed") errors.push_back("sweep.parameter: use sweep.seeds to vary the seed");

  if (!j.contains("values") || !j["values"].is_array())
    errors.push_back("sweep.values: expected an array");
  else if (j["values"].empty())
    errors.push_back("sweep.values: must not be empty");
  else
    s.values.assign(j["values"].begin(), j["values"].end());

  // "seeds": N means N consecutive seeds from the config seed.
  if (!j.contains("seeds")) {
    s.seeds = {base_seed};
  } else if (const Json& sd = j["seeds"]; sd.is_number_unsigned() || sd.is_number_integer()) {
    long long n = sd.get<long long>();
    if (n <= 0) errors.push_back("sweep.seeds: count must be positive");
    for (long long i = 0; i < n; ++i) s.seeds.push_back(base_seed + static_cast<std::uint64_t>(i));
  } else if (sd.is_array() && !sd.empty()) {
    for (const auto& v : sd) {
      if (!v.is_number_integer() || v.get<long long>() < 0) {
        errors.push_back("sweep.seeds: entries must be non-negative integers");
        break;
      }
      s.seeds.push_back(v.get<std::uint64_t>());
    }
  } else {
    errors.push_back("sweep.seeds: expected a positive count or a non-empty array");
  }

  if (!errors.empty()) {
    std::string msg = "invalid sweep";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return s;
}

/// Parses scenario JSON text. The base config is validated eagerly so that
/// errors surface before anything runs.
inline Scenario parse_scenario(const std::string& text, const std::vector<std::string>& overrides = {}) {
  Json j = Json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ConfigError("scenario is not valid JSON");
  if (!j.is_object()) throw ConfigError("scenario: expected a JSON object");
  Scenario s;
  Json sweep_block;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it.key() == "sweep")
      sweep_block = it.value();
    else
      s.config[it.key()] = it.value();
  }
  for (const auto& o : overrides) apply_override(s, o);
  sim::SimConfig base = s.base();
  if (!sweep_block.is_null()) s.sweep = parse_sweep(sweep_block, base.seed);
  return s;
}

inline Scenario load_scenario(const std::filesystem::path& path, const std::vector<std::string>& overrides = {}) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scenario '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_scenario(ss.str(), overrides);
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

}  // namespace agentflow::cli
