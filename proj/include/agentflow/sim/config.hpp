#pragma once

#include <algorithm>
#include <cmath>
#include <type_traits>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/messaging/network.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::sim {

/// Scripted crash of a controller ("ctrl-003") or an edge node ("edge-02").
struct ScriptedFailure {
  Tick tick = 0;
  std::string node;
};

struct FaultPlan {
  double controller_failure_fraction = 0.20;
  double edge_failure_fraction = 0.0;
  int n_edge_nodes = 0;  // 0: one edge node per controller
  // Random failures fall uniformly in [start, end) x duration.
  double window_start = 0.2;
  double window_end = 0.8;
  std::vector<ScriptedFailure> scripted;
};

struct ElectionParams {
  Tick window_ticks = 20;
  Tick heartbeat_interval = 5;
  int misses_allowed = 3;
  Tick dispatch_timeout_ticks = 40;
  int dispatch_retries = 1;
  Tick empty_retry_ticks = 100;
};

struct ClientParams {
  Tick timeout_ticks = 250;
  int max_retries = 2;
  Tick backoff_ticks = 50;
};

struct MetricsParams {
  // Length of the pre/post failure throughput windows; 0 picks 15% of the
  // generation period.
  Tick throughput_window_ticks = 0;
};

struct SimConfig {
  int n_amrs = 300;
  int n_controllers = 21;
  int amrs_per_zone = 50;
  double task_rate_per_min = 600.0;
  Tick duration_ticks = 120'000;
  Tick drain_ticks = 60'000;
  int ticks_per_second = 1000;
  std::uint64_t seed = 1;
  double work_units = 1.0;
  double controller_capacity = 0.0005;  // work units per tick
  NetworkModel network;
  FaultPlan faults;
  ElectionParams election;
  ClientParams client;
  MetricsParams metrics;
  TraceLevel trace_level = TraceLevel::Coordination;

  int n_zones() const { return (n_amrs + amrs_per_zone - 1) / amrs_per_zone; }
  int n_edge_nodes() const { return faults.n_edge_nodes > 0 ? faults.n_edge_nodes : n_controllers; }

  Tick throughput_window() const {
    if (metrics.throughput_window_ticks > 0) return metrics.throughput_window_ticks;
    return std::max<Tick>(1, static_cast<Tick>(std::llround(0.15 * static_cast<double>(duration_ticks))));
  }

  /// All problems at once, one per line, each prefixed with its key.
  std::vector<std::string> diagnostics() const {
    std::vector<std::string> out;
    auto need = [&](bool ok, const char* key, const char* what) {
      if (!ok) out.push_back(std::string(key) + ": " + what);
    };
    auto fraction = [](double v) { return v >= 0.0 && v <= 1.0; };
    need(n_amrs > 0, "n_amrs", "must be positive");
    need(n_controllers > 0, "n_controllers", "must be positive");
    need(amrs_per_zone > 0, "amrs_per_zone", "must be positive");
    if (n_amrs > 0 && amrs_per_zone > 0 && n_controllers > 0)
      need(n_controllers >= n_zones(), "n_controllers", "must be at least the number of zones");
    need(task_rate_per_min >= 0.0 && std::isfinite(task_rate_per_min), "task_rate_per_min",
         "must be non-negative");
    need(duration_ticks > 0, "duration_ticks", "must be positive");
    need(drain_ticks >= 0, "drain_ticks", "must be non-negative");
    need(ticks_per_second > 0, "ticks_per_second", "must be positive");
    need(work_units > 0.0 && std::isfinite(work_units), "work_units", "must be positive");
    need(controller_capacity > 0.0 && std::isfinite(controller_capacity), "controller_capacity",
         "must be positive");
    try {
      network.validate();
    } catch (const InvalidNetworkModel& e) {
      out.push_back(std::string("network: ") + e.what());
    }
    need(fraction(faults.controller_failure_fraction), "faults.controller_failure_fraction",
         "must lie in [0, 1]");
    need(fraction(faults.edge_failure_fraction), "faults.edge_failure_fraction", "must lie in [0, 1]");
    need(faults.n_edge_nodes >= 0, "faults.n_edge_nodes", "must be non-negative");
    need(fraction(faults.window_start) && fraction(faults.window_end) &&
             faults.window_start <= faults.window_end,
         "faults.window_start", "window must satisfy 0 <= start <= end <= 1");
    for (const auto& f : faults.scripted) {
      if (f.tick < 0) out.push_back("faults.scripted: tick must be non-negative");
      if (!scripted_node_exists(f.node))
        out.push_back("faults.scripted: unknown node '" + f.node + "'");
    }
    need(election.window_ticks > 0, "election.window_ticks", "must be positive");
    need(election.heartbeat_interval > 0, "election.heartbeat_interval", "must be positive");
    need(election.misses_allowed > 0, "election.misses_allowed", "must be positive");
    need(election.dispatch_timeout_ticks > 0, "election.dispatch_timeout_ticks", "must be positive");
    need(election.dispatch_retries >= 0, "election.dispatch_retries", "must be non-negative");
    need(election.empty_retry_ticks > 0, "election.empty_retry_ticks", "must be positive");
    need(client.timeout_ticks > 0, "client.timeout_ticks", "must be positive");
    need(client.max_retries >= 0, "client.max_retries", "must be non-negative");
    need(client.backoff_ticks >= 0, "client.backoff_ticks", "must be non-negative");
    need(metrics.throughput_window_ticks >= 0, "metrics.throughput_window_ticks",
         "must be non-negative");
    return out;
  }

  void validate() const {
    auto d = diagnostics();
    if (d.empty()) return;
    std::string msg = "invalid config";
    for (const auto& line : d) msg += "\n  " + line;
    throw ConfigError(msg);
  }

  bool scripted_node_exists(const std::string& node) const;
};

// ---- naming -----------------------------------------------------------------

inline std::string padded(std::string_view prefix, long long i, int width) {
  std::string n = std::to_string(i);
  if (static_cast<int>(n.size()) < width) n.insert(0, static_cast<std::size_t>(width) - n.size(), '0');
  return std::string(prefix) + n;
}

inline int id_width(long long count, int minimum) {
  int w = 1;
  for (long long v = count > 0 ? count - 1 : 0; v >= 10; v /= 10) ++w;
  return std::max(w, minimum);
}

inline std::string coordinator_name(const SimConfig& c, int z) { return padded("coord-", z, id_width(c.n_zones(), 2)); }
inline std::string zone_name(const SimConfig& c, int z) { return padded("z", z, id_width(c.n_zones(), 2)); }
inline std::string controller_name(const SimConfig& c, int i) { return padded("ctrl-", i, id_width(c.n_controllers, 3)); }
inline std::string amr_name(const SimConfig& c, int i) { return padded("amr-", i, id_width(c.n_amrs, 3)); }
inline std::string edge_name(const SimConfig& c, int i) { return padded("edge-", i, id_width(c.n_edge_nodes(), 2)); }

inline bool SimConfig::scripted_node_exists(const std::string& node) const {
  if (n_controllers > 0)
    for (int i = 0; i < n_controllers; ++i)
      if (controller_name(*this, i) == node) return true;
  int edges = n_edge_nodes();
  for (int i = 0; i < edges; ++i)
    if (edge_name(*this, i) == node) return true;
  return false;
}

// ---- JSON -----------------------------------------------------------------

inline Json to_json(const SimConfig& c) {
  Json j;
  j["n_amrs"] = c.n_amrs;
  j["n_controllers"] = c.n_controllers;
  j["amrs_per_zone"] = c.amrs_per_zone;
  j["task_rate_per_min"] = c.task_rate_per_min;
  j["duration_ticks"] = c.duration_ticks;
  j["drain_ticks"] = c.drain_ticks;
  j["ticks_per_second"] = c.ticks_per_second;
  j["seed"] = c.seed;
  j["work_units"] = c.work_units;
  j["controller_capacity"] = c.controller_capacity;
  Json parts = Json::array();
  for (const auto& g : c.network.partitions) {
    Json group = Json::array();
    for (const auto& id : g) group.push_back(id.str());
    parts.push_back(std::move(group));
  }
  j["network"] = {{"latency_lo", c.network.latency_lo},
                  {"latency_hi", c.network.latency_hi},
                  {"drop_probability", c.network.drop_probability},
                  {"partitions", std::move(parts)}};
  Json scripted = Json::array();
  for (const auto& f : c.faults.scripted) scripted.push_back({{"tick", f.tick}, {"node", f.node}});
  j["faults"] = {{"controller_failure_fraction", c.faults.controller_failure_fraction},
                 {"edge_failure_fraction", c.faults.edge_failure_fraction},
                 {"n_edge_nodes", c.faults.n_edge_nodes},
                 {"window_start", c.faults.window_start},
                 {"window_end", c.faults.window_end},
                 {"scripted", std::move(scripted)}};
  j["election"] = {{"window_ticks", c.election.window_ticks},
                   {"heartbeat_interval", c.election.heartbeat_interval},
                   {"misses_allowed", c.election.misses_allowed},
                   {"dispatch_timeout_ticks", c.election.dispatch_timeout_ticks},
                   {"dispatch_retries", c.election.dispatch_retries},
                   {"empty_retry_ticks", c.election.empty_retry_ticks}};
  j["client"] = {{"timeout_ticks", c.client.timeout_ticks},
                 {"max_retries", c.client.max_retries},
                 {"backoff_ticks", c.client.backoff_ticks}};
  j["metrics"] = {{"throughput_window_ticks", c.metrics.throughput_window_ticks}};
  j["trace_level"] = c.trace_level == TraceLevel::Full ? "full" : "coordination";
  return j;
}

namespace detail {

// Overlays `patch` onto `base`, rejecting keys that `base` does not have.
// Arrays are replaced wholesale.
inline void strict_merge(Json& base, const Json& patch, const std::string& path,
                         std::vector<std::string>& errors) {
  if (!patch.is_object()) {
    errors.push_back((path.empty() ? std::string("config") : path) + ": expected an object");
    return;
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) {
      errors.push_back(key + ": unknown key");
      continue;
    }
    Json& slot = base[it.key()];
    if (slot.is_object())
      strict_merge(slot, it.value(), key, errors);
    else
      slot = it.value();
  }
}

template <typename T>
void read_field(const Json& j, const char* object, const char* key, T& out,
                std::vector<std::string>& errors) {
  std::string name = object[0] ? std::string(object) + "." + key : std::string(key);
  const Json& v = object[0] ? j.at(object).at(key) : j.at(key);
  try {
    if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) {
        if (v.is_number_float() && std::floor(v.get<double>()) == v.get<double>()) {
          out = static_cast<T>(v.get<double>());
          return;
        }
        errors.push_back(name + ": expected an integer");
        return;
      }
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_unsigned() || v.get<long long>() >= 0) {
          out = v.get<T>();
          return;
        }
        errors.push_back(name + ": expected a non-negative integer");
        return;
      }
      out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) {
        errors.push_back(name + ": expected a number");
        return;
      }
      out = v.get<T>();
    } else {
      out = v.get<T>();
    }
  } catch (const Json::exception& e) {
    errors.push_back(name + ": " + e.what());
  }
}

}  // namespace detail

/// Builds a config from a (possibly partial) JSON object on top of the
/// defaults. Unknown keys and type mismatches are reported together.
inline SimConfig config_from_json(const Json& patch) {
  std::vector<std::string> errors;
  Json j = to_json(SimConfig{});
  detail::strict_merge(j, patch, "", errors);

  SimConfig c;
  using detail::read_field;
  read_field(j, "", "n_amrs", c.n_amrs, errors);
  read_field(j, "", "n_controllers", c.n_controllers, errors);
  read_field(j, "", "amrs_per_zone", c.amrs_per_zone, errors);
  read_field(j, "", "task_rate_per_min", c.task_rate_per_min, errors);
  read_field(j, "", "duration_ticks", c.duration_ticks, errors);
  read_field(j, "", "drain_ticks", c.drain_ticks, errors);
  read_field(j, "", "ticks_per_second", c.ticks_per_second, errors);
  read_field(j, "", "seed", c.seed, errors);
  read_field(j, "", "work_units", c.work_units, errors);
  read_field(j, "", "controller_capacity", c.controller_capacity, errors);
  read_field(j, "network", "latency_lo", c.network.latency_lo, errors);
  read_field(j, "network", "latency_hi", c.network.latency_hi, errors);
  read_field(j, "network", "drop_probability", c.network.drop_probability, errors);
  {
    const Json& parts = j["network"]["partitions"];
    if (!parts.is_array()) {
      errors.push_back("network.partitions: expected an array of arrays");
    } else {
      for (const auto& g : parts) {
        if (!g.is_array()) {
          errors.push_back("network.partitions: expected an array of arrays");
          break;
        }
        std::vector<AgentId> group;
        for (const auto& id : g) {
          if (!id.is_string()) {
            errors.push_back("network.partitions: node ids must be strings");
            break;
          }
          group.emplace_back(id.get<std::string>());
        }
        c.network.partitions.push_back(std::move(group));
      }
    }
  }
  read_field(j, "faults", "controller_failure_fraction", c.faults.controller_failure_fraction, errors);
  read_field(j, "faults", "edge_failure_fraction", c.faults.edge_failure_fraction, errors);
  read_field(j, "faults", "n_edge_nodes", c.faults.n_edge_nodes, errors);
  read_field(j, "faults", "window_start", c.faults.window_start, errors);
  read_field(j, "faults", "window_end", c.faults.window_end, errors);
  {
    const Json& scripted = j["faults"]["scripted"];
    if (!scripted.is_array()) {
      errors.push_back("faults.scripted: expected an array");
    } else {
      for (const auto& f : scripted) {
        if (!f.is_object() || !f.contains("tick") || !f.contains("node") || !f["tick"].is_number_integer() ||
            !f["node"].is_string() || f.size() != 2) {
          errors.push_back("faults.scripted: entries must be {\"tick\": int, \"node\": string}");
          continue;
        }
        c.faults.scripted.push_back({f["tick"].get<Tick>(), f["node"].get<std::string>()});
      }
    }
  }
  read_field(j, "election", "window_ticks", c.election.window_ticks, errors);
  read_field(j, "election", "heartbeat_interval", c.election.heartbeat_interval, errors);
  read_field(j, "election", "misses_allowed", c.election.misses_allowed, errors);
  read_field(j, "election", "dispatch_timeout_ticks", c.election.dispatch_timeout_ticks, errors);
  read_field(j, "election", "dispatch_retries", c.election.dispatch_retries, errors);
  read_field(j, "election", "empty_retry_ticks", c.election.empty_retry_ticks, errors);
  read_field(j, "client", "timeout_ticks", c.client.timeout_ticks, errors);
  read_field(j, "client", "max_retries", c.client.max_retries, errors);
  read_field(j, "client", "backoff_ticks", c.client.backoff_ticks, errors);
  read_field(j, "metrics", "throughput_window_ticks", c.metrics.throughput_window_ticks, errors);
  {
    const Json& level = j["trace_level"];
    if (level == "full")
      c.trace_level = TraceLevel::Full;
    else if (level == "coordination")
      c.trace_level = TraceLevel::Coordination;
    else
      errors.push_back("trace_level: expected \"coordination\" or \"full\"");
  }

  if (errors.empty()) {
    auto more = c.diagnostics();
    errors.insert(errors.end(), more.begin(), more.end());
  }
  if (!errors.empty()) {
    std::string msg = "invalid config";
    for (const auto& e : errors) msg += "\n  " + e;
    throw ConfigError(msg);
  }
  return c;
}

}  // namespace agentflow::sim
