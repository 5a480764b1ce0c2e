#pragma once

#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "agentflow/cli/scenario.hpp"
#include "agentflow/sim/audit.hpp"
#include "agentflow/sim/simulator.hpp"

namespace agentflow::cli {

enum ExitCode : int { kOk = 0, kInputError = 2, kInvariantViolation = 3, kPartialFailure = 4 };

using Runner = std::function<sim::SimResult(const sim::SimConfig&)>;

struct CommandEnv {
  std::filesystem::path out_dir;
  std::ostream* out = &std::cout;
  std::ostream* err = &std::cerr;
  bool write_events = false;
  Runner runner = [](const sim::SimConfig& c) { return sim::run(c); };
};

/// Output directory: $AGENTFLOW_OUT, else ./agentflow-out.
inline std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("AGENTFLOW_OUT"); env && *env) return env;
  return "agentflow-out";
}

/// Writes through a temporary sibling and renames it into place, so readers
/// never see a half-written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + tmp.string());
    f << content;
    if (!f.flush()) throw std::runtime_error("cannot write " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// RFC 4180 field quoting.
inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string csv_row(const std::vector<std::string>& cells) {
  std::string out;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += csv_field(cells[i]);
  }
  return out + "\r\n";
}

inline std::string value_text(const Json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

// Audits that a run's own log must pass.
inline std::vector<std::string> failed_audits(const EventLog& log, std::ostream& err) {
  std::vector<std::string> failed;
  for (const auto& a : sim::run_audits(log)) {
    if (a.passed()) continue;
    failed.push_back(a.name);
    err << "invariant violated: " << a.name << " (" << a.violations << " violations)\n";
    for (const auto& e : a.examples) err << "  " << e << "\n";
  }
  return failed;
}

/// One simulation. Writes metrics.json, metrics.csv and, when requested,
/// events.jsonl into the output directory.
inline int cmd_run(const std::filesystem::path& scenario_path, const std::vector<std::string>& overrides,
                   const CommandEnv& env) {
  sim::SimConfig cfg;
  try {
    cfg = load_scenario(scenario_path, overrides).base();
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  }

  sim::SimResult result;
  try {
    result = env.runner(cfg);
  } catch (const Error& e) {
    *env.err << "invariant violated: " << e.what() << "\n";
    return kInvariantViolation;
  }
  auto failed = failed_audits(result.log, *env.err);

  try {
    write_atomic(env.out_dir / "metrics.json", result.metrics.to_json().dump(2) + "\n");
    write_atomic(env.out_dir / "metrics.csv", result.metrics.csv());
    if (env.write_events) write_atomic(env.out_dir / "events.jsonl", result.log.to_jsonl());
  } catch (const std::exception& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  }
  const auto& m = result.metrics;
  *env.out << "tasks " << m.tasks_generated << ", success " << m.task_success_rate << "%, latency "
           << m.mean_assignment_latency_ms << " ms, wrote " << (env.out_dir / "metrics.json").string() << "\n";
  return failed.empty() ? kOk : kInvariantViolation;
}

struct SweepPoint {
  Json value;
  std::uint64_t seed = 0;
  bool ok = false;
  std::string error;
  sim::MetricsReport metrics;
};

/// Long format: one row per (value, seed); failed points keep their row
/// with empty metric cells.
inline std::string sweep_long_csv(const std::string& parameter, const std::vector<SweepPoint>& points) {
  std::vector<std::string> header{"parameter", "value", "seed", "status", "error"};
  auto cols = sim::MetricsReport::csv_columns();
  for (const auto& c : cols)
    if (c != "seed") header.push_back(c);
  std::string out = csv_row(header);
  for (const auto& p : points) {
    std::vector<std::string> row{parameter, value_text(p.value), std::to_string(p.seed), p.ok ? "ok" : "failed",
                                 p.error};
    auto cells = p.metrics.csv_cells();
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] != "seed") row.push_back(p.ok ? cells[i] : "");
    out += csv_row(row);
  }
  return out;
}

/// Per-value means over the successful seeds of every numeric metric.
inline std::string sweep_aggregate_csv(const std::string& parameter, const std::vector<Json>& values,
                                       const std::vector<SweepPoint>& points) {
  std::vector<std::string> numeric;
  const Json blank = sim::MetricsReport{}.to_json();
  for (const auto& [k, v] : blank.items())
    if (k != "seed" && v.is_number()) numeric.push_back(k);

  std::vector<std::string> header{"parameter", "value", "runs", "failed"};
  for (const auto& k : numeric) header.push_back("mean_" + k);
  std::string out = csv_row(header);
  for (const auto& v : values) {
    std::map<std::string, double> sum;
    std::size_t runs = 0, failed = 0;
    for (const auto& p : points) {
      if (p.value != v) continue;
      if (!p.ok) {
        ++failed;
        continue;
      }
      ++runs;
      Json j = p.metrics.to_json();
      for (const auto& k : numeric) sum[k] += j[k].get<double>();
    }
    std::vector<std::string> row{parameter, value_text(v), std::to_string(runs), std::to_string(failed)};
    for (const auto& k : numeric)
      row.push_back(runs ? election::format_double(sum[k] / static_cast<double>(runs)) : "");
    out += csv_row(row);
  }
  return out;
}

inline std::string point_file_name(const std::string& parameter, const Json& value, std::uint64_t seed) {
  std::string name = parameter + "=" + value_text(value);
  for (char& c : name)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '=' || c == '-' || c == '_')) c = '_';
  return name + "_seed-" + std::to_string(seed) + ".json";
}

/// Every (value x seed) point of the scenario's sweep block. Writes each
/// point's metrics as it finishes, then sweep_long.csv and
/// sweep_aggregate.csv.
inline int cmd_sweep(const std::filesystem::path& scenario_path, const std::vector<std::string>& overrides,
                     const CommandEnv& env) {
  Scenario scenario;
  try {
    scenario = load_scenario(scenario_path, overrides);
    if (!scenario.sweep) throw ConfigError(scenario_path.string() + ": no sweep block");
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  }
  const Sweep& sw = *scenario.sweep;

  std::vector<SweepPoint> points;
  std::size_t failures = 0;
  try {
    for (const auto& value : sw.values) {
      for (auto seed : sw.seeds) {
        SweepPoint p;
        p.value = value;
        p.seed = seed;
        try {
          sim::SimConfig cfg = scenario.at(&value, seed);
          sim::SimResult r = env.runner(cfg);
          std::ostringstream why;
          auto failed = failed_audits(r.log, why);
          if (failed.empty()) {
            p.ok = true;
            p.metrics = r.metrics;
            write_atomic(env.out_dir / "points" / point_file_name(sw.parameter, value, seed),
                         r.metrics.to_json().dump(2) + "\n");
          } else {
            p.error = "invariant violated: " + failed.front();
            *env.err << why.str();
          }
        } catch (const Error& e) {
          p.error = e.what();
        }
        if (!p.ok) {
          ++failures;
          *env.err << "point " << sw.parameter << "=" << value_text(value) << " seed " << seed
                   << " failed: " << p.error << "\n";
        }
        points.push_back(std::move(p));
      }
    }
    write_atomic(env.out_dir / "sweep_long.csv", sweep_long_csv(sw.parameter, points));
    write_atomic(env.out_dir / "sweep_aggregate.csv", sweep_aggregate_csv(sw.parameter, sw.values, points));
  } catch (const std::filesystem::filesystem_error& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::runtime_error& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  }
  *env.out << points.size() << " points, " << failures << " failed, wrote "
           << (env.out_dir / "sweep_aggregate.csv").string() << "\n";
  return failures ? kPartialFailure : kOk;
}

inline const std::vector<std::string>& default_replay_audits() {
  static const std::vector<std::string> names{"selectivity", "argmin", "conservation"};
  return names;
}

/// Re-audits a recorded event log. `assertions` names audits to run; empty
/// means the default set, "all" means every audit.
inline int cmd_replay(const std::filesystem::path& log_path, const std::vector<std::string>& assertions,
                      const CommandEnv& env) {
  std::set<std::string> wanted(assertions.begin(), assertions.end());
  if (wanted.empty()) wanted.insert(default_replay_audits().begin(), default_replay_audits().end());
  bool all = wanted.erase("all") > 0;

  EventLog log;
  try {
    std::ifstream in(log_path, std::ios::binary);
    if (!in) throw CorruptLog("cannot read '" + log_path.string() + "'");
    log = EventLog::read_jsonl(in);
    if (log.size() == 0) throw CorruptLog("log is empty");
  } catch (const Error& e) {
    *env.err << "error: " << e.what() << "\n";
    return kInputError;
  }

  std::vector<sim::AuditResult> results;
  try {
    results = sim::run_audits(log);
  } catch (const std::exception& e) {
    *env.err << "error: corrupt log: " << e.what() << "\n";
    return kInputError;
  }
  std::set<std::string> known;
  for (const auto& r : results) known.insert(r.name);
  for (const auto& w : wanted)
    if (!known.contains(w)) {
      *env.err << "error: unknown audit '" << w << "'\n";
      return kInputError;
    }

  bool ok = true;
  for (const auto& r : results) {
    if (!all && !wanted.contains(r.name)) continue;
    *env.out << (r.passed() ? "PASS " : "FAIL ") << r.name << " (" << r.checked << " checked, " << r.violations
             << " violations)\n";
    for (const auto& e : r.examples) *env.out << "  " << e << "\n";
    ok = ok && r.passed();
  }
  return ok ? kOk : kInvariantViolation;
}

}  // namespace agentflow::cli
