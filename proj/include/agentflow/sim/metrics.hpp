#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "agentflow/election/wire.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::sim {

enum class TaskOutcome { Completed, OrphanedUnrecovered, TimedOut, PendingAtEnd };

inline const char* to_string(TaskOutcome o) {
  switch (o) {
    case TaskOutcome::Completed: return "completed";
    case TaskOutcome::OrphanedUnrecovered: return "orphaned_unrecovered";
    case TaskOutcome::TimedOut: return "timed_out";
    case TaskOutcome::PendingAtEnd: return "pending_at_end";
  }
  return "?";
}

/// Lifecycle of one task as reconstructed from the event log.
struct TaskHistory {
  Tick created_at = -1;
  std::optional<Tick> assigned_at;   // first acceptance by a controller
  std::optional<Tick> completed_at;  // first completion
  std::vector<std::pair<Tick, std::string>> orphaned;  // (tick, failed controller)
  bool timed_out = false;

  TaskOutcome outcome() const {
    if (completed_at) return TaskOutcome::Completed;
    if (!orphaned.empty()) return TaskOutcome::OrphanedUnrecovered;
    if (timed_out) return TaskOutcome::TimedOut;
    return TaskOutcome::PendingAtEnd;
  }
};

struct TaskLedger {
  std::map<std::string, TaskHistory> tasks;
  std::vector<std::pair<Tick, std::string>> failures;  // agent_failed records
  Tick end_tick = 0;

  static TaskLedger from(const EventLog& log) {
    TaskLedger l;
    for (const auto& r : log.records()) {
      l.end_tick = std::max(l.end_tick, r.tick);
      switch (r.kind) {
        case EventKind::TaskCreated: l.tasks[r.task].created_at = r.tick; break;
        case EventKind::TaskAssigned: {
          auto& t = l.tasks[r.task];
          if (!t.assigned_at) t.assigned_at = r.tick;
          break;
        }
        case EventKind::TaskCompleted: {
          auto& t = l.tasks[r.task];
          if (!t.completed_at) t.completed_at = r.tick;
          break;
        }
        case EventKind::TaskOrphaned:
          l.tasks[r.task].orphaned.emplace_back(r.tick, r.detail.value("failed", std::string()));
          break;
        case EventKind::TaskTimedOut: l.tasks[r.task].timed_out = true; break;
        case EventKind::AgentFailed: l.failures.emplace_back(r.tick, r.agent); break;
        default: break;
      }
    }
    return l;
  }

  std::map<TaskOutcome, std::uint64_t> outcome_counts() const {
    std::map<TaskOutcome, std::uint64_t> c{{TaskOutcome::Completed, 0},
                                           {TaskOutcome::OrphanedUnrecovered, 0},
                                           {TaskOutcome::TimedOut, 0},
                                           {TaskOutcome::PendingAtEnd, 0}};
    for (const auto& [_, t] : tasks)
      if (t.created_at >= 0) ++c[t.outcome()];
    return c;
  }

  std::uint64_t generated() const {
    std::uint64_t n = 0;
    for (const auto& [_, t] : tasks) n += t.created_at >= 0;
    return n;
  }
};

inline double ticks_to_ms(double ticks, int tps) { return ticks * 1000.0 / tps; }

/// Nearest-rank percentile of an unsorted sample; 0 for an empty one.
inline double percentile(std::vector<double> v, double p) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  auto rank = static_cast<std::size_t>(std::ceil(p / 100.0 * static_cast<double>(v.size())));
  rank = std::clamp<std::size_t>(rank, 1, v.size());
  return v[rank - 1];
}

inline double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

struct MttrResult {
  double seconds = 0.0;
  bool undefined = true;              // no failure orphaned any task
  std::uint64_t failures = 0;         // failures that orphaned work
  std::uint64_t unrecovered = 0;      // of which none was recovered
};

/// Per failed node: first completion of a task it orphaned minus the
/// failure tick. A failure whose orphans never complete contributes its
/// remaining observation window. Failures that orphaned nothing are skipped.
inline MttrResult measure_mttr(const TaskLedger& ledger, int ticks_per_second) {
  std::map<std::string, std::vector<const TaskHistory*>> by_node;
  for (const auto& [_, t] : ledger.tasks)
    for (const auto& [tick, node] : t.orphaned) by_node[node].push_back(&t);

  MttrResult out;
  std::vector<double> times;
  for (const auto& [ftick, node] : ledger.failures) {
    auto it = by_node.find(node);
    if (it == by_node.end()) continue;
    ++out.failures;
    std::optional<Tick> first;
    for (const TaskHistory* t : it->second)
      if (t->completed_at && *t->completed_at >= ftick && (!first || *t->completed_at < *first))
        first = t->completed_at;
    if (first) {
      times.push_back(static_cast<double>(*first - ftick));
    } else {
      ++out.unrecovered;
      times.push_back(static_cast<double>(ledger.end_tick - ftick));
    }
  }
  out.undefined = times.empty();
  out.seconds = mean(times) / ticks_per_second;
  return out;
}

inline MttrResult measure_mttr(const EventLog& log, int ticks_per_second) {
  return measure_mttr(TaskLedger::from(log), ticks_per_second);
}

struct ThroughputWindows {
  Tick pre_begin = 0, pre_end = 0, post_begin = 0, post_end = 0;
};

struct ThroughputResult {
  double pre_per_s = 0.0;
  double post_per_s = 0.0;
  double deviation_pct = 0.0;
  bool undefined = true;  // no completions before the failures
};

/// |pre - post| / pre x 100 over completions per second in two windows.
inline ThroughputResult throughput_deviation(double pre_per_s, double post_per_s) {
  ThroughputResult r;
  r.pre_per_s = pre_per_s;
  r.post_per_s = post_per_s;
  r.undefined = !(pre_per_s > 0.0);
  r.deviation_pct = r.undefined ? 0.0 : std::fabs(pre_per_s - post_per_s) / pre_per_s * 100.0;
  return r;
}

inline ThroughputResult measure_throughput_deviation(const TaskLedger& ledger, const ThroughputWindows& w,
                                                     int ticks_per_second) {
  std::uint64_t pre = 0, post = 0;
  for (const auto& [_, t] : ledger.tasks) {
    if (!t.completed_at) continue;
    Tick c = *t.completed_at;
    pre += c >= w.pre_begin && c < w.pre_end;
    post += c >= w.post_begin && c < w.post_end;
  }
  auto rate = [&](std::uint64_t n, Tick a, Tick b) {
    return b > a ? static_cast<double>(n) * ticks_per_second / static_cast<double>(b - a) : 0.0;
  };
  return throughput_deviation(rate(pre, w.pre_begin, w.pre_end), rate(post, w.post_begin, w.post_end));
}

struct ConvergenceResult {
  double mean_ms = 0.0;
  bool undefined = true;  // no re-election happened
  std::uint64_t reelections = 0;
};

/// Decide tick minus open tick of each replacement round, as seen by the
/// coordinator that opened it.
inline ConvergenceResult measure_election_convergence(const EventLog& log, int ticks_per_second) {
  std::map<std::pair<std::string, std::string>, Tick> opened;
  std::vector<double> samples;
  for (const auto& r : log.records()) {
    if (r.kind == EventKind::Reelect) {
      opened.emplace(std::make_pair(r.agent, r.round), r.tick);
    } else if (r.kind == EventKind::Decide) {
      auto it = opened.find({r.agent, r.round});
      if (it == opened.end()) continue;
      samples.push_back(ticks_to_ms(static_cast<double>(r.tick - it->second), ticks_per_second));
      opened.erase(it);
    }
  }
  ConvergenceResult c;
  c.reelections = samples.size();
  c.undefined = samples.empty();
  c.mean_ms = mean(samples);
  return c;
}

/// Published messages per live agent-second, from the per-agent traffic
/// records written at the end of a run.
inline double measure_overhead(const EventLog& log, int ticks_per_second) {
  double published = 0.0, active = 0.0;
  for (const auto& r : log.records()) {
    if (r.kind != EventKind::Traffic) continue;
    published += r.detail.value("published", 0.0);
    active += r.detail.value("active_ticks", 0.0);
  }
  double seconds = active / ticks_per_second;
  return seconds > 0.0 ? published / seconds : 0.0;
}

struct MetricsReport {
  std::uint64_t seed = 0;
  double mean_assignment_latency_ms = 0.0;
  double p95_assignment_latency_ms = 0.0;
  double task_success_rate = 100.0;
  bool success_rate_vacuous = true;
  double mean_election_convergence_ms = 0.0;
  bool convergence_undefined = true;
  std::uint64_t reelections = 0;
  double messages_per_agent_second = 0.0;
  double mttr_s = 0.0;
  bool mttr_undefined = true;
  std::uint64_t unrecovered_failures = 0;
  double throughput_deviation_pct = 0.0;
  bool throughput_undefined = true;
  double reassignment_success_rate = 100.0;
  bool reassignment_vacuous = true;
  std::uint64_t orphaned_tasks = 0;
  std::uint64_t discarded_deliveries = 0;
  std::uint64_t late_ranks = 0;
  std::uint64_t failures = 0;
  std::uint64_t tasks_generated = 0;
  std::uint64_t tasks_completed = 0;
  std::uint64_t tasks_timed_out = 0;
  std::uint64_t tasks_orphaned_unrecovered = 0;
  std::uint64_t tasks_pending_at_end = 0;
  Tick end_tick = 0;

  Json to_json() const {
    Json j;
    j["seed"] = seed;
    j["mean_assignment_latency_ms"] = mean_assignment_latency_ms;
    j["p95_assignment_latency_ms"] = p95_assignment_latency_ms;
    j["task_success_rate"] = task_success_rate;
    j["success_rate_vacuous"] = success_rate_vacuous;
    j["mean_election_convergence_ms"] = mean_election_convergence_ms;
    j["convergence_undefined"] = convergence_undefined;
    j["reelections"] = reelections;
    j["messages_per_agent_second"] = messages_per_agent_second;
    j["mttr_s"] = mttr_s;
    j["mttr_undefined"] = mttr_undefined;
    j["unrecovered_failures"] = unrecovered_failures;
    j["throughput_deviation_pct"] = throughput_deviation_pct;
    j["throughput_undefined"] = throughput_undefined;
    j["reassignment_success_rate"] = reassignment_success_rate;
    j["reassignment_vacuous"] = reassignment_vacuous;
    j["orphaned_tasks"] = orphaned_tasks;
    j["discarded_deliveries"] = discarded_deliveries;
    j["late_ranks"] = late_ranks;
    j["failures"] = failures;
    j["tasks_generated"] = tasks_generated;
    j["tasks_completed"] = tasks_completed;
    j["tasks_timed_out"] = tasks_timed_out;
    j["tasks_orphaned_unrecovered"] = tasks_orphaned_unrecovered;
    j["tasks_pending_at_end"] = tasks_pending_at_end;
    j["end_tick"] = end_tick;
    return j;
  }

  static std::vector<std::string> csv_columns() {
    std::vector<std::string> cols;
    const Json j = MetricsReport{}.to_json();
    for (const auto& [k, _] : j.items()) cols.push_back(k);
    return cols;
  }

  /// CSV cell text for every column, in csv_columns() order.
  std::vector<std::string> csv_cells() const {
    std::vector<std::string> cells;
    const Json j = to_json();
    for (const auto& [_, v] : j.items()) {
      if (v.is_boolean())
        cells.push_back(v.get<bool>() ? "true" : "false");
      else if (v.is_number_float())
        cells.push_back(election::format_double(v.get<double>()));
      else
        cells.push_back(v.dump());
    }
    return cells;
  }

  std::string csv() const {
    std::string out;
    auto cols = csv_columns();
    auto cells = csv_cells();
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += "\r\n";
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\r\n";
    return out;
  }
};

inline ThroughputWindows throughput_windows(Tick duration, double window_start, double window_end,
                                            Tick width) {
  ThroughputWindows w;
  w.pre_end = static_cast<Tick>(std::llround(window_start * static_cast<double>(duration)));
  w.pre_begin = std::max<Tick>(0, w.pre_end - width);
  w.post_begin = static_cast<Tick>(std::llround(window_end * static_cast<double>(duration)));
  w.post_end = w.post_begin + width;
  return w;
}

/// Full metric suite from one run's log.
inline MetricsReport compute_metrics(const EventLog& log, int ticks_per_second,
                                     const ThroughputWindows& windows) {
  TaskLedger ledger = TaskLedger::from(log);
  MetricsReport m;
  m.end_tick = ledger.end_tick;

  std::vector<double> latency;
  std::uint64_t orphaned = 0, recovered = 0;
  for (const auto& [_, t] : ledger.tasks) {
    if (t.created_at < 0) continue;
    if (t.assigned_at) latency.push_back(ticks_to_ms(static_cast<double>(*t.assigned_at - t.created_at), ticks_per_second));
    if (!t.orphaned.empty()) {
      ++orphaned;
      recovered += t.completed_at && *t.completed_at >= t.orphaned.front().first;
    }
  }
  m.mean_assignment_latency_ms = mean(latency);
  m.p95_assignment_latency_ms = percentile(latency, 95.0);

  auto counts = ledger.outcome_counts();
  m.tasks_generated = ledger.generated();
  m.tasks_completed = counts[TaskOutcome::Completed];
  m.tasks_timed_out = counts[TaskOutcome::TimedOut];
  m.tasks_orphaned_unrecovered = counts[TaskOutcome::OrphanedUnrecovered];
  m.tasks_pending_at_end = counts[TaskOutcome::PendingAtEnd];
  m.success_rate_vacuous = m.tasks_generated == 0;
  m.task_success_rate = m.success_rate_vacuous
                            ? 100.0
                            : 100.0 * static_cast<double>(m.tasks_completed) / static_cast<double>(m.tasks_generated);

  m.orphaned_tasks = orphaned;
  m.reassignment_vacuous = orphaned == 0;
  m.reassignment_success_rate =
      orphaned == 0 ? 100.0 : 100.0 * static_cast<double>(recovered) / static_cast<double>(orphaned);

  auto conv = measure_election_convergence(log, ticks_per_second);
  m.mean_election_convergence_ms = conv.mean_ms;
  m.convergence_undefined = conv.undefined;
  m.reelections = conv.reelections;

  m.messages_per_agent_second = measure_overhead(log, ticks_per_second);

  auto mttr = measure_mttr(ledger, ticks_per_second);
  m.mttr_s = mttr.seconds;
  m.mttr_undefined = mttr.undefined;
  m.unrecovered_failures = mttr.unrecovered;
  m.failures = ledger.failures.size();

  auto tp = measure_throughput_deviation(ledger, windows, ticks_per_second);
  m.throughput_deviation_pct = tp.deviation_pct;
  m.throughput_undefined = tp.undefined;

  for (const auto& r : log.records()) {
    m.discarded_deliveries += r.kind == EventKind::Discard;
    m.late_ranks += r.kind == EventKind::LateRank;
  }
  return m;
}

}  // namespace agentflow::sim
