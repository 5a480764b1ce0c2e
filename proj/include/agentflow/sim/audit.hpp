#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "agentflow/logistics/envelope.hpp"
#include "agentflow/sim/metrics.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::sim {

struct AuditResult {
  std::string name;
  std::uint64_t checked = 0;
  std::uint64_t violations = 0;
  std::vector<std::string> examples;  // first few violations

  bool passed() const noexcept { return violations == 0; }

  void fail(std::string what) {
    ++violations;
    if (examples.size() < 5) examples.push_back(std::move(what));
  }
};

/// Every delivery on "reply/<client>/<corr>" reaches <client> only, carries
/// correlation <corr>, and each published response is delivered at most once.
inline AuditResult audit_selectivity(const EventLog& log) {
  AuditResult a;
  a.name = "selectivity";
  std::map<std::uint64_t, int> per_publish;
  for (const auto& r : log.records()) {
    if (r.kind != EventKind::Deliver || !r.topic.starts_with("reply/")) continue;
    ++a.checked;
    std::string_view client, corr;
    if (!logistics::parse_reply_topic(r.topic, client, corr)) {
      a.fail("tick " + std::to_string(r.tick) + ": malformed reply topic " + r.topic);
      continue;
    }
    if (r.agent != client)
      a.fail("tick " + std::to_string(r.tick) + ": " + r.topic + " delivered to " + r.agent);
    if (r.detail.contains("corr") && r.detail["corr"].get<std::string>() != corr)
      a.fail("tick " + std::to_string(r.tick) + ": " + r.topic + " carries correlation " +
             r.detail["corr"].get<std::string>());
    if (r.detail.contains("seq") && ++per_publish[r.detail["seq"].get<std::uint64_t>()] > 1)
      a.fail("tick " + std::to_string(r.tick) + ": response seq " + r.detail["seq"].dump() +
             " delivered more than once");
  }
  return a;
}

/// Recorded winner of every decided round is the minimum-load candidate of
/// the recorded rank set, least id among equals; no winner iff no ranks.
inline AuditResult audit_argmin(const EventLog& log) {
  AuditResult a;
  a.name = "argmin";
  for (const auto& r : log.records()) {
    if (r.kind != EventKind::Decide) continue;
    ++a.checked;
    const Json& ranks = r.detail.contains("ranks") ? r.detail["ranks"] : Json::object();
    const Json& winner = r.detail.contains("winner") ? r.detail["winner"] : Json();
    std::string best;
    double best_value = 0.0;
    bool any = false;
    for (const auto& [cand, value] : ranks.items()) {
      double v = value.get<double>();
      if (!any || v < best_value || (v == best_value && cand < best)) {
        best = cand;
        best_value = v;
        any = true;
      }
    }
    std::string where = "round " + r.round + " at " + r.agent;
    if (!any) {
      if (!winner.is_null()) a.fail(where + ": winner without ranks");
    } else if (!winner.is_string()) {
      a.fail(where + ": no winner although ranks exist");
    } else if (winner.get<std::string>() != best) {
      a.fail(where + ": winner " + winner.get<std::string>() + " but argmin is " + best);
    }
  }
  return a;
}

/// Coordinators that decided a round on the same rank set chose the same
/// winner, and no round was dispatched twice.
inline AuditResult audit_single_decision(const EventLog& log) {
  AuditResult a;
  a.name = "single_decision";
  std::map<std::pair<std::string, std::string>, std::string> outcome;  // (round, ranks) -> winner
  std::map<std::string, int> dispatches;
  for (const auto& r : log.records()) {
    if (r.kind == EventKind::Decide) {
      ++a.checked;
      std::string ranks = r.detail.contains("ranks") ? r.detail["ranks"].dump() : "{}";
      std::string winner = r.detail.contains("winner") ? r.detail["winner"].dump() : "null";
      auto [it, fresh] = outcome.try_emplace({r.round, ranks}, winner);
      if (!fresh && it->second != winner)
        a.fail("round " + r.round + ": winners " + it->second + " and " + winner + " on one rank set");
    } else if (r.kind == EventKind::Dispatch) {
      if (++dispatches[r.round] > 1) a.fail("round " + r.round + " dispatched more than once");
    }
  }
  return a;
}

/// Generated tasks = completed + orphaned-unrecovered + timed-out +
/// pending-at-end, every lifecycle record names a created task, and the
/// counts written at the end of the run agree.
inline AuditResult audit_conservation(const EventLog& log) {
  AuditResult a;
  a.name = "conservation";
  TaskLedger ledger = TaskLedger::from(log);
  auto counts = ledger.outcome_counts();
  std::uint64_t total = 0;
  for (const auto& [_, n] : counts) total += n;
  a.checked = ledger.tasks.size();
  if (total != ledger.generated()) a.fail("outcome counts do not sum to generated tasks");
  for (const auto& [id, t] : ledger.tasks) {
    if (t.created_at < 0) a.fail("task " + id + " has lifecycle records but was never created");
    if (t.assigned_at && *t.assigned_at < t.created_at) a.fail("task " + id + " assigned before creation");
    if (t.completed_at && (!t.assigned_at || *t.completed_at < *t.assigned_at))
      a.fail("task " + id + " completed before assignment");
  }
  for (const auto& r : log.records()) {
    if (r.kind != EventKind::RunEnd) continue;
    auto expect = [&](const char* key, std::uint64_t have) {
      if (!r.detail.contains(key)) return;
      if (r.detail[key].get<std::uint64_t>() != have)
        a.fail(std::string("run_end ") + key + " = " + r.detail[key].dump() + ", log shows " +
               std::to_string(have));
    };
    expect("generated", ledger.generated());
    expect("completed", counts[TaskOutcome::Completed]);
    expect("orphaned_unrecovered", counts[TaskOutcome::OrphanedUnrecovered]);
    expect("timed_out", counts[TaskOutcome::TimedOut]);
    expect("pending_at_end", counts[TaskOutcome::PendingAtEnd]);
  }
  return a;
}

/// Handler boundaries of each agent alternate start/end (only checkable on
/// logs recorded at full trace level).
inline AuditResult audit_serialization(const EventLog& log) {
  AuditResult a;
  a.name = "serialization";
  std::map<std::string, bool> inside;
  for (const auto& r : log.records()) {
    if (r.kind == EventKind::HandlerStart) {
      ++a.checked;
      if (inside[r.agent]) a.fail("tick " + std::to_string(r.tick) + ": nested handler at " + r.agent);
      inside[r.agent] = true;
    } else if (r.kind == EventKind::HandlerEnd) {
      if (!inside[r.agent]) a.fail("tick " + std::to_string(r.tick) + ": unmatched handler end at " + r.agent);
      inside[r.agent] = false;
    }
  }
  return a;
}

inline std::vector<AuditResult> run_audits(const EventLog& log) {
  return {audit_selectivity(log), audit_argmin(log), audit_single_decision(log), audit_conservation(log),
          audit_serialization(log)};
}

}  // namespace agentflow::sim
