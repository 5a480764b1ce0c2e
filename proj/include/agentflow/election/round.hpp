#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "agentflow/election/load.hpp"
#include "agentflow/errors.hpp"

namespace agentflow::election {

/// Bounded window in which load ranks for one task are gathered and one
/// winner is decided. Participants are the agents expected to report (a
/// participant may report a rank or abstain); ranks are keyed by candidate.
class ElectionRound {
 public:
  static ElectionRound open(TaskId task, RoundId round, Tick now, Tick window_ticks) {
    if (window_ticks <= 0) throw ConfigError("election window must be positive");
    return ElectionRound(std::move(task), std::move(round), now, now + window_ticks);
  }

  const RoundId& id() const noexcept { return round_; }
  const TaskId& task() const noexcept { return task_; }
  Tick opened_at() const noexcept { return opened_at_; }
  Tick window_deadline() const noexcept { return deadline_; }

  /// First rank per candidate wins. After the decision every arrival is a
  /// late rank. Returns true when the rank was recorded.
  bool collect(const AgentId& participant, const std::optional<LoadRank>& rank) {
    if (decided_) {
      ++late_ranks_;
      return false;
    }
    heard_.insert(participant);
    if (!rank) return false;
    return ranks_.emplace(rank->candidate, *rank).second;
  }

  bool collect(const LoadRank& rank) { return collect(rank.candidate, rank); }

  bool heard_from(const AgentId& participant) const { return heard_.contains(participant); }

  bool heard_all(const std::set<AgentId>& participants) const {
    for (const auto& p : participants)
      if (!heard_.contains(p)) return false;
    return true;
  }

  /// Decision is due at the deadline or once every live participant reported.
  bool ready(Tick now, const std::set<AgentId>& live_participants) const {
    if (decided_) return false;
    return now >= deadline_ || heard_all(live_participants);
  }

  /// Fixes the outcome once; later calls return the same winner. Throws
  /// ElectionFailed when no rank was collected (the round is then closed).
  const AgentId& decide() {
    if (decided_) {
      if (!outcome_) throw ElectionFailed("round '" + round_.str() + "' failed");
      return *outcome_;
    }
    decided_ = true;
    if (ranks_.empty()) throw ElectionFailed("round '" + round_.str() + "' has no ranks");
    std::vector<LoadRank> values;
    values.reserve(ranks_.size());
    for (const auto& [_, r] : ranks_) values.push_back(r);
    outcome_ = decide_leader(values);
    return *outcome_;
  }

  bool decided() const noexcept { return decided_; }
  bool failed() const noexcept { return decided_ && !outcome_; }
  const std::optional<AgentId>& outcome() const noexcept { return outcome_; }
  const std::map<AgentId, LoadRank>& ranks() const noexcept { return ranks_; }
  std::uint64_t late_ranks() const noexcept { return late_ranks_; }

 private:
  ElectionRound(TaskId task, RoundId round, Tick opened, Tick deadline)
      : task_(std::move(task)), round_(std::move(round)), opened_at_(opened), deadline_(deadline) {}

  TaskId task_;
  RoundId round_;
  Tick opened_at_;
  Tick deadline_;
  std::map<AgentId, LoadRank> ranks_;
  std::set<AgentId> heard_;
  std::optional<AgentId> outcome_;
  bool decided_ = false;
  std::uint64_t late_ranks_ = 0;
};

}  // namespace agentflow::election
