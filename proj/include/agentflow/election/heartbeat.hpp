#pragma once

#include <map>
#include <set>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"

namespace agentflow::election {

/// Missed-heartbeat failure detector. An agent is suspected once
/// now - last_seen > interval * misses_allowed (strict).
class HeartbeatState {
 public:
  HeartbeatState(Tick interval_ticks = 5, int misses_allowed = 3)
      : interval_(interval_ticks), misses_(misses_allowed) {
    if (interval_ <= 0) throw ConfigError("heartbeat interval must be positive");
    if (misses_ <= 0) throw ConfigError("heartbeat misses_allowed must be positive");
  }

  Tick interval() const noexcept { return interval_; }
  int misses_allowed() const noexcept { return misses_; }
  Tick threshold() const noexcept { return interval_ * misses_; }

  void track(const AgentId& id, Tick now) { last_seen_.try_emplace(id, now); }

  /// Records a heartbeat. Returns true if this clears an earlier suspicion.
  bool observe(const AgentId& id, Tick now) {
    auto& seen = last_seen_[id];
    if (now > seen) seen = now;
    return suspected_.erase(id) > 0;
  }

  bool expired(const AgentId& id, Tick now) const {
    auto it = last_seen_.find(id);
    return it != last_seen_.end() && now - it->second > threshold();
  }

  /// Returns agents that became suspected at this check, in id order.
  std::vector<AgentId> tick(Tick now) {
    std::vector<AgentId> fresh;
    for (const auto& [id, seen] : last_seen_)
      if (now - seen > threshold() && suspected_.insert(id).second) fresh.push_back(id);
    return fresh;
  }

  bool suspected(const AgentId& id) const { return suspected_.contains(id); }
  const std::set<AgentId>& suspects() const noexcept { return suspected_; }
  const std::map<AgentId, Tick>& last_seen() const noexcept { return last_seen_; }

 private:
  Tick interval_;
  int misses_;
  std::map<AgentId, Tick> last_seen_;
  std::set<AgentId> suspected_;
};

}  // namespace agentflow::election
