#pragma once

#include <cmath>
#include <iterator>
#include <optional>
#include <ranges>
#include <string>

#include "agentflow/errors.hpp"
#include "agentflow/types.hpp"

namespace agentflow::election {

/// What a coordinator knows about one service agent: queued work units and
/// the rate (work units per tick) at which it drains them.
struct CandidateInfo {
  AgentId agent;
  double pending_work = 0.0;
  double capacity = 1.0;
};

struct LoadRank {
  AgentId candidate;
  double value = 0.0;
  RoundId round;
};

/// Load ratio pending_work / capacity, i.e. ticks of queued work.
inline LoadRank compute_load(const CandidateInfo& c, RoundId round = {}) {
  if (!(c.capacity > 0.0) || !std::isfinite(c.capacity))
    throw InvalidCapacity("capacity of '" + c.agent.str() + "' must be positive and finite");
  if (!(c.pending_work >= 0.0) || !std::isfinite(c.pending_work))
    throw InvalidLoad("pending work of '" + c.agent.str() + "' must be non-negative and finite");
  return LoadRank{c.agent, c.pending_work / c.capacity, std::move(round)};
}

/// True when `a` beats `b`: strictly lower load, or equal load and lower id.
inline bool ranks_before(const LoadRank& a, const LoadRank& b) {
  if (a.value != b.value) return a.value < b.value;
  return a.candidate < b.candidate;
}

/// Minimum-load candidate with least-id tie-break. Throws ElectionFailed on
/// an empty range.
template <std::ranges::input_range R>
  requires std::same_as<std::ranges::range_value_t<R>, LoadRank>
AgentId decide_leader(const R& ranks) {
  const LoadRank* best = nullptr;
  for (const LoadRank& r : ranks)
    if (!best || ranks_before(r, *best)) best = &r;
  if (!best) throw ElectionFailed("no ranks to decide on");
  return best->candidate;
}

}  // namespace agentflow::election
