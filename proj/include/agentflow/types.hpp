#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>

namespace agentflow {

/// Logical engine time. One tick is one millisecond in the swarm scenarios.
using Tick = std::int64_t;

/// String-backed identifier made distinct per domain through a tag type.
template <typename Tag>
class StrongId {
 public:
  StrongId() = default;
  explicit StrongId(std::string value) : value_(std::move(value)) {}
  explicit StrongId(std::string_view value) : value_(value) {}
  explicit StrongId(const char* value) : value_(value) {}

  const std::string& str() const noexcept { return value_; }
  bool empty() const noexcept { return value_.empty(); }

  friend auto operator<=>(const StrongId&, const StrongId&) = default;
  friend bool operator==(const StrongId&, const StrongId&) = default;

  friend std::ostream& operator<<(std::ostream& os, const StrongId& id) {
    return os << id.value_;
  }

 private:
  std::string value_;
};

struct AgentIdTag {};
struct CorrelationIdTag {};
struct TaskIdTag {};
struct RoundIdTag {};

using AgentId = StrongId<AgentIdTag>;
using CorrelationId = StrongId<CorrelationIdTag>;
using TaskId = StrongId<TaskIdTag>;
using RoundId = StrongId<RoundIdTag>;

using SubscriptionId = std::uint64_t;

}  // namespace agentflow

template <typename Tag>
struct std::hash<agentflow::StrongId<Tag>> {
  std::size_t operator()(const agentflow::StrongId<Tag>& id) const noexcept {
    return std::hash<std::string>{}(id.str());
  }
};
