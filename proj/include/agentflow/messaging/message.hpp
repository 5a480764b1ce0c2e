#pragma once

#include <cstddef>
#include <optional>
#include <string>

#include "agentflow/messaging/topic.hpp"
#include "agentflow/types.hpp"

namespace agentflow {

inline constexpr std::size_t kDefaultMaxPayload = 64 * 1024;

/// Unit of publish-subscribe communication. The payload is an opaque byte
/// string; `sender` doubles as the sender-identity field.
struct Message {
  TopicName topic;
  std::string payload;
  AgentId sender;
  std::optional<CorrelationId> correlation;
  Tick sent_at = 0;
};

}  // namespace agentflow
