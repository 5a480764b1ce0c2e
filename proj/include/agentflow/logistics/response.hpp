#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/logistics/envelope.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::logistics {

/// Return path of one request: publishes to the request's reply topic and
/// nowhere else.
struct ResponseLogistic {
  TopicName reply_topic;
  CorrelationId correlation;
  AgentId service;

  static ResponseLogistic for_request(const Envelope& env, AgentId service) {
    return {TopicName::topic(env.reply_topic), CorrelationId(env.correlation), std::move(service)};
  }

  void respond(AgentContext& ctx, std::string body) const {
    ctx.publish(reply_topic, std::move(body), correlation);
  }
};

/// Reads a request envelope; malformed requests are traced and yield nullopt.
inline std::optional<Envelope> parse_request(AgentContext& ctx, const Message& request) {
  try {
    return decode(request.payload);
  } catch (const MalformedRequest& e) {
    if (ctx.log()) {
      LogRecord r;
      r.kind = EventKind::MalformedRequest;
      r.topic = request.topic.str();
      r.detail["sender"] = request.sender.str();
      r.detail["error"] = e.what();
      ctx.record(std::move(r));
    }
    return std::nullopt;
  }
}

/// Service side of the request/response pattern.
class ServiceEndpoint {
 public:
  using Handler = std::function<std::string(AgentContext&, const Envelope&)>;

  /// Runs `handler` on a well-formed request and publishes its result to
  /// exactly the request's reply topic. Returns false for malformed requests,
  /// which are dropped and counted.
  bool serve(AgentContext& ctx, const Message& request, const Handler& handler) {
    auto env = parse_request(ctx, request);
    if (!env) {
      ++malformed_;
      return false;
    }
    ++served_;
    ResponseLogistic::for_request(*env, ctx.id()).respond(ctx, handler(ctx, *env));
    return true;
  }

  std::uint64_t served() const noexcept { return served_; }
  std::uint64_t malformed() const noexcept { return malformed_; }

 private:
  std::uint64_t served_ = 0;
  std::uint64_t malformed_ = 0;
};

}  // namespace agentflow::logistics
