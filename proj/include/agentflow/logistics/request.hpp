#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/errors.hpp"
#include "agentflow/logistics/envelope.hpp"
#include "agentflow/trace.hpp"

namespace agentflow::logistics {

struct RetryPolicy {
  Tick timeout_ticks = 100;
  int max_retries = 0;
  Tick backoff_ticks = 0;

  void validate() const {
    if (timeout_ticks <= 0) throw ConfigError("timeout_ticks must be positive");
    if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
    if (backoff_ticks < 0) throw ConfigError("backoff_ticks must be non-negative");
  }
};

/// Courier for one client's requests to one service topic. The reply topic
/// of each request is derived from (client, correlation).
struct RequestLogistic {
  AgentId client;
  TopicName service_topic;
  RetryPolicy policy;

  TopicName reply_topic(const CorrelationId& correlation) const {
    return make_reply_topic(client, correlation);
  }
};

enum class RequestState { InFlight, Succeeded, TimedOut };

inline const char* to_string(RequestState s) {
  switch (s) {
    case RequestState::InFlight: return "in_flight";
    case RequestState::Succeeded: return "succeeded";
    case RequestState::TimedOut: return "timed_out";
  }
  return "?";
}

struct PendingRequest {
  CorrelationId correlation;
  TopicName reply_topic;
  TopicName service_topic;
  RetryPolicy policy;
  Tick deadline = 0;
  int attempts_used = 0;
  RequestState state = RequestState::InFlight;
  std::string payload;  // encoded envelope, re-published verbatim on retry
  SubscriptionId subscription = 0;
};

/// Per-client table of outstanding requests. Mutated only from the owning
/// agent's serialized context (handlers and its own timers).
///
/// Retry rule: when an InFlight request passes its deadline with
/// attempts_used <= max_retries, it is re-published with the same correlation
/// and the deadline moves to now + timeout + backoff * (attempts so far);
/// otherwise it becomes TimedOut. The first response wins; later responses
/// with the same correlation are counted as duplicates and dropped.
class RequestTable {
 public:
  /// `body` is null when the request timed out.
  using Callback = std::function<void(AgentContext&, const PendingRequest&, const std::string* body)>;

  const PendingRequest& send(AgentContext& ctx, const RequestLogistic& logistic,
                             CorrelationId correlation, std::string body, Callback done = {}) {
    logistic.policy.validate();
    if (requests_.contains(correlation))
      throw PreconditionViolation("correlation '" + correlation.str() + "' already used");
    PendingRequest req;
    req.correlation = correlation;
    req.reply_topic = logistic.reply_topic(correlation);
    req.service_topic = logistic.service_topic;
    req.policy = logistic.policy;
    req.payload = encode(Envelope{req.reply_topic.str(), correlation.str(), std::move(body)});
    req.subscription = ctx.subscribe(TopicName::filter(req.reply_topic.str()));
    req.attempts_used = 1;
    req.deadline = ctx.now() + req.policy.timeout_ticks;

    by_topic_.emplace(req.reply_topic.str(), correlation);
    auto [it, _] = requests_.emplace(correlation, Entry{std::move(req), std::move(done)});
    trace(ctx, EventKind::RequestSent, it->second.req);
    ctx.publish(it->second.req.service_topic, it->second.req.payload, correlation);
    arm(ctx, it->second.req.deadline);
    return it->second.req;
  }

  /// Consumes responses on reply topics owned by this table. Returns false
  /// for messages that belong elsewhere.
  bool on_message(AgentContext& ctx, const Message& msg) {
    auto t = by_topic_.find(msg.topic.str());
    if (t == by_topic_.end()) return false;
    Entry& e = requests_.at(t->second);
    if (msg.correlation && *msg.correlation != e.req.correlation) {
      ++foreign_;
      return true;
    }
    if (e.req.state != RequestState::InFlight) {
      ++duplicates_;
      trace(ctx, EventKind::DuplicateResponse, e.req);
      return true;
    }
    e.req.state = RequestState::Succeeded;
    finish(ctx, e);
    trace(ctx, EventKind::RequestSucceeded, e.req);
    if (e.done) e.done(ctx, e.req, &msg.payload);
    return true;
  }

  void on_tick(AgentContext& ctx) {
    Tick now = ctx.now();
    // Callbacks may send new requests; collect first.
    std::vector<CorrelationId> expired;
    for (auto& [corr, e] : requests_)
      if (e.req.state == RequestState::InFlight && now >= e.req.deadline) expired.push_back(corr);
    for (const auto& corr : expired) {
      Entry& e = requests_.at(corr);
      if (e.req.attempts_used <= e.req.policy.max_retries) {
        Tick waited = e.req.policy.backoff_ticks * e.req.attempts_used;
        ++e.req.attempts_used;
        e.req.deadline = now + e.req.policy.timeout_ticks + waited;
        trace(ctx, EventKind::RequestRetry, e.req);
        ctx.publish(e.req.service_topic, e.req.payload, e.req.correlation);
        arm(ctx, e.req.deadline);
      } else {
        e.req.state = RequestState::TimedOut;
        finish(ctx, e);
        trace(ctx, EventKind::RequestTimedOut, e.req);
        if (e.done) e.done(ctx, e.req, nullptr);
      }
    }
  }

  const PendingRequest* find(const CorrelationId& correlation) const {
    auto it = requests_.find(correlation);
    return it == requests_.end() ? nullptr : &it->second.req;
  }

  std::size_t in_flight() const {
    std::size_t n = 0;
    for (const auto& [_, e] : requests_) n += e.req.state == RequestState::InFlight;
    return n;
  }

  std::size_t size() const noexcept { return requests_.size(); }
  std::uint64_t duplicates() const noexcept { return duplicates_; }
  std::uint64_t foreign() const noexcept { return foreign_; }

 private:
  struct Entry {
    PendingRequest req;
    Callback done;
  };

  void finish(AgentContext& ctx, Entry& e) {
    if (e.req.subscription != 0) {
      ctx.unsubscribe(e.req.subscription);
      e.req.subscription = 0;
    }
    // Keep the topic mapping so late duplicates are recognised.
  }

  void arm(AgentContext& ctx, Tick deadline) {
    ctx.set_timer(deadline - ctx.now(), [this](AgentContext& c) { on_tick(c); });
  }

  static void trace(AgentContext& ctx, EventKind kind, const PendingRequest& req) {
    if (!ctx.log()) return;
    LogRecord r;
    r.kind = kind;
    r.topic = kind == EventKind::RequestSent || kind == EventKind::RequestRetry
                  ? req.service_topic.str()
                  : req.reply_topic.str();
    r.detail["corr"] = req.correlation.str();
    r.detail["attempts"] = req.attempts_used;
    r.detail["deadline"] = req.deadline;
    ctx.record(std::move(r));
  }

  std::map<CorrelationId, Entry> requests_;
  std::unordered_map<std::string, CorrelationId> by_topic_;
  std::uint64_t duplicates_ = 0;
  std::uint64_t foreign_ = 0;
};

}  // namespace agentflow::logistics
