#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <unordered_map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "agentflow/engine.hpp"
#include "agentflow/errors.hpp"
#include "agentflow/messaging/broker.hpp"
#include "agentflow/trace.hpp"
#include "agentflow/types.hpp"

namespace agentflow {

enum class AgentState { Initializing, Active, Terminating, Terminated, Failed };

inline const char* to_string(AgentState s) {
  switch (s) {
    case AgentState::Initializing: return "initializing";
    case AgentState::Active: return "active";
    case AgentState::Terminating: return "terminating";
    case AgentState::Terminated: return "terminated";
    case AgentState::Failed: return "failed";
  }
  return "?";
}

/// Position of an agent in the holon forest.
struct HolonNode {
  AgentId id;
  std::optional<AgentId> parent;
  std::vector<AgentId> children;
  AgentState state = AgentState::Initializing;
};

class AgentRuntime;
class AgentContext;

/// Hooks an agent implements. Handlers touch engine state only through the
/// context they are given.
class AgentBehavior {
 public:
  virtual ~AgentBehavior() = default;
  virtual void on_start(AgentContext&) {}
  virtual void on_message(AgentContext&, const Message&) {}
  virtual void on_stop(AgentContext&) {}
};

using TimerFn = std::function<void(AgentContext&)>;

/// Capabilities handed to a running behavior: publish, subscribe, spawn
/// children, arm timers and write trace records.
class AgentContext {
 public:
  AgentContext(AgentRuntime& rt, AgentId self) : rt_(&rt), self_(std::move(self)) {}

  const AgentId& id() const noexcept { return self_; }
  Tick now() const noexcept;

  void publish(const TopicName& topic, std::string payload,
               std::optional<CorrelationId> correlation = std::nullopt);
  void publish(std::string_view topic, std::string payload,
               std::optional<CorrelationId> correlation = std::nullopt) {
    publish(TopicName::topic(topic), std::move(payload), std::move(correlation));
  }

  SubscriptionId subscribe(const TopicName& filter);
  SubscriptionId subscribe(std::string_view filter) { return subscribe(TopicName::filter(filter)); }
  void unsubscribe(SubscriptionId id);

  AgentId spawn(AgentId child, std::unique_ptr<AgentBehavior> behavior);
  void set_timer(Tick delay, TimerFn fn);

  EventLog* log() const noexcept;
  void record(LogRecord r) const;

  AgentRuntime& runtime() const noexcept { return *rt_; }

 private:
  AgentRuntime* rt_;
  AgentId self_;
};

struct RuntimeOptions {
  /// Topics starting with one of these prefixes are telemetry: counted, but
  /// traced individually only at TraceLevel::Full.
  std::vector<std::string> telemetry_prefixes;
};

/// Owns agents, routes broker deliveries to them and keeps the holon forest.
/// Every hook of one agent runs to completion before the next one starts.
class AgentRuntime final : public BrokerObserver {
 public:
  struct Traffic {
    std::uint64_t published = 0;
    std::uint64_t telemetry = 0;
    Tick active_since = -1;
    Tick active_until = -1;
  };

  AgentRuntime(Engine& engine, MessageBroker& broker, EventLog* log = nullptr,
               RuntimeOptions options = {})
      : engine_(&engine), broker_(&broker), log_(log), options_(std::move(options)) {
    engine_->set_delivery_handler([this](const Delivery& d) { on_delivery(d); });
  }

  AgentRuntime(const AgentRuntime&) = delete;
  AgentRuntime& operator=(const AgentRuntime&) = delete;

  Engine& engine() noexcept { return *engine_; }
  MessageBroker& broker() noexcept { return *broker_; }
  EventLog* log() const noexcept { return log_; }
  Tick now() const noexcept { return engine_->now(); }

  /// Creates a node in Initializing, runs on_start, then marks it Active.
  AgentId spawn(AgentId id, std::unique_ptr<AgentBehavior> behavior,
                std::optional<AgentId> parent = std::nullopt) {
    if (index_.contains(id)) throw DuplicateAgent("agent '" + id.str() + "' already exists");
    if (parent) {
      const Slot* p = find_slot(*parent);
      if (!p || p->node.state != AgentState::Active)
        throw ParentUnavailable("parent '" + parent->str() + "' is not active");
    }
    Slot& slot = agents_[id];
    index_.emplace(id, &slot);
    slot.node.id = id;
    slot.node.parent = parent;
    slot.behavior = std::move(behavior);
    if (parent) at(*parent).node.children.push_back(id);
    trace(EventKind::AgentSpawned, id.str(), [&](LogRecord& r) {
      r.detail["parent"] = parent ? parent->str() : std::string();
    });

    AgentContext ctx(*this, id);
    slot.in_handler = true;
    try {
      if (slot.behavior) slot.behavior->on_start(ctx);
    } catch (...) {
      Slot& s = at(id);
      s.in_handler = false;
      s.node.state = AgentState::Failed;
      throw;
    }
    Slot& s = at(id);
    s.in_handler = false;
    s.node.state = AgentState::Active;
    s.traffic.active_since = now();
    drain(s);
    return id;
  }

  AgentId spawn(std::unique_ptr<AgentBehavior> behavior,
                std::optional<AgentId> parent = std::nullopt) {
    AgentId id("agent-" + std::to_string(++auto_id_));
    return spawn(std::move(id), std::move(behavior), std::move(parent));
  }

  /// Depth-first: descendants reach Terminated before the node itself, and
  /// all of the subtree's subscriptions are removed.
  void terminate(const AgentId& id) {
    Slot& slot = at(id);
    if (slot.node.state == AgentState::Terminated || slot.node.state == AgentState::Terminating)
      return;
    auto children = slot.node.children;
    for (const auto& child : children) terminate(child);

    Slot& s = at(id);
    bool was_active = s.node.state == AgentState::Active;
    s.node.state = AgentState::Terminating;
    if (was_active && s.behavior) {
      AgentContext ctx(*this, id);
      s.in_handler = true;
      s.behavior->on_stop(ctx);
      s.in_handler = false;
    }
    Slot& t = at(id);
    for (SubscriptionId sub : t.subscriptions) broker_->unsubscribe(sub);
    t.subscriptions.clear();
    t.mailbox.clear();
    t.node.state = AgentState::Terminated;
    if (t.traffic.active_since >= 0 && t.traffic.active_until < 0) t.traffic.active_until = now();
    trace(EventKind::AgentTerminated, id.str(), [](LogRecord&) {});
  }

  /// Crash-stop. Subscriptions stay registered; later deliveries are
  /// discarded. Failing a Failed or Terminated agent is a no-op.
  void fail(const AgentId& id) {
    Slot& slot = at(id);
    if (slot.node.state != AgentState::Active && slot.node.state != AgentState::Initializing) return;
    slot.node.state = AgentState::Failed;
    slot.mailbox.clear();
    if (slot.traffic.active_since >= 0) slot.traffic.active_until = now();
    trace(EventKind::AgentFailed, id.str(), [](LogRecord&) {});
  }

  /// Hands one message to an agent's on_message. Non-active agents drop it
  /// and the discard counter grows.
  void dispatch(const AgentId& id, const Message& msg, std::uint64_t publish_seq = 0) {
    dispatch(at(id), msg, publish_seq);
  }

  /// Arms a timer that runs in the agent's serialized context, skipped if
  /// the agent is no longer Active by then.
  void schedule(const AgentId& id, Tick delay, TimerFn fn) {
    Slot* slot = &at(id);
    engine_->after(delay, [this, slot, fn = std::move(fn)]() { fire(*slot, fn); });
  }

  /// External stimulus delivered at `tick` in the message phase.
  void inject(const AgentId& id, Tick tick, TimerFn fn) {
    Slot* slot = &at(id);
    engine_->at(tick, [this, slot, fn = std::move(fn)]() { fire(*slot, fn); }, Phase::Message);
  }

  const HolonNode& node(const AgentId& id) const { return at(id).node; }
  AgentState state(const AgentId& id) const { return at(id).node.state; }
  bool contains(const AgentId& id) const { return index_.contains(id); }
  AgentBehavior* behavior(const AgentId& id) { return at(id).behavior.get(); }

  std::vector<AgentId> agent_ids() const {
    std::vector<AgentId> out;
    out.reserve(agents_.size());
    for (const auto& [id, _] : agents_) out.push_back(id);
    return out;
  }

  std::uint64_t discarded() const noexcept { return discarded_; }
  const Traffic& traffic(const AgentId& id) const { return at(id).traffic; }

  /// Writes one traffic record per agent: publish counts and active time.
  void emit_traffic(Tick end) const {
    if (!log_) return;
    for (const auto& [id, slot] : agents_) {
      LogRecord r;
      r.tick = end;
      r.kind = EventKind::Traffic;
      r.agent = id.str();
      Tick since = slot.traffic.active_since;
      Tick until = slot.traffic.active_until < 0 ? end : slot.traffic.active_until;
      r.detail["published"] = slot.traffic.published;
      r.detail["telemetry"] = slot.traffic.telemetry;
      r.detail["active_ticks"] = since < 0 ? Tick{0} : std::max<Tick>(0, until - since);
      log_->append(std::move(r));
    }
  }

  bool telemetry(std::string_view topic) const {
    for (const auto& p : options_.telemetry_prefixes)
      if (topic.substr(0, p.size()) == p) return true;
    return false;
  }

  // BrokerObserver
  void on_publish(const Message& msg, std::uint64_t seq, std::size_t matched) override {
    bool tele = telemetry(msg.topic.str());
    if (Slot* sender = find_slot(msg.sender)) {
      ++sender->traffic.published;
      if (tele) ++sender->traffic.telemetry;
    }
    if (!log_ || (tele && !log_->full())) return;
    LogRecord r;
    r.tick = msg.sent_at;
    r.kind = EventKind::Publish;
    r.agent = msg.sender.str();
    r.topic = msg.topic.str();
    r.detail["seq"] = seq;
    r.detail["matched"] = matched;
    if (msg.correlation) r.detail["corr"] = msg.correlation->str();
    r.detail["bytes"] = msg.payload.size();
    log_->append(std::move(r));
  }

  void on_drop(const Message& msg, std::uint64_t seq, const AgentId& receiver,
               DropReason reason) override {
    if (!log_ || (telemetry(msg.topic.str()) && !log_->full())) return;
    LogRecord r;
    r.tick = msg.sent_at;
    r.kind = EventKind::Drop;
    r.agent = msg.sender.str();
    r.topic = msg.topic.str();
    r.detail["seq"] = seq;
    r.detail["receiver"] = receiver.str();
    r.detail["reason"] = to_string(reason);
    if (msg.correlation) r.detail["corr"] = msg.correlation->str();
    log_->append(std::move(r));
  }

 private:
  friend class AgentContext;

  struct Slot {
    HolonNode node;
    std::unique_ptr<AgentBehavior> behavior;
    std::vector<SubscriptionId> subscriptions;
    bool in_handler = false;
    std::deque<std::function<void()>> mailbox;
    Traffic traffic;
  };

  Slot* find_slot(const AgentId& id) const {
    auto it = index_.find(id);
    return it == index_.end() ? nullptr : it->second;
  }
  Slot& at(const AgentId& id) const {
    Slot* s = find_slot(id);
    if (!s) throw UnknownAgent("unknown agent '" + id.str() + "'");
    return *s;
  }

  template <typename Fill>
  void trace(EventKind kind, const std::string& agent, Fill&& fill) {
    if (!log_) return;
    LogRecord r;
    r.tick = now();
    r.kind = kind;
    r.agent = agent;
    fill(r);
    log_->append(std::move(r));
  }

  void on_delivery(const Delivery& d) {
    Slot* slot = find_slot(d.subscriber);
    if (!slot) return;
    bool tele = telemetry(d.message->topic.str());
    if (log_ && (!tele || log_->full()) && slot->node.state == AgentState::Active) {
      LogRecord r;
      r.tick = now();
      r.kind = EventKind::Deliver;
      r.agent = d.subscriber.str();
      r.topic = d.message->topic.str();
      r.detail["seq"] = d.publish_seq;
      r.detail["sub"] = d.subscription;
      r.detail["sender"] = d.message->sender.str();
      if (d.message->correlation) r.detail["corr"] = d.message->correlation->str();
      log_->append(std::move(r));
    }
    dispatch(*slot, *d.message, d.publish_seq);
  }

  void dispatch(Slot& slot, const Message& msg, std::uint64_t publish_seq) {
    if (slot.node.state != AgentState::Active) {
      ++discarded_;
      trace(EventKind::Discard, slot.node.id.str(), [&](LogRecord& r) {
        r.topic = msg.topic.str();
        r.detail["seq"] = publish_seq;
        r.detail["state"] = to_string(slot.node.state);
      });
      return;
    }
    if (slot.in_handler) {
      run_serialized(slot, [msg](Slot& s, AgentContext& ctx) { s.behavior->on_message(ctx, msg); });
      return;
    }
    run_serialized(slot, [&msg](Slot& s, AgentContext& ctx) { s.behavior->on_message(ctx, msg); });
  }

  void fire(Slot& slot, const TimerFn& fn) {
    if (slot.node.state != AgentState::Active) return;
    if (slot.in_handler) {
      run_serialized(slot, [fn](Slot&, AgentContext& ctx) { fn(ctx); });
      return;
    }
    run_serialized(slot, [&fn](Slot&, AgentContext& ctx) { fn(ctx); });
  }

  // A nested call for the same agent (e.g. a behavior dispatching to itself)
  // is queued and runs after the current hook returns. Slots are never
  // erased, so holding a Slot& across hooks is safe.
  template <typename Body>
  void run_serialized(Slot& slot, Body&& body) {
    if (slot.in_handler) {
      slot.mailbox.emplace_back([this, &slot, b = std::function<void(Slot&, AgentContext&)>(body)]() {
        if (slot.node.state != AgentState::Active) return;
        AgentContext ctx(*this, slot.node.id);
        b(slot, ctx);
      });
      return;
    }
    slot.in_handler = true;
    bool full = log_ && log_->full();
    if (full) trace(EventKind::HandlerStart, slot.node.id.str(), [](LogRecord&) {});
    AgentContext ctx(*this, slot.node.id);
    try {
      body(slot, ctx);
    } catch (...) {
      slot.in_handler = false;
      throw;
    }
    if (full) trace(EventKind::HandlerEnd, slot.node.id.str(), [](LogRecord&) {});
    slot.in_handler = false;
    drain(slot);
  }

  void drain(Slot& s) {
    bool full = log_ && log_->full();
    while (!s.mailbox.empty() && !s.in_handler) {
      auto next = std::move(s.mailbox.front());
      s.mailbox.pop_front();
      s.in_handler = true;
      if (full) trace(EventKind::HandlerStart, s.node.id.str(), [](LogRecord&) {});
      next();
      if (full) trace(EventKind::HandlerEnd, s.node.id.str(), [](LogRecord&) {});
      s.in_handler = false;
    }
  }

  Engine* engine_;
  MessageBroker* broker_;
  EventLog* log_;
  RuntimeOptions options_;
  std::map<AgentId, Slot> agents_;  // ordered for reproducible iteration
  std::unordered_map<AgentId, Slot*> index_;
  std::uint64_t discarded_ = 0;
  std::uint64_t auto_id_ = 0;
};

inline Tick AgentContext::now() const noexcept { return rt_->now(); }

inline void AgentContext::publish(const TopicName& topic, std::string payload,
                                  std::optional<CorrelationId> correlation) {
  Message msg{topic, std::move(payload), self_, std::move(correlation), rt_->now()};
  rt_->broker().publish(msg);
}

inline SubscriptionId AgentContext::subscribe(const TopicName& filter) {
  SubscriptionId id = rt_->broker().subscribe(self_, filter);
  auto& subs = rt_->at(self_).subscriptions;
  if (std::find(subs.begin(), subs.end(), id) == subs.end()) subs.push_back(id);
  return id;
}

inline void AgentContext::unsubscribe(SubscriptionId id) {
  rt_->broker().unsubscribe(id);
  std::erase(rt_->at(self_).subscriptions, id);
}

inline AgentId AgentContext::spawn(AgentId child, std::unique_ptr<AgentBehavior> behavior) {
  return rt_->spawn(std::move(child), std::move(behavior), self_);
}

inline void AgentContext::set_timer(Tick delay, TimerFn fn) {
  rt_->schedule(self_, delay, std::move(fn));
}

inline EventLog* AgentContext::log() const noexcept { return rt_->log(); }

inline void AgentContext::record(LogRecord r) const {
  if (EventLog* l = rt_->log()) {
    if (r.agent.empty()) r.agent = self_.str();
    r.tick = rt_->now();
    l->append(std::move(r));
  }
}

}  // namespace agentflow
