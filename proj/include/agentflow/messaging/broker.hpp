#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/messaging/message.hpp"
#include "agentflow/messaging/network.hpp"
#include "agentflow/messaging/topic.hpp"

namespace agentflow {

struct Subscription {
  SubscriptionId id = 0;
  AgentId subscriber;
  TopicName filter;
};

/// Minimal broker surface. Concrete transports (an MQTT or DDS client, or the
/// simulated transport below) implement it; agents only ever see this.
class MessageBroker {
 public:
  virtual ~MessageBroker() = default;

  /// Identical (subscriber, filter) pairs return the existing id.
  virtual SubscriptionId subscribe(const AgentId& subscriber, const TopicName& filter) = 0;
  virtual void unsubscribe(SubscriptionId id) = 0;
  virtual void publish(const Message& msg) = 0;
};

/// One scheduled hand-off of a message to one subscription.
struct Delivery {
  Tick at = 0;
  SubscriptionId subscription = 0;
  AgentId subscriber;
  std::uint64_t publish_seq = 0;
  std::shared_ptr<const Message> message;
};

/// Receives deliveries from a simulated broker (the broker notifier).
class DeliverySink {
 public:
  virtual ~DeliverySink() = default;
  virtual void schedule(Delivery delivery) = 0;
};

enum class DropReason { Loss, Partition, Scripted };

inline const char* to_string(DropReason r) {
  switch (r) {
    case DropReason::Loss: return "loss";
    case DropReason::Partition: return "partition";
    case DropReason::Scripted: return "scripted";
  }
  return "?";
}

/// Optional tap on broker traffic, used for tracing and audits.
class BrokerObserver {
 public:
  virtual ~BrokerObserver() = default;
  virtual void on_publish(const Message&, std::uint64_t /*publish_seq*/, std::size_t /*matched*/) {}
  virtual void on_drop(const Message&, std::uint64_t /*publish_seq*/, const AgentId& /*receiver*/,
                       DropReason) {}
};

struct BrokerOptions {
  std::size_t max_payload = kDefaultMaxPayload;
};

/// In-process broker over a simulated network. At-most-once: every matching,
/// reachable subscription gets at most one delivery per publish, scheduled at
/// sent_at + latency. All public operations are serialized by one mutex.
class SimulatedBroker final : public MessageBroker {
 public:
  /// Returns true when the (message, receiver) link must be dropped.
  using DropRule = std::function<bool(const Message&, const AgentId& receiver)>;

  SimulatedBroker(LinkSampler sampler, DeliverySink& sink, BrokerOptions options = {})
      : sampler_(std::move(sampler)), sink_(&sink), options_(options) {}

  void set_observer(BrokerObserver* observer) {
    std::lock_guard lock(mutex_);
    observer_ = observer;
  }

  /// Scripted fault injection on top of the stochastic network model.
  void set_drop_rule(DropRule rule) {
    std::lock_guard lock(mutex_);
    drop_rule_ = std::move(rule);
  }

  SubscriptionId subscribe(const AgentId& subscriber, const TopicName& filter) override {
    if (filter.empty()) throw InvalidTopic("empty filter");
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(subscriber, filter.str());
    if (auto it = by_pair_.find(key); it != by_pair_.end()) return it->second;
    SubscriptionId id = ++last_id_;
    subs_.emplace(id, Subscription{id, subscriber, filter});
    by_pair_.emplace(std::move(key), id);
    if (filter.wildcard())
      wildcard_.emplace_back(id, filter);
    else
      exact_[filter.str()].push_back(id);
    return id;
  }

  void unsubscribe(SubscriptionId id) override {
    std::lock_guard lock(mutex_);
    auto it = subs_.find(id);
    if (it == subs_.end()) throw UnknownSubscription("unknown subscription " + std::to_string(id));
    const Subscription& s = it->second;
    by_pair_.erase(std::make_pair(s.subscriber, s.filter.str()));
    if (s.filter.wildcard()) {
      std::erase_if(wildcard_, [id](const auto& w) { return w.first == id; });
    } else {
      auto bucket = exact_.find(s.filter.str());
      std::erase(bucket->second, id);
      if (bucket->second.empty()) exact_.erase(bucket);
    }
    subs_.erase(it);
  }

  void publish(const Message& msg) override {
    if (msg.topic.empty() || msg.topic.wildcard())
      throw InvalidTopic("cannot publish to '" + msg.topic.str() + "'");
    if (msg.payload.size() > options_.max_payload)
      throw PayloadTooLarge("payload of " + std::to_string(msg.payload.size()) +
                            " bytes exceeds limit " + std::to_string(options_.max_payload));

    std::lock_guard lock(mutex_);
    std::uint64_t seq = ++publish_seq_;
    auto matched = matching(msg.topic);
    if (observer_) observer_->on_publish(msg, seq, matched.size());
    if (matched.empty()) return;

    auto shared = std::make_shared<const Message>(msg);
    auto key = sampler_.message_key(msg.sender, msg.topic.str(), msg.sent_at, msg.payload);
    for (SubscriptionId id : matched) {
      const Subscription& s = subs_.at(id);
      if (!sampler_.reachable(msg.sender, s.subscriber)) {
        if (observer_) observer_->on_drop(msg, seq, s.subscriber, DropReason::Partition);
        continue;
      }
      if (drop_rule_ && drop_rule_(msg, s.subscriber)) {
        if (observer_) observer_->on_drop(msg, seq, s.subscriber, DropReason::Scripted);
        continue;
      }
      if (sampler_.dropped(key, s.subscriber)) {
        if (observer_) observer_->on_drop(msg, seq, s.subscriber, DropReason::Loss);
        continue;
      }
      sink_->schedule(Delivery{msg.sent_at + sampler_.latency(key, s.subscriber), id,
                               s.subscriber, seq, shared});
    }
  }

  std::size_t subscription_count() const {
    std::lock_guard lock(mutex_);
    return subs_.size();
  }

  std::vector<Subscription> subscriptions_of(const AgentId& subscriber) const {
    std::lock_guard lock(mutex_);
    std::vector<Subscription> out;
    for (const auto& [id, s] : subs_)
      if (s.subscriber == subscriber) out.push_back(s);
    std::sort(out.begin(), out.end(), [](const Subscription& a, const Subscription& b) { return a.id < b.id; });
    return out;
  }

  const NetworkModel& network() const noexcept { return sampler_.model(); }

 private:
  // Ascending subscription id, so fan-out order is reproducible.
  std::vector<SubscriptionId> matching(const TopicName& topic) const {
    std::vector<SubscriptionId> out;
    if (auto it = exact_.find(topic.str()); it != exact_.end()) out = it->second;
    std::size_t exact_count = out.size();
    for (const auto& [id, filter] : wildcard_)
      if (match_filter(filter, topic)) out.push_back(id);
    if (exact_count != 0 && exact_count != out.size())
      std::inplace_merge(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(exact_count),
                         out.end());
    return out;
  }

  mutable std::mutex mutex_;
  LinkSampler sampler_;
  DeliverySink* sink_;
  BrokerOptions options_;
  BrokerObserver* observer_ = nullptr;
  DropRule drop_rule_;

  SubscriptionId last_id_ = 0;
  std::uint64_t publish_seq_ = 0;
  std::unordered_map<SubscriptionId, Subscription> subs_;
  std::map<std::pair<AgentId, std::string>, SubscriptionId> by_pair_;
  std::unordered_map<std::string, std::vector<SubscriptionId>> exact_;
  std::vector<std::pair<SubscriptionId, TopicName>> wildcard_;
};

}  // namespace agentflow
