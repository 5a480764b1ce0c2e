#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <utility>
#include <variant>
#include <vector>

#include "agentflow/errors.hpp"
#include "agentflow/messaging/broker.hpp"
#include "agentflow/types.hpp"

namespace agentflow {

/// Within one tick, message events run before timers; ties inside a phase
/// break on the sequence number assigned when the event was scheduled.
enum class Phase : std::uint8_t { Message = 0, Timer = 1 };

/// Single-threaded discrete-event loop ordered by (tick, phase, sequence).
class Engine final : public DeliverySink {
 public:
  using Action = std::function<void()>;
  using DeliveryHandler = std::function<void(const Delivery&)>;

  Tick now() const noexcept { return now_; }

  void set_delivery_handler(DeliveryHandler handler) { on_delivery_ = std::move(handler); }

  void schedule(Delivery delivery) override {
    if (delivery.at < now_) throw PreconditionViolation("delivery scheduled in the past");
    Tick at = delivery.at;
    push(at, Phase::Message, std::move(delivery));
  }

  void at(Tick tick, Action action, Phase phase = Phase::Timer) {
    if (tick < now_) throw PreconditionViolation("event scheduled in the past");
    push(tick, phase, std::move(action));
  }

  void after(Tick delay, Action action, Phase phase = Phase::Timer) {
    at(now_ + delay, std::move(action), phase);
  }

  /// Runs every event with tick <= end, then leaves the clock at `end`.
  void run_until(Tick end) {
    while (!heap_.empty() && heap_.front().tick <= end) step();
    if (end > now_) now_ = end;
  }

  /// Runs until the queue is empty or `stop` returns true after an event.
  template <typename Pred>
  void run_while(Pred keep_going) {
    while (!heap_.empty() && keep_going()) step();
  }

  bool step() {
    if (heap_.empty()) return false;
    std::pop_heap(heap_.begin(), heap_.end(), Later{});
    Key key = heap_.back();
    heap_.pop_back();
    Body body = std::move(bodies_[key.slot]);
    free_.push_back(key.slot);
    now_ = key.tick;
    ++processed_;
    if (auto* d = std::get_if<Delivery>(&body)) {
      if (on_delivery_) on_delivery_(*d);
    } else {
      std::get<Action>(body)();
    }
    return true;
  }

  std::size_t pending() const noexcept { return heap_.size(); }
  std::uint64_t processed() const noexcept { return processed_; }
  Tick next_tick() const noexcept { return heap_.empty() ? now_ : heap_.front().tick; }

 private:
  using Body = std::variant<Delivery, Action>;

  // The heap orders small keys; bodies live in a slot pool.
  struct Key {
    Tick tick;
    std::uint64_t seq;
    std::uint32_t slot;
    Phase phase;
  };

  struct Later {
    bool operator()(const Key& a, const Key& b) const noexcept {
      if (a.tick != b.tick) return a.tick > b.tick;
      if (a.phase != b.phase) return a.phase > b.phase;
      return a.seq > b.seq;
    }
  };

  template <typename B>
  void push(Tick tick, Phase phase, B&& body) {
    std::uint32_t slot;
    if (free_.empty()) {
      slot = static_cast<std::uint32_t>(bodies_.size());
      bodies_.emplace_back(std::forward<B>(body));
    } else {
      slot = free_.back();
      free_.pop_back();
      bodies_[slot] = std::forward<B>(body);
    }
    heap_.push_back(Key{tick, ++seq_, slot, phase});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
  }

  Tick now_ = 0;
  std::uint64_t seq_ = 0;
  std::uint64_t processed_ = 0;
  std::vector<Key> heap_;
  std::vector<Body> bodies_;
  std::vector<std::uint32_t> free_;
  DeliveryHandler on_delivery_;
};

}  // namespace agentflow
