#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/election/wire.hpp"
#include "agentflow/logistics/response.hpp"

namespace agentflow::election {

struct ServiceAgentConfig {
  double capacity = 1.0;         // work units per tick
  std::string zone;              // cluster the agent reports to
  Tick heartbeat_interval = 5;
};

/// A service provider (controller). Accepts work orders on
/// "service/<id>/req", executes them FIFO at `capacity` work units per tick,
/// reports completions on "zone/<zone>/done" and its queued work on
/// "hb/<zone>/<id>" every heartbeat interval.
class ServiceAgent : public AgentBehavior {
 public:
  explicit ServiceAgent(ServiceAgentConfig cfg) : cfg_(std::move(cfg)) {
    if (!(cfg_.capacity > 0.0) || !std::isfinite(cfg_.capacity))
      throw InvalidCapacity("service capacity must be positive and finite");
    if (cfg_.heartbeat_interval <= 0) throw ConfigError("heartbeat interval must be positive");
  }

  void on_start(AgentContext& ctx) override {
    ctx.subscribe(service_request_topic(ctx.id()));
    hb_topic_ = TopicName::topic("hb/" + cfg_.zone + "/" + ctx.id().str());
    done_topic_ = TopicName::topic("zone/" + cfg_.zone + "/done");
    busy_until_ = static_cast<double>(ctx.now());
    heartbeat(ctx);
  }

  void on_message(AgentContext& ctx, const Message& msg) override {
    endpoint_.serve(ctx, msg, [this](AgentContext& c, const logistics::Envelope& env) {
      try {
        return accept(c, WorkOrder::decode(env.body));
      } catch (const MalformedRequest&) {
        return std::string("rejected");
      }
    });
  }

  double pending_work() const noexcept { return pending_work_; }
  std::size_t queued() const noexcept { return queue_depth_; }
  std::uint64_t completed() const noexcept { return completed_; }

 private:
  std::string accept(AgentContext& ctx, const WorkOrder& order) {
    // A retried dispatch for a task already taken is acknowledged again
    // without queueing it twice.
    if (!accepted_.emplace(order.task, order.work).second) return "accepted " + ctx.id().str();

    pending_work_ += order.work;
    ++queue_depth_;
    double now = static_cast<double>(ctx.now());
    double start = std::max(now, busy_until_);
    busy_until_ = start + order.work / cfg_.capacity;
    Tick start_tick = static_cast<Tick>(std::ceil(start));
    Tick finish_tick = std::max(start_tick, static_cast<Tick>(std::ceil(busy_until_)));

    task_record(ctx, EventKind::TaskAssigned, order.task, [&](Json& d) {
      d["work"] = order.work;
      d["queue"] = queue_depth_;
      d["start"] = start_tick;
      d["finish"] = finish_tick;
    });
    TaskId task = order.task;
    if (start_tick <= ctx.now()) {
      task_record(ctx, EventKind::TaskStarted, task, [](Json&) {});
    } else {
      ctx.set_timer(start_tick - ctx.now(), [this, task](AgentContext& c) {
        task_record(c, EventKind::TaskStarted, task, [](Json&) {});
      });
    }
    double work = order.work;
    ctx.set_timer(finish_tick - ctx.now(), [this, task, work](AgentContext& c) {
      pending_work_ = std::max(0.0, pending_work_ - work);
      --queue_depth_;
      ++completed_;
      task_record(c, EventKind::TaskCompleted, task, [](Json&) {});
      c.publish(done_topic_, task.str());
    });
    return "accepted " + ctx.id().str();
  }

  void heartbeat(AgentContext& ctx) {
    ctx.publish(hb_topic_, format_double(pending_work_));
    ctx.set_timer(cfg_.heartbeat_interval, [this](AgentContext& c) { heartbeat(c); });
  }

  template <typename Fill>
  static void task_record(AgentContext& ctx, EventKind kind, const TaskId& task, Fill&& fill) {
    if (!ctx.log()) return;
    LogRecord r;
    r.kind = kind;
    r.task = task.str();
    r.detail = Json::object();
    fill(r.detail);
    ctx.record(std::move(r));
  }

  ServiceAgentConfig cfg_;
  logistics::ServiceEndpoint endpoint_;
  TopicName hb_topic_;
  TopicName done_topic_;
  std::map<TaskId, double> accepted_;
  double pending_work_ = 0.0;
  double busy_until_ = 0.0;
  std::size_t queue_depth_ = 0;
  std::uint64_t completed_ = 0;
};

}  // namespace agentflow::election
