#pragma once

#include <string>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/election/wire.hpp"
#include "agentflow/logistics/request.hpp"

namespace agentflow::sim {

/// A robot: a client that asks the coordinator layer to place each of its
/// tasks with a controller. The task id doubles as the request correlation.
class AmrAgent : public AgentBehavior {
 public:
  AmrAgent(std::string service_topic, logistics::RetryPolicy policy)
      : service_topic_(std::move(service_topic)), policy_(policy) {}

  void submit(AgentContext& ctx, const TaskId& task, double work) {
    if (ctx.log()) {
      LogRecord r;
      r.kind = EventKind::TaskCreated;
      r.task = task.str();
      r.detail["work"] = work;
      ctx.record(std::move(r));
    }
    logistics::RequestLogistic courier{ctx.id(), TopicName::topic(service_topic_), policy_};
    requests_.send(ctx, courier, CorrelationId(task.str()), election::WorkOrder{task, work}.encode(),
                   [task](AgentContext& c, const logistics::PendingRequest&, const std::string* body) {
                     if (body && body->starts_with("assigned")) return;
                     if (!c.log()) return;
                     LogRecord r;
                     r.kind = EventKind::TaskTimedOut;
                     r.task = task.str();
                     r.detail["reason"] = body ? "no_service" : "timeout";
                     c.record(std::move(r));
                   });
  }

  void on_message(AgentContext& ctx, const Message& msg) override { requests_.on_message(ctx, msg); }

  const logistics::RequestTable& requests() const noexcept { return requests_; }

 private:
  std::string service_topic_;
  logistics::RetryPolicy policy_;
  logistics::RequestTable requests_;
};

}  // namespace agentflow::sim
