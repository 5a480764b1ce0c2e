// A client asks a service for work over a reply topic of its own, then
// three candidates are ranked and the least loaded one wins.

#include <iostream>
#include <memory>
#include <vector>

#include "agentflow/agentflow.hpp"

using namespace agentflow;

namespace {

class Echo : public AgentBehavior {
 public:
  void on_start(AgentContext& ctx) override { ctx.subscribe("svc/echo"); }
  void on_message(AgentContext& ctx, const Message& msg) override {
    endpoint_.serve(ctx, msg, [](AgentContext& c, const logistics::Envelope& env) {
      return "echo from " + c.id().str() + ": " + env.body;
    });
  }

 private:
  logistics::ServiceEndpoint endpoint_;
};

class Client : public AgentBehavior {
 public:
  void on_message(AgentContext& ctx, const Message& msg) override { table_.on_message(ctx, msg); }

  void ask(AgentContext& ctx, std::string text) {
    logistics::RequestLogistic courier{ctx.id(), TopicName::topic("svc/echo"), {50, 2, 10}};
    table_.send(ctx, courier, CorrelationId("q1"), std::move(text),
                [](AgentContext& c, const logistics::PendingRequest& req, const std::string* body) {
                  std::cout << "t=" << c.now() << " " << req.correlation << " -> "
                            << (body ? *body : std::string("timed out")) << "\n";
                });
  }

 private:
  logistics::RequestTable table_;
};

}  // namespace

int main() {
  EventLog log;
  Engine engine;
  SimulatedBroker broker(LinkSampler(7, NetworkModel{1, 10, 0.0, {}}), engine);
  AgentRuntime rt(engine, broker, &log);
  broker.set_observer(&rt);

  rt.spawn(AgentId("echo"), std::make_unique<Echo>());
  rt.spawn(AgentId("client"), std::make_unique<Client>());
  rt.inject(AgentId("client"), 5, [&rt](AgentContext& ctx) {
    static_cast<Client*>(rt.behavior(AgentId("client")))->ask(ctx, "hello");
  });
  engine.run_until(200);

  auto round = election::ElectionRound::open(TaskId("T1"), RoundId("T1.g0"), engine.now(), 20);
  std::vector<election::CandidateInfo> candidates{
      {AgentId("ctrl-a"), 6.0, 2.0}, {AgentId("ctrl-b"), 3.0, 1.0}, {AgentId("ctrl-c"), 2.0, 0.5}};
  for (const auto& c : candidates) {
    auto rank = election::compute_load(c, round.id());
    std::cout << c.agent << " load " << rank.value << "\n";
    round.collect(rank);
  }
  std::cout << "winner " << round.decide() << "\n";
  std::cout << log.size() << " trace records\n";
}
