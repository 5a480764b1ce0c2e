#include <gtest/gtest.h>

#include "../oracles.hpp"
#include "harness.hpp"

using namespace agentflow;
using namespace agentflow::logistics;
using testing_support::World;

namespace {

class Client : public AgentBehavior {
 public:
  explicit Client(RetryPolicy p, std::string service = "svc/echo") : policy_(p), service_(std::move(service)) {}

  void on_message(AgentContext& ctx, const Message& msg) override { table.on_message(ctx, msg); }

  void ask(AgentContext& ctx, const std::string& corr, const std::string& body) {
    RequestLogistic courier{ctx.id(), TopicName::topic(service_), policy_};
    table.send(ctx, courier, CorrelationId(corr), body,
               [this](AgentContext& c, const PendingRequest& req, const std::string* reply) {
                 outcomes.push_back({req.correlation.str(), reply ? *reply : std::string("<timeout>"), c.now()});
               });
  }

  struct Outcome {
    std::string corr, body;
    Tick at;
  };
  RequestTable table;
  std::vector<Outcome> outcomes;

 private:
  RetryPolicy policy_;
  std::string service_;
};

class Echo : public AgentBehavior {
 public:
  int copies = 1;
  void on_start(AgentContext& ctx) override { ctx.subscribe("svc/echo"); }
  void on_message(AgentContext& ctx, const Message& msg) override {
    for (int i = 0; i < copies; ++i)
      endpoint.serve(ctx, msg, [](AgentContext&, const Envelope& env) { return env.correlation + ":" + env.body; });
  }
  ServiceEndpoint endpoint;
};

Client* add_client(World& w, const std::string& id, RetryPolicy p) {
  auto c = std::make_unique<Client>(p);
  Client* raw = c.get();
  w.runtime.spawn(AgentId(id), std::move(c));
  return raw;
}

Echo* add_echo(World& w) {
  auto e = std::make_unique<Echo>();
  Echo* raw = e.get();
  w.runtime.spawn(AgentId("echo"), std::move(e));
  return raw;
}

void ask_at(World& w, const std::string& client, Tick at, std::string corr, std::string body = "x") {
  w.runtime.inject(AgentId(client), at, [&w, client, corr, body](AgentContext& ctx) {
    static_cast<Client*>(w.runtime.behavior(AgentId(client)))->ask(ctx, corr, body);
  });
}

}  // namespace

TEST(Envelope, RoundTrips) {
  Envelope e{"reply/a/c1", "c1", std::string("bin\0ary", 7)};
  Envelope d = decode(encode(e));
  EXPECT_EQ(d.reply_topic, e.reply_topic);
  EXPECT_EQ(d.correlation, e.correlation);
  EXPECT_EQ(d.body, e.body);
}

TEST(Envelope, RejectsMalformedInput) {
  std::string good = encode(Envelope{"reply/a/c1", "c1", "body"});
  EXPECT_THROW(decode(""), MalformedRequest);
  EXPECT_THROW(decode(std::string(1, '\x02') + good.substr(1)), MalformedRequest);
  EXPECT_THROW(decode(good.substr(0, good.size() - 1)), MalformedRequest);
  EXPECT_THROW(decode(good + "z"), MalformedRequest);
  EXPECT_THROW(decode(encode(Envelope{"reply/a/c1", "", "b"})), MalformedRequest);
  EXPECT_THROW(decode(encode(Envelope{"", "c1", "b"})), MalformedRequest);
  EXPECT_THROW(decode(encode(Envelope{"reply/#", "c1", "b"})), MalformedRequest);
}

TEST(ReplyTopic, MatchesOracleAndParsesBack) {
  for (std::string client : {"amr-001", "a", "client.7"})
    for (std::string corr : {"T000001", "q", "x.g3"}) {
      auto t = make_reply_topic(AgentId(client), CorrelationId(corr));
      EXPECT_EQ(t.str(), oracle::reply_topic(client, corr));
      std::string_view c, k;
      ASSERT_TRUE(parse_reply_topic(t.str(), c, k));
      EXPECT_EQ(c, client);
      EXPECT_EQ(k, corr);
    }
  EXPECT_THROW(make_reply_topic(AgentId("a/b"), CorrelationId("c")), InvalidTopic);
  EXPECT_THROW(make_reply_topic(AgentId("a"), CorrelationId("")), InvalidTopic);
  std::string_view c, k;
  EXPECT_FALSE(parse_reply_topic("reply/a", c, k));
  EXPECT_FALSE(parse_reply_topic("other/a/b", c, k));
  EXPECT_FALSE(parse_reply_topic("reply/a/b/c", c, k));
}

TEST(RetryPolicy, Validation) {
  EXPECT_THROW((RetryPolicy{0, 0, 0}).validate(), ConfigError);
  EXPECT_THROW((RetryPolicy{1, -1, 0}).validate(), ConfigError);
  EXPECT_THROW((RetryPolicy{1, 0, -1}).validate(), ConfigError);
}

TEST(Request, ResponseReachesOnlyTheAskingClient) {
  World w(NetworkModel{1, 10, 0.0, {}}, 3);
  add_echo(w);
  Client* a = add_client(w, "a", {100, 0, 0});
  Client* b = add_client(w, "b", {100, 0, 0});
  ask_at(w, "a", 1, "k1", "from-a");
  ask_at(w, "b", 1, "k1", "from-b");
  w.engine.run_until(200);
  ASSERT_EQ(a->outcomes.size(), 1u);
  ASSERT_EQ(b->outcomes.size(), 1u);
  EXPECT_EQ(a->outcomes[0].body, "k1:from-a");
  EXPECT_EQ(b->outcomes[0].body, "k1:from-b");
  EXPECT_TRUE(sim::audit_selectivity(w.log).passed());
}

TEST(Request, RetriesFollowTheDeadlineSchedule) {
  World w(NetworkModel{1, 1, 1.0, {}});
  Client* a = add_client(w, "a", {50, 2, 7});
  ask_at(w, "a", 10, "k");
  w.engine.run_until(1000);

  std::vector<long long> publishes;
  for (const auto& r : w.of(EventKind::Publish))
    if (r.detail.value("corr", "") == "k") publishes.push_back(r.tick);
  EXPECT_EQ(publishes, oracle::publish_ticks(10, 50, 7, 2));
  ASSERT_EQ(a->outcomes.size(), 1u);
  EXPECT_EQ(a->outcomes[0].body, "<timeout>");
  EXPECT_EQ(a->outcomes[0].at, oracle::timed_out_tick(10, 50, 7, 2));
  EXPECT_EQ(w.of(EventKind::RequestRetry).size(), 2u);
  EXPECT_EQ(w.of(EventKind::RequestTimedOut).size(), 1u);
  EXPECT_EQ(a->table.find(CorrelationId("k"))->state, RequestState::TimedOut);
}

TEST(Request, ZeroRetriesTimesOutAfterOneAttempt) {
  World w(NetworkModel{1, 1, 1.0, {}});
  Client* a = add_client(w, "a", {30, 0, 0});
  ask_at(w, "a", 0, "k");
  w.engine.run_until(100);
  EXPECT_EQ(w.of(EventKind::Publish).size(), 1u);
  ASSERT_EQ(a->outcomes.size(), 1u);
  EXPECT_EQ(a->outcomes[0].at, 30);
}

TEST(Request, FirstResponseWinsDuplicatesCounted) {
  World w(NetworkModel{1, 5, 0.0, {}}, 11);
  Echo* e = add_echo(w);
  e->copies = 3;
  Client* a = add_client(w, "a", {100, 0, 0});
  ask_at(w, "a", 0, "k");
  w.engine.run_until(200);
  ASSERT_EQ(a->outcomes.size(), 1u);
  EXPECT_EQ(a->outcomes[0].body, "k:x");
  EXPECT_EQ(a->table.duplicates(), 2u);  // already in flight when the first one landed
  EXPECT_EQ(w.of(EventKind::DuplicateResponse).size(), 2u);
  EXPECT_EQ(e->endpoint.served(), 3u);
}

TEST(Request, ReusedCorrelationIsRejected) {
  World w;
  add_echo(w);
  add_client(w, "a", {100, 0, 0});
  ask_at(w, "a", 0, "k");
  ask_at(w, "a", 1, "k");
  EXPECT_THROW(w.engine.run_until(10), PreconditionViolation);
}

TEST(Request, MalformedRequestIsDroppedAndTraced) {
  World w;
  Echo* e = add_echo(w);
  testing_support::spawn_probe(w, "raw", {});
  w.runtime.inject(AgentId("raw"), 0, [](AgentContext& ctx) { ctx.publish("svc/echo", "garbage"); });
  w.engine.run_until(10);
  EXPECT_EQ(e->endpoint.malformed(), 1u);
  EXPECT_EQ(w.of(EventKind::MalformedRequest).size(), 1u);
}

TEST(Request, ManyClientsNoCrossDelivery) {
  World w(NetworkModel{1, 10, 0.0, {}}, 5);
  add_echo(w);
  std::vector<Client*> clients;
  for (int i = 0; i < 20; ++i) {
    std::string id = "c" + std::to_string(i);
    clients.push_back(add_client(w, id, {100, 1, 0}));
    for (int k = 0; k < 3; ++k) ask_at(w, id, k * 3 + i % 4, "r" + std::to_string(k), id);
  }
  w.engine.run_until(500);
  for (int i = 0; i < 20; ++i) {
    std::string id = "c" + std::to_string(i);
    ASSERT_EQ(clients[static_cast<std::size_t>(i)]->outcomes.size(), 3u);
    for (const auto& o : clients[static_cast<std::size_t>(i)]->outcomes) EXPECT_EQ(o.body, o.corr + ":" + id);
  }
  auto audit = sim::audit_selectivity(w.log);
  EXPECT_EQ(audit.checked, 60u);
  EXPECT_TRUE(audit.passed());
}
