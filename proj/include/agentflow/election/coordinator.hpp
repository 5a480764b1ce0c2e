#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/election/heartbeat.hpp"
#include "agentflow/election/load.hpp"
#include "agentflow/election/round.hpp"
#include "agentflow/election/wire.hpp"
#include "agentflow/logistics/request.hpp"
#include "agentflow/logistics/response.hpp"

namespace agentflow::election {

struct CoordinatorConfig {
  std::string zone;
  std::vector<CandidateInfo> services;  // the cluster this coordinator represents
  std::vector<AgentId> peers;           // every coordinator, this one included
  std::string request_topic = "svc/tasks";
  Tick window_ticks = 20;
  Tick heartbeat_interval = 5;
  int misses_allowed = 3;
  logistics::RetryPolicy dispatch_policy{40, 1, 0};
  // Wait before retrying a re-election that found no live candidate.
  Tick empty_retry_ticks = 100;
};

/// Loading Coordinator. Represents one service cluster in the election of
/// every task posted on the request topic:
///
///   1. on a request (or the first rank notice for an unknown task) it opens
///      the task's round and broadcasts the load of its least-loaded live
///      service, or an abstention, on "election/<task>/rank";
///   2. it decides once every peer was heard or the window elapsed; every
///      coordinator decides on the same rank set, so they agree;
///   3. the coordinator owning the winner dispatches the work order through a
///      courier, publishes "election/<task>/result" and answers the client.
///
/// Services are watched through their heartbeats. Work held by a suspected
/// service is orphaned and re-elected under a new generation of the round.
class LoadingCoordinator : public AgentBehavior {
 public:
  enum class Stage { Electing, Dispatching, Assigned, NoService, Done };

  struct TaskEntry {
    WorkOrder order;
    std::string reply_topic;
    std::string correlation;
    int generation = -1;
    std::optional<ElectionRound> round;
    bool replacement = false;
    bool opener = false;
    bool ranked = false;  // own rank published for the current generation
    Stage stage = Stage::Electing;
    std::optional<AgentId> assignee;  // set only on the owning coordinator
  };

  explicit LoadingCoordinator(CoordinatorConfig cfg)
      : cfg_(std::move(cfg)), heartbeats_(cfg_.heartbeat_interval, cfg_.misses_allowed) {
    if (cfg_.window_ticks <= 0) throw ConfigError("election window must be positive");
    cfg_.dispatch_policy.validate();
    for (const auto& s : cfg_.services) {
      compute_load(s);  // validates capacity and load
      ServiceView v;
      v.info = s;
      services_.emplace(s.agent, std::move(v));
    }
    peers_.insert(cfg_.peers.begin(), cfg_.peers.end());
  }

  void on_start(AgentContext& ctx) override {
    peers_.insert(ctx.id());
    ctx.subscribe(cfg_.request_topic);
    ctx.subscribe("election/#");
    ctx.subscribe("hb/" + cfg_.zone + "/#");
    done_topic_ = "zone/" + cfg_.zone + "/done";
    ctx.subscribe(done_topic_);
    for (const auto& [id, _] : services_) heartbeats_.track(id, ctx.now());
    ctx.set_timer(cfg_.heartbeat_interval, [this](AgentContext& c) { check_heartbeats(c); });
  }

  void on_message(AgentContext& ctx, const Message& msg) override {
    if (courier_.on_message(ctx, msg)) return;
    const std::string& topic = msg.topic.str();
    if (topic == cfg_.request_topic) {
      on_request(ctx, msg);
    } else if (topic.starts_with("election/")) {
      if (topic.ends_with("/rank")) on_rank(ctx, msg);
    } else if (topic.starts_with("hb/")) {
      on_heartbeat(ctx, msg);
    } else if (topic == done_topic_) {
      on_done(ctx, msg);
    }
  }

  /// Current load estimate for a service of this cluster.
  std::optional<LoadRank> estimate(const AgentId& service) const {
    auto it = services_.find(service);
    if (it == services_.end()) return std::nullopt;
    return compute_load(it->second.estimated());
  }

  const std::map<TaskId, TaskEntry>& tasks() const noexcept { return tasks_; }
  const HeartbeatState& heartbeats() const noexcept { return heartbeats_; }
  std::uint64_t late_ranks() const noexcept { return late_ranks_; }
  std::uint64_t malformed() const noexcept { return malformed_; }

 private:
  struct ServiceView {
    CandidateInfo info;  // pending_work as of the newest heartbeat
    Tick heartbeat_sent = -1;
    double in_flight = 0.0;                          // dispatched, not yet acknowledged
    std::vector<std::pair<Tick, double>> unreported;  // acknowledged after the newest heartbeat
    std::set<TaskId> active;                         // accepted and not reported done

    CandidateInfo estimated() const {
      CandidateInfo c = info;
      c.pending_work += in_flight;
      for (const auto& [_, w] : unreported) c.pending_work += w;
      return c;
    }
  };

  // ---- inbound -----------------------------------------------------------

  void on_request(AgentContext& ctx, const Message& msg) {
    auto env = logistics::parse_request(ctx, msg);
    if (!env) {
      ++malformed_;
      return;
    }
    WorkOrder order;
    try {
      order = WorkOrder::decode(env->body);
    } catch (const MalformedRequest&) {
      ++malformed_;
      return;
    }
    auto [it, fresh] = tasks_.try_emplace(order.task);
    TaskEntry& e = it->second;
    if (fresh) {
      e.order = order;
      e.reply_topic = env->reply_topic;
      e.correlation = env->correlation;
      open_round(ctx, e, 0, false, false, true);
      return;
    }
    if (e.reply_topic.empty()) {
      e.reply_topic = env->reply_topic;
      e.correlation = env->correlation;
    }
    if (!e.ranked && e.generation == 0) {
      // The round was joined through a peer's rank; take part now.
      publish_rank(ctx, e);
      try_decide(ctx, e.order.task, e.generation);
      return;
    }
    // A client retry.
    if (e.assignee && (e.stage == Stage::Assigned || e.stage == Stage::Done)) {
      answer_client(ctx, e, "assigned " + e.assignee->str());
    } else if (e.stage == Stage::NoService && !e.replacement) {
      open_round(ctx, e, e.generation + 1, false, false, true);
    }
  }

  void on_rank(AgentContext& ctx, const Message& msg) {
    if (msg.sender == ctx.id()) return;  // own rank was collected locally
    RankNotice n;
    try {
      n = RankNotice::decode(msg.payload);
    } catch (const MalformedRequest&) {
      ++malformed_;
      return;
    }
    auto [it, fresh] = tasks_.try_emplace(n.order.task);
    TaskEntry& e = it->second;
    if (fresh) e.order = n.order;
    if (e.reply_topic.empty() && !n.reply_topic.empty()) {
      e.reply_topic = n.reply_topic;
      e.correlation = n.correlation;
    }
    // A first-generation round is joined silently until the client's request
    // arrives; replacement rounds have no request, so peers rank at once.
    if (n.generation > e.generation)
      open_round(ctx, e, n.generation, n.generation > 0, false, n.generation > 0);

    std::optional<LoadRank> rank;
    if (n.candidate) rank = LoadRank{*n.candidate, n.value, make_round_id(n.order.task, n.generation)};
    if (n.generation < e.generation || e.round->decided()) {
      ++late_ranks_;
      if (n.generation == e.generation) e.round->collect(msg.sender, rank);
      note(ctx, EventKind::LateRank, e.order.task, make_round_id(n.order.task, n.generation),
           [&](Json& d) {
             d["gen"] = n.generation;
             d["from"] = msg.sender.str();
           });
      return;
    }
    e.round->collect(msg.sender, rank);
    try_decide(ctx, e.order.task, e.generation);
  }

  void on_heartbeat(AgentContext& ctx, const Message& msg) {
    auto it = services_.find(msg.sender);
    if (it == services_.end()) return;
    ServiceView& v = it->second;
    heartbeats_.observe(msg.sender, ctx.now());
    if (msg.sent_at <= v.heartbeat_sent) return;  // reordered
    double pending = 0.0;
    try {
      pending = parse_double(msg.payload);
    } catch (const MalformedRequest&) {
      ++malformed_;
      return;
    }
    v.heartbeat_sent = msg.sent_at;
    v.info.pending_work = std::max(0.0, pending);
    std::erase_if(v.unreported, [&](const auto& p) { return p.first <= msg.sent_at; });
  }

  void on_done(AgentContext&, const Message& msg) {
    TaskId task(msg.payload);
    auto s = services_.find(msg.sender);
    if (s != services_.end()) s->second.active.erase(task);
    auto it = tasks_.find(task);
    if (it != tasks_.end() && it->second.assignee == msg.sender) it->second.stage = Stage::Done;
  }

  // ---- rounds ------------------------------------------------------------

  std::optional<LoadRank> best_local(const RoundId& round) const {
    std::optional<LoadRank> best;
    for (const auto& [id, v] : services_) {
      if (heartbeats_.suspected(id)) continue;
      LoadRank r = compute_load(v.estimated(), round);
      if (!best || ranks_before(r, *best)) best = r;
    }
    return best;
  }

  void open_round(AgentContext& ctx, TaskEntry& e, int generation, bool replacement, bool opener,
                  bool rank_now) {
    RoundId id = make_round_id(e.order.task, generation);
    e.generation = generation;
    e.replacement = replacement;
    e.opener = opener;
    e.ranked = false;
    e.stage = Stage::Electing;
    e.round = ElectionRound::open(e.order.task, id, ctx.now(), cfg_.window_ticks);
    note(ctx, EventKind::RoundOpen, e.order.task, id, [&](Json& d) {
      d["gen"] = generation;
      d["replacement"] = replacement;
      d["opener"] = opener;
      d["deadline"] = e.round->window_deadline();
    });
    if (rank_now) publish_rank(ctx, e);

    TaskId task = e.order.task;
    ctx.set_timer(cfg_.window_ticks,
                  [this, task, generation](AgentContext& c) { try_decide(c, task, generation); });
    try_decide(ctx, task, generation);
  }

  /// Collects this coordinator's own rank (or abstention) and broadcasts it.
  void publish_rank(AgentContext& ctx, TaskEntry& e) {
    e.ranked = true;
    std::optional<LoadRank> mine = best_local(e.round->id());
    if (!e.round->decided()) e.round->collect(ctx.id(), mine);
    RankNotice n;
    n.generation = e.generation;
    n.order = e.order;
    n.reply_topic = e.reply_topic;
    n.correlation = e.correlation;
    if (mine) {
      n.candidate = mine->candidate;
      n.value = mine->value;
    }
    ctx.publish(rank_topic(e.order.task), n.encode());
  }

  void try_decide(AgentContext& ctx, const TaskId& task, int generation) {
    auto it = tasks_.find(task);
    if (it == tasks_.end()) return;
    TaskEntry& e = it->second;
    if (e.generation != generation || !e.round || !e.round->ready(ctx.now(), peers_)) return;

    ElectionRound& round = *e.round;
    bool complete = round.heard_all(peers_);
    std::optional<AgentId> winner;
    try {
      winner = round.decide();
    } catch (const ElectionFailed&) {
    }
    note(ctx, EventKind::Decide, task, round.id(), [&](Json& d) {
      d["gen"] = generation;
      d["winner"] = winner ? Json(winner->str()) : Json(nullptr);
      Json ranks = Json::object();
      for (const auto& [cand, r] : round.ranks()) ranks[cand.str()] = r.value;
      d["ranks"] = std::move(ranks);
      d["opened"] = round.opened_at();
      d["complete"] = complete;
      d["opener"] = e.opener;
    });

    if (!winner) {
      e.stage = Stage::NoService;
      no_service(ctx, e);
      return;
    }
    if (services_.contains(*winner)) assign_task(ctx, e, *winner);
  }

  void no_service(AgentContext& ctx, TaskEntry& e) {
    note(ctx, EventKind::NoService, e.order.task, e.round->id(),
         [&](Json& d) { d["gen"] = e.generation; });
    if (e.replacement) {
      // Orphaned work must not be dropped; the opener retries later.
      if (!e.opener) return;
      TaskId task = e.order.task;
      int gen = e.generation;
      ctx.set_timer(cfg_.empty_retry_ticks, [this, task, gen](AgentContext& c) {
        auto it = tasks_.find(task);
        if (it != tasks_.end() && it->second.generation == gen && it->second.stage == Stage::NoService)
          reelect(c, it->second, "no_service");
      });
      return;
    }
    if (ctx.id() == *peers_.begin()) answer_client(ctx, e, "unavailable");
  }

  /// Dispatches the decided task to `winner`, a service of this cluster.
  void assign_task(AgentContext& ctx, TaskEntry& e, const AgentId& winner) {
    if (!e.round || !e.round->decided() || e.round->outcome() != winner)
      throw PreconditionViolation("assign on an undecided round or to a non-winner");
    if (heartbeats_.suspected(winner)) {
      reelect(ctx, e, "winner_suspected");
      return;
    }
    ServiceView& v = services_.at(winner);
    v.in_flight += e.order.work;
    e.stage = Stage::Dispatching;
    RoundId round = e.round->id();
    note(ctx, EventKind::Dispatch, e.order.task, round, [&](Json& d) {
      d["gen"] = e.generation;
      d["to"] = winner.str();
      d["work"] = e.order.work;
    });

    TaskId task = e.order.task;
    int gen = e.generation;
    double work = e.order.work;
    logistics::RequestLogistic courier{ctx.id(), TopicName::topic(service_request_topic(winner)),
                                       cfg_.dispatch_policy};
    courier_.send(ctx, courier, CorrelationId(round.str()), e.order.encode(),
                  [this, task, gen, work, winner](AgentContext& c, const logistics::PendingRequest&,
                                                  const std::string* body) {
                    ServiceView& sv = services_.at(winner);
                    sv.in_flight = std::max(0.0, sv.in_flight - work);
                    TaskEntry& te = tasks_.at(task);
                    bool current = te.generation == gen && te.stage == Stage::Dispatching;
                    if (!body || !body->starts_with("accepted")) {
                      note(c, EventKind::DispatchTimeout, task, make_round_id(task, gen), [&](Json& d) {
                        d["gen"] = gen;
                        d["to"] = winner.str();
                        d["reason"] = body ? *body : std::string("timeout");
                      });
                      if (current) reelect(c, te, "dispatch_failed");
                      return;
                    }
                    sv.unreported.emplace_back(c.now(), work);
                    if (!current) return;
                    on_accepted(c, te, winner);
                  });
  }

  void on_accepted(AgentContext& ctx, TaskEntry& e, const AgentId& winner) {
    e.stage = Stage::Assigned;
    e.assignee = winner;
    services_.at(winner).active.insert(e.order.task);
    ctx.publish(result_topic(e.order.task), e.round->id().str() + ' ' + winner.str());
    if (!e.replacement) answer_client(ctx, e, "assigned " + winner.str());
    if (heartbeats_.suspected(winner)) orphan(ctx, winner);
  }

  void answer_client(AgentContext& ctx, const TaskEntry& e, std::string body) {
    if (e.reply_topic.empty() || e.correlation.empty()) return;
    logistics::ResponseLogistic{TopicName::topic(e.reply_topic), CorrelationId(e.correlation), ctx.id()}
        .respond(ctx, std::move(body));
  }

  void reelect(AgentContext& ctx, TaskEntry& e, const char* reason) {
    int gen = e.generation + 1;
    e.assignee.reset();
    note(ctx, EventKind::Reelect, e.order.task, make_round_id(e.order.task, gen), [&](Json& d) {
      d["gen"] = gen;
      d["reason"] = reason;
    });
    open_round(ctx, e, gen, true, true, true);
  }

  // ---- failure detection -------------------------------------------------

  void check_heartbeats(AgentContext& ctx) {
    for (const AgentId& id : heartbeats_.tick(ctx.now())) {
      if (ctx.log()) {
        LogRecord r;
        r.kind = EventKind::Suspect;
        r.detail["service"] = id.str();
        r.detail["last_seen"] = heartbeats_.last_seen().at(id);
        ctx.record(std::move(r));
      }
      orphan(ctx, id);
    }
    ctx.set_timer(cfg_.heartbeat_interval, [this](AgentContext& c) { check_heartbeats(c); });
  }

  void orphan(AgentContext& ctx, const AgentId& service) {
    ServiceView& v = services_.at(service);
    std::set<TaskId> held;
    held.swap(v.active);
    for (const TaskId& task : held) {
      TaskEntry& e = tasks_.at(task);
      if (e.assignee != service || e.stage != Stage::Assigned) continue;
      note(ctx, EventKind::TaskOrphaned, task, e.round->id(), [&](Json& d) {
        d["gen"] = e.generation;
        d["failed"] = service.str();
      });
      reelect(ctx, e, "orphaned");
    }
  }

  template <typename Fill>
  static void note(AgentContext& ctx, EventKind kind, const TaskId& task, const RoundId& round,
                   Fill&& fill) {
    if (!ctx.log()) return;
    LogRecord r;
    r.kind = kind;
    r.task = task.str();
    r.round = round.str();
    r.detail = Json::object();
    fill(r.detail);
    ctx.record(std::move(r));
  }

  CoordinatorConfig cfg_;
  HeartbeatState heartbeats_;
  std::map<AgentId, ServiceView> services_;
  std::set<AgentId> peers_;
  std::map<TaskId, TaskEntry> tasks_;
  logistics::RequestTable courier_;
  std::string done_topic_;
  std::uint64_t late_ranks_ = 0;
  std::uint64_t malformed_ = 0;
};

}  // namespace agentflow::election
