#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "agentflow/agent/runtime.hpp"
#include "agentflow/election/coordinator.hpp"
#include "agentflow/election/service_agent.hpp"
#include "agentflow/engine.hpp"
#include "agentflow/messaging/broker.hpp"
#include "agentflow/sim/amr.hpp"
#include "agentflow/sim/config.hpp"
#include "agentflow/sim/metrics.hpp"
#include "agentflow/sim/schedule.hpp"

namespace agentflow::sim {

struct SimResult {
  MetricsReport metrics;
  EventLog log;
};

/// Warehouse topology: one Loading Coordinator per zone of amrs_per_zone
/// robots, controllers dealt round-robin over the zones, robots grouped under
/// their zone's coordinator. All of it hangs below one "warehouse" holon.
class Simulator {
 public:
  static constexpr const char* kServiceTopic = "svc/tasks";

  explicit Simulator(SimConfig config)
      : cfg_((config.validate(), std::move(config))),
        log_(cfg_.trace_level),
        broker_(LinkSampler(cfg_.seed, cfg_.network), engine_),
        runtime_(engine_, broker_, &log_, RuntimeOptions{{"hb/"}}) {
    broker_.set_observer(&runtime_);
  }

  const SimConfig& config() const noexcept { return cfg_; }
  Engine& engine() noexcept { return engine_; }
  AgentRuntime& runtime() noexcept { return runtime_; }
  SimulatedBroker& broker() noexcept { return broker_; }
  EventLog& log() noexcept { return log_; }

  SimResult run() && {
    build();
    engine_.run_until(cfg_.duration_ticks);
    Tick limit = cfg_.duration_ticks + cfg_.drain_ticks;
    while (engine_.now() < limit && !settled()) engine_.run_until(std::min(limit, engine_.now() + 1000));
    finish();
    MetricsReport m = compute_metrics(log_, cfg_.ticks_per_second,
                                      throughput_windows(cfg_.duration_ticks, cfg_.faults.window_start,
                                                         cfg_.faults.window_end, cfg_.throughput_window()));
    m.seed = cfg_.seed;
    log_.clear_listeners();
    return SimResult{m, std::move(log_)};
  }

 private:
  void build() {
    LogRecord start;
    start.tick = 0;
    start.kind = EventKind::RunStart;
    start.agent = "sim";
    start.detail["config"] = to_json(cfg_);
    log_.append(std::move(start));
    log_.add_listener([this](const LogRecord& r) { track(r); });

    runtime_.spawn(AgentId("warehouse"), std::make_unique<AgentBehavior>());

    int zones = cfg_.n_zones();
    std::vector<AgentId> coordinators;
    for (int z = 0; z < zones; ++z) coordinators.emplace_back(coordinator_name(cfg_, z));
    std::vector<std::vector<int>> members(static_cast<std::size_t>(zones));
    for (int i = 0; i < cfg_.n_controllers; ++i) members[static_cast<std::size_t>(i % zones)].push_back(i);

    for (int z = 0; z < zones; ++z) {
      election::CoordinatorConfig cc;
      cc.zone = zone_name(cfg_, z);
      for (int i : members[static_cast<std::size_t>(z)])
        cc.services.push_back({AgentId(controller_name(cfg_, i)), 0.0, cfg_.controller_capacity});
      cc.peers = coordinators;
      cc.request_topic = kServiceTopic;
      cc.window_ticks = cfg_.election.window_ticks;
      cc.heartbeat_interval = cfg_.election.heartbeat_interval;
      cc.misses_allowed = cfg_.election.misses_allowed;
      cc.dispatch_policy = {cfg_.election.dispatch_timeout_ticks, cfg_.election.dispatch_retries, 0};
      cc.empty_retry_ticks = cfg_.election.empty_retry_ticks;
      runtime_.spawn(coordinators[static_cast<std::size_t>(z)],
                     std::make_unique<election::LoadingCoordinator>(std::move(cc)), AgentId("warehouse"));
    }
    for (int z = 0; z < zones; ++z) {
      for (int i : members[static_cast<std::size_t>(z)]) {
        election::ServiceAgentConfig sc{cfg_.controller_capacity, zone_name(cfg_, z),
                                        cfg_.election.heartbeat_interval};
        AgentId id(controller_name(cfg_, i));
        runtime_.spawn(id, std::make_unique<election::ServiceAgent>(sc), coordinators[static_cast<std::size_t>(z)]);
        edges_[edge_name(cfg_, i % cfg_.n_edge_nodes())].push_back(id);
      }
    }
    logistics::RetryPolicy client{cfg_.client.timeout_ticks, cfg_.client.max_retries, cfg_.client.backoff_ticks};
    for (int i = 0; i < cfg_.n_amrs; ++i) {
      AgentId id(amr_name(cfg_, i));
      amrs_.push_back(id);
      runtime_.spawn(id, std::make_unique<AmrAgent>(kServiceTopic, client),
                     coordinators[static_cast<std::size_t>(i / cfg_.amrs_per_zone)]);
    }

    auto pick = make_stream(cfg_.seed, Stream::Clients);
    std::vector<Tick> arrivals =
        generate_tasks(cfg_.task_rate_per_min, cfg_.duration_ticks, cfg_.seed, cfg_.ticks_per_second);
    generated_ = arrivals.size();
    int width = id_width(static_cast<long long>(arrivals.size()), 6);
    for (std::size_t k = 0; k < arrivals.size(); ++k) {
      AgentId amr = amrs_[uniform_below(pick, amrs_.size())];
      TaskId task(padded("T", static_cast<long long>(k), width));
      double work = cfg_.work_units;
      runtime_.inject(amr, arrivals[k], [this, amr, task, work](AgentContext& ctx) {
        static_cast<AmrAgent*>(runtime_.behavior(amr))->submit(ctx, task, work);
      });
    }

    for (const auto& f : fault_schedule(cfg_)) {
      std::vector<AgentId> victims;
      if (auto e = edges_.find(f.node); e != edges_.end())
        victims = e->second;
      else
        victims.emplace_back(f.node);
      engine_.at(f.tick, [this, victims]() {
        for (const auto& v : victims) runtime_.fail(v);
      }, Phase::Message);
    }
  }

  // Live task bookkeeping so the drain phase can stop once nothing is left.
  void track(const LogRecord& r) {
    switch (r.kind) {
      case EventKind::TaskCompleted:
        if (completed_.insert(r.task).second) open_.erase(r.task);
        break;
      case EventKind::TaskCreated: open_.insert(r.task); break;
      case EventKind::TaskAssigned: assigned_.insert(r.task); break;
      case EventKind::TaskTimedOut:
        if (!assigned_.contains(r.task)) open_.erase(r.task);
        break;
      default: break;
    }
  }

  bool settled() const { return open_.empty(); }

  void finish() {
    Tick end = engine_.now();
    runtime_.emit_traffic(end);
    TaskLedger ledger = TaskLedger::from(log_);
    auto counts = ledger.outcome_counts();
    LogRecord r;
    r.tick = end;
    r.kind = EventKind::RunEnd;
    r.agent = "sim";
    r.detail["generated"] = ledger.generated();
    r.detail["completed"] = counts[TaskOutcome::Completed];
    r.detail["orphaned_unrecovered"] = counts[TaskOutcome::OrphanedUnrecovered];
    r.detail["timed_out"] = counts[TaskOutcome::TimedOut];
    r.detail["pending_at_end"] = counts[TaskOutcome::PendingAtEnd];
    r.detail["discarded"] = runtime_.discarded();
    log_.append(std::move(r));
  }

  SimConfig cfg_;
  EventLog log_;
  Engine engine_;
  SimulatedBroker broker_;
  AgentRuntime runtime_;
  std::vector<AgentId> amrs_;
  std::map<std::string, std::vector<AgentId>> edges_;
  std::set<std::string> open_, completed_, assigned_;
  std::size_t generated_ = 0;
};

/// Runs one simulation to completion.
inline SimResult run(const SimConfig& config) { return Simulator(config).run(); }

}  // namespace agentflow::sim
