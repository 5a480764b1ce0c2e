// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Scenario files are read from AGENTFLOW_SCENARIO_DIR.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "../oracles.hpp"
#include "agentflow/agentflow.hpp"

using namespace agentflow;
namespace fs = std::filesystem;

namespace {

const fs::path kScenarios = AGENTFLOW_SCENARIO_DIR;

struct Outcome {
  bool pass = true;
  std::string detail;
};

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

 private:
  std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

std::string fmt(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// ---- 1: selectivity -------------------------------------------------------

class EchoService : public AgentBehavior {
 public:
  void on_start(AgentContext& ctx) override { ctx.subscribe("svc/echo"); }
  void on_message(AgentContext& ctx, const Message& msg) override {
    endpoint_.serve(ctx, msg, [](AgentContext&, const logistics::Envelope& env) { return env.body; });
  }

 private:
  logistics::ServiceEndpoint endpoint_;
};

class EchoClient : public AgentBehavior {
 public:
  void on_message(AgentContext& ctx, const Message& msg) override { table_.on_message(ctx, msg); }
  void ask(AgentContext& ctx, const std::string& corr) {
    logistics::RequestLogistic courier{ctx.id(), TopicName::topic("svc/echo"), {200, 2, 20}};
    // The body names the asker; a cross-delivered reply would carry someone else's name.
    table_.send(ctx, courier, CorrelationId(corr), ctx.id().str() + "|" + corr,
                [this](AgentContext&, const logistics::PendingRequest& req, const std::string* body) {
                  replies.emplace_back(req.correlation.str(), body ? *body : std::string());
                });
  }
  std::vector<std::pair<std::string, std::string>> replies;

 private:
  logistics::RequestTable table_;
};

Outcome selectivity() {
  const int kClients = 100, kRequests = 5, kSeeds = 30;
  std::uint64_t checked = 0, violations = 0, mismatched = 0;
  for (int seed = 1; seed <= kSeeds; ++seed) {
    EventLog log;
    Engine engine;
    SimulatedBroker broker(LinkSampler(static_cast<std::uint64_t>(seed), NetworkModel{1, 10, 0.0, {}}), engine);
    AgentRuntime runtime(engine, broker, &log);
    broker.set_observer(&runtime);
    runtime.spawn(AgentId("echo"), std::make_unique<EchoService>());

    std::mt19937_64 g(static_cast<std::uint64_t>(seed));
    std::vector<EchoClient*> clients;
    for (int i = 0; i < kClients; ++i) {
      auto c = std::make_unique<EchoClient>();
      clients.push_back(c.get());
      AgentId id("c" + std::to_string(i));
      runtime.spawn(id, std::move(c));
      for (int k = 0; k < kRequests; ++k) {
        EchoClient* raw = clients.back();
        std::string corr = "r" + std::to_string(k);
        runtime.inject(id, static_cast<Tick>(g() % 50), [raw, corr](AgentContext& ctx) { raw->ask(ctx, corr); });
      }
    }
    engine.run_until(2000);

    auto audit = sim::audit_selectivity(log);
    checked += audit.checked;
    violations += audit.violations;
    for (int i = 0; i < kClients; ++i) {
      const auto& got = clients[static_cast<std::size_t>(i)]->replies;
      std::set<std::string> seen;
      for (const auto& [corr, body] : got) {
        seen.insert(corr);
        if (body != "c" + std::to_string(i) + "|" + corr) ++mismatched;
      }
      if (got.size() != kRequests || seen.size() != kRequests) ++mismatched;
    }
  }
  Outcome o;
  o.pass = checked > 0 && violations == 0 && mismatched == 0;
  o.detail = std::to_string(checked) + " reply deliveries audited, " + std::to_string(violations) +
             " violations, " + std::to_string(mismatched) + " client-side mismatches";
  return o;
}

// ---- 2 & 3: argmin and scale invariance ----------------------------------

struct ElectionCase {
  std::vector<oracle::Candidate> candidates;  // in arrival order
};

std::vector<ElectionCase> election_cases(int n) {
  std::mt19937_64 g(20240601);
  const double caps[] = {0.5, 1.0, 2.0, 4.0};
  std::vector<ElectionCase> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    ElectionCase c;
    int size = 2 + static_cast<int>(g() % 49);
    std::vector<int> ids(100);
    for (int k = 0; k < 100; ++k) ids[static_cast<std::size_t>(k)] = k;
    std::shuffle(ids.begin(), ids.end(), g);
    for (int k = 0; k < size; ++k) {
      char name[16];
      std::snprintf(name, sizeof name, "svc-%02d", ids[static_cast<std::size_t>(k)]);
      // Small integer loads over power-of-two capacities: ties are common.
      c.candidates.push_back({name, static_cast<double>(g() % 21), caps[g() % 4]});
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string elect(const ElectionCase& c, double scale, std::mt19937_64& g) {
  auto round = election::ElectionRound::open(TaskId("T"), RoundId("T.g0"), 0, 20);
  for (const auto& cand : c.candidates) {
    election::CandidateInfo info{AgentId(cand.id), cand.pending * scale, cand.capacity};
    round.collect(election::compute_load(info, round.id()));
    // A repeated rank from the same candidate must not displace the first.
    if (g() % 4 == 0) round.collect(election::LoadRank{AgentId(cand.id), 0.0, round.id()});
  }
  return round.decide().str();
}

Outcome argmin(const std::vector<ElectionCase>& cases, std::vector<std::string>& winners) {
  std::mt19937_64 g(7);
  std::size_t wrong = 0, ties = 0;
  winners.clear();
  for (const auto& c : cases) {
    std::string w = elect(c, 1.0, g);
    winners.push_back(w);
    if (w != oracle::argmin(c.candidates)) ++wrong;
    std::set<double> loads;
    for (const auto& x : c.candidates) loads.insert(x.pending / x.capacity);
    ties += loads.size() < c.candidates.size();
  }
  Outcome o;
  o.pass = wrong == 0;
  o.detail = std::to_string(cases.size()) + " elections (" + std::to_string(ties) + " with ties), " +
             std::to_string(wrong) + " disagree with brute force";
  return o;
}

Outcome scale_invariance(const std::vector<ElectionCase>& cases, const std::vector<std::string>& winners) {
  std::mt19937_64 g(99);
  std::uniform_real_distribution<double> exponent(-6.0, 6.0);
  std::size_t changed = 0;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    double k = std::pow(10.0, exponent(g));
    if (elect(cases[i], k, g) != winners[i]) ++changed;
  }
  Outcome o;
  o.pass = changed == 0;
  o.detail = std::to_string(cases.size()) + " elections rescaled by constants in [1e-6, 1e6], " +
             std::to_string(changed) + " winners changed";
  return o;
}

// ---- 4: scalability -------------------------------------------------------

struct SweepMeans {
  std::map<double, std::vector<sim::MetricsReport>> by_value;
};

SweepMeans run_sweep(const cli::Scenario& s) {
  SweepMeans out;
  for (const auto& v : s.sweep->values)
    for (auto seed : s.sweep->seeds) out.by_value[v.get<double>()].push_back(sim::run(s.at(&v, seed)).metrics);
  return out;
}

double average(const std::vector<sim::MetricsReport>& runs, const std::function<double(const sim::MetricsReport&)>& f,
               const std::function<bool(const sim::MetricsReport&)>& use = nullptr) {
  std::vector<double> xs;
  for (const auto& m : runs)
    if (!use || use(m)) xs.push_back(f(m));
  return oracle::mean(xs);
}

Outcome scalability() {
  Stopwatch clock;
  auto sweep = run_sweep(cli::load_scenario(kScenarios / "scalability.json"));
  Outcome o;
  std::vector<double> lat;
  std::string series;
  for (const auto& [n, runs] : sweep.by_value) {
    lat.push_back(average(runs, [](const auto& m) { return m.mean_assignment_latency_ms; }));
    series += (series.empty() ? "" : " ") + fmt(n, 0) + ":" + fmt(lat.back());
  }
  bool monotone = std::is_sorted(lat.begin(), lat.end());
  double ratio = lat.back() / lat.front();
  double t = clock.seconds();
  o.pass = monotone && ratio <= 3.0 && t < 300.0;
  o.detail = "latency ms " + series + "; ratio " + fmt(ratio) + (monotone ? "" : "; NOT monotone") + "; " +
             fmt(t, 1) + " s";
  return o;
}

// ---- 5, 6, 7: resilience ---------------------------------------------------

struct Resilience {
  Outcome success, convergence, monotone;
};

Resilience resilience() {
  Stopwatch clock;
  auto sweep = run_sweep(cli::load_scenario(kScenarios / "resilience.json"));
  double t = clock.seconds();
  Resilience r;

  const auto& base = sweep.by_value.at(0.20);
  double success = average(base, [](const auto& m) { return m.task_success_rate; });
  r.success.pass = success >= 95.0;
  r.success.detail = "mean success " + fmt(success, 3) + "% over " + std::to_string(base.size()) +
                     " seeds at 20% controller failures (threshold 95%)";

  double conv = average(
      base, [](const auto& m) { return m.mean_election_convergence_ms; },
      [](const auto& m) { return !m.convergence_undefined; });
  std::size_t defined = 0;
  for (const auto& m : base) defined += !m.convergence_undefined;
  r.convergence.pass = defined > 0 && conv > 0.0 && conv <= 20.0;
  r.convergence.detail = "mean re-election convergence " + fmt(conv) + " ms over " + std::to_string(defined) +
                         " seeds (window 20 ms, reference 18 ms)";

  std::vector<double> mttr, dev, orphans, reassign;
  std::string rows;
  for (const auto& [f, runs] : sweep.by_value) {
    mttr.push_back(average(runs, [](const auto& m) { return m.mttr_s; }, [](const auto& m) { return !m.mttr_undefined; }));
    dev.push_back(average(runs, [](const auto& m) { return m.throughput_deviation_pct; },
                          [](const auto& m) { return !m.throughput_undefined; }));
    orphans.push_back(average(runs, [](const auto& m) { return static_cast<double>(m.orphaned_tasks); }));
    reassign.push_back(average(runs, [](const auto& m) { return m.reassignment_success_rate; }));
    rows += " | " + fmt(f * 100, 0) + "%: mttr " + fmt(mttr.back()) + " s, dev " + fmt(dev.back()) + "%, orphans " +
            fmt(orphans.back()) + ", reassigned " + fmt(reassign.back()) + "%";
  }
  bool ok = std::is_sorted(mttr.begin(), mttr.end()) && std::is_sorted(dev.begin(), dev.end()) &&
            std::is_sorted(orphans.begin(), orphans.end());
  for (double x : reassign) ok = ok && x >= 96.0;
  r.monotone.pass = ok && t < 300.0;
  r.monotone.detail = fmt(t, 1) + " s" + rows;
  return r;
}

// ---- 8: fault-free baseline ------------------------------------------------

Outcome fault_free() {
  auto res = sim::run(cli::load_scenario(kScenarios / "fault_free.json").base());
  // Independent tally straight from the log.
  std::set<std::string> created, completed, orphaned, timed_out;
  std::uint64_t drops = 0;
  for (const auto& r : res.log.records()) {
    switch (r.kind) {
      case EventKind::TaskCreated: created.insert(r.task); break;
      case EventKind::TaskCompleted: completed.insert(r.task); break;
      case EventKind::TaskOrphaned: orphaned.insert(r.task); break;
      case EventKind::TaskTimedOut: timed_out.insert(r.task); break;
      case EventKind::Drop: ++drops; break;
      default: break;
    }
  }
  const auto& m = res.metrics;
  bool conserved = completed == created && orphaned.empty() && timed_out.empty() &&
                   m.tasks_generated == created.size() &&
                   m.tasks_completed + m.tasks_orphaned_unrecovered + m.tasks_timed_out + m.tasks_pending_at_end ==
                       m.tasks_generated;
  auto audit = sim::audit_conservation(res.log);
  Outcome o;
  o.pass = m.task_success_rate == 100.0 && m.orphaned_tasks == 0 && conserved && audit.passed() && drops == 0 &&
           !created.empty();
  o.detail = std::to_string(created.size()) + " tasks, " + std::to_string(completed.size()) + " completed, success " +
             fmt(m.task_success_rate, 3) + "%, orphans " + std::to_string(m.orphaned_tasks) + ", drops " +
             std::to_string(drops) + ", conservation " + (audit.passed() ? "holds" : "broken");
  return o;
}

// ---- 9: determinism ---------------------------------------------------------

Outcome determinism() {
  Outcome o;
  fs::path root = fs::temp_directory_path() / "agentflow_acceptance_determinism";
  fs::remove_all(root);
  std::ostringstream sink;
  auto run_into = [&](const std::string& name) {
    cli::CommandEnv env;
    env.out_dir = root / name;
    env.out = &sink;
    env.err = &sink;
    env.write_events = true;
    return cli::cmd_run(kScenarios / "baseline.json", {}, env);
  };
  int a = run_into("a"), b = run_into("b");
  std::vector<std::string> differing;
  std::size_t bytes = 0;
  for (const char* f : {"events.jsonl", "metrics.json", "metrics.csv"}) {
    std::string x = slurp(root / "a" / f), y = slurp(root / "b" / f);
    bytes += x.size();
    if (x.empty() || x != y) differing.push_back(f);
  }
  fs::remove_all(root);
  o.pass = a == cli::kOk && b == cli::kOk && differing.empty();
  o.detail = "baseline run twice: " + std::to_string(bytes) + " bytes compared, " +
             (differing.empty() ? std::string("identical") : "differs in " + differing.front()) +
             ", exit codes " + std::to_string(a) + "/" + std::to_string(b);
  return o;
}

// ---- 10: retry contract -----------------------------------------------------

Outcome retry_contract() {
  sim::SimConfig c;
  c.n_amrs = 50;
  c.n_controllers = 3;
  c.task_rate_per_min = 120;
  c.duration_ticks = 20'000;
  c.network.drop_probability = 1.0;
  c.faults.controller_failure_fraction = 0.0;
  c.client.max_retries = 2;
  auto res = sim::run(c);

  std::map<std::string, Tick> created, timed_out;
  std::map<std::string, std::vector<long long>> publishes;
  for (const auto& r : res.log.records()) {
    if (r.kind == EventKind::TaskCreated) created[r.task] = r.tick;
    if (r.kind == EventKind::TaskTimedOut) timed_out[r.task] = r.tick;
    if (r.kind == EventKind::Publish && r.topic == sim::Simulator::kServiceTopic) {
      const std::string corr = r.detail.value("corr", std::string());
      // Attempts after the timeout would be a contract breach too.
      if (!timed_out.contains(corr)) publishes[corr].push_back(r.tick);
      else publishes[corr].push_back(-1);
    }
  }
  std::size_t bad = 0;
  for (const auto& [task, t0] : created) {
    auto expected = oracle::publish_ticks(t0, c.client.timeout_ticks, c.client.backoff_ticks, c.client.max_retries);
    if (publishes[task] != expected) ++bad;
    auto it = timed_out.find(task);
    if (it == timed_out.end() ||
        it->second != oracle::timed_out_tick(t0, c.client.timeout_ticks, c.client.backoff_ticks, c.client.max_retries))
      ++bad;
  }
  Outcome o;
  o.pass = !created.empty() && bad == 0 && timed_out.size() == created.size();
  o.detail = std::to_string(created.size()) + " tasks under total loss, each expected to publish exactly " +
             std::to_string(c.client.max_retries + 1) + " times then time out; " + std::to_string(bad) +
             " deviations";
  return o;
}

}  // namespace

int main() {
  int failures = 0;
  auto report = [&](int n, const char* name, const Outcome& o, double seconds) {
    std::cout << (o.pass ? "PASS" : "FAIL") << " " << n << " " << name << ": " << o.detail << " [" << fmt(seconds, 1)
              << " s]" << std::endl;
    failures += !o.pass;
  };
  auto timed = [&](int n, const char* name, double limit, const std::function<Outcome()>& f) {
    Stopwatch clock;
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double t = clock.seconds();
    if (limit > 0 && t >= limit) {
      o.pass = false;
      o.detail += "; exceeded " + fmt(limit, 0) + " s";
    }
    report(n, name, o, t);
  };

  timed(1, "selectivity", 10, selectivity);

  auto cases = election_cases(10'000);
  std::vector<std::string> winners;
  timed(2, "argmin", 10, [&] { return argmin(cases, winners); });
  timed(3, "scale invariance", 0, [&] { return scale_invariance(cases, winners); });

  timed(4, "scalability trend", 300, scalability);

  Stopwatch clock;
  Resilience r;
  try {
    r = resilience();
  } catch (const std::exception& e) {
    Outcome bad{false, std::string("exception: ") + e.what()};
    r = {bad, bad, bad};
  }
  double t = clock.seconds();
  report(5, "success rate", r.success, t);
  report(6, "election convergence", r.convergence, t);
  report(7, "resilience monotonicity", r.monotone, t);

  timed(8, "fault-free baseline", 0, fault_free);
  timed(9, "determinism", 0, determinism);
  timed(10, "retry contract", 0, retry_contract);

  std::cout << (failures ? "FAILED " : "ALL PASSED ") << 10 - failures << "/10" << std::endl;
  return failures ? 1 : 0;
}
