#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "agentflow/agentflow.hpp"

using namespace agentflow;
using namespace agentflow::cli;
namespace fs = std::filesystem;

namespace {

const char* kTiny = R"({
  "n_amrs": 100, "n_controllers": 3, "task_rate_per_min": 120,
  "duration_ticks": 5000, "controller_capacity": 0.001, "seed": 4,
  "faults": { "controller_failure_fraction": 0.0 }
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::path(::testing::TempDir()) /
           ("agentflow_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    env_.out_dir = dir_ / "out";
    env_.out = &out_;
    env_.err = &err_;
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) {
    fs::path p = dir_ / name;
    std::ofstream(p, std::ios::binary) << text;
    return p;
  }
  static std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
  std::ostringstream out_, err_;
  CommandEnv env_;
};

std::string first_line(const std::string& s) { return s.substr(0, s.find("\r\n")); }

}  // namespace

TEST(Scenario, OverridesApplyDottedKeys) {
  Scenario s = parse_scenario(kTiny, {"n_amrs=150", "faults.controller_failure_fraction=0.1",
                                      "network.drop_probability=0.05", "trace_level=full"});
  sim::SimConfig c = s.base();
  EXPECT_EQ(c.n_amrs, 150);
  EXPECT_DOUBLE_EQ(c.faults.controller_failure_fraction, 0.1);
  EXPECT_DOUBLE_EQ(c.network.drop_probability, 0.05);
  EXPECT_EQ(c.trace_level, TraceLevel::Full);
  EXPECT_EQ(c.n_controllers, 3);
}

TEST(Scenario, RejectsBadInput) {
  EXPECT_THROW(parse_scenario("{not json"), ConfigError);
  EXPECT_THROW(parse_scenario("[1]"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"n_amrz": 1})"), ConfigError);
  EXPECT_THROW(parse_scenario(kTiny, {"n_amrs"}), ConfigError);
  EXPECT_THROW(parse_scenario(kTiny, {"bogus.key=1"}), ConfigError);
  EXPECT_THROW(parse_scenario(kTiny, {"n_amrs.x=1"}), ConfigError);
  EXPECT_THROW(load_scenario("/nonexistent/scenario.json"), ConfigError);
}

TEST(Scenario, SweepSeedsAndValues) {
  Scenario s = parse_scenario(R"({"seed": 5, "sweep": {"parameter": "n_amrs", "values": [50, 100], "seeds": 3}})");
  ASSERT_TRUE(s.sweep);
  EXPECT_EQ(s.sweep->parameter, "n_amrs");
  EXPECT_EQ(s.sweep->values.size(), 2u);
  EXPECT_EQ(s.sweep->seeds, (std::vector<std::uint64_t>{5, 6, 7}));
  Json v = 100;
  sim::SimConfig c = s.at(&v, 6);
  EXPECT_EQ(c.n_amrs, 100);
  EXPECT_EQ(c.seed, 6u);

  Scenario e = parse_scenario(R"({"sweep": {"parameter": "n_amrs", "values": [50], "seeds": [9, 2]}})");
  EXPECT_EQ(e.sweep->seeds, (std::vector<std::uint64_t>{9, 2}));

  EXPECT_THROW(parse_scenario(R"({"sweep": {"parameter": "n_amrs", "values": []}})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"sweep": {"parameter": "seed", "values": [1]}})"), ConfigError);
  EXPECT_THROW(parse_scenario(R"({"sweep": {"parameter": "n_amrs", "values": [1], "extra": 1}})"), ConfigError);
}

TEST(Csv, QuotesPerRfc4180) {
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
  EXPECT_EQ(csv_row({"a", "b c", "d\ne"}), "a,b c,\"d\ne\"\r\n");
}

TEST_F(CliTest, RunWritesMetricsAndSucceeds) {
  env_.write_events = true;
  EXPECT_EQ(cmd_run(write("s.json", kTiny), {}, env_), kOk);
  Json m = Json::parse(slurp(env_.out_dir / "metrics.json"));
  EXPECT_EQ(m["seed"], 4);
  EXPECT_GT(m["tasks_generated"].get<int>(), 0);
  std::string csv = slurp(env_.out_dir / "metrics.csv");
  EXPECT_EQ(first_line(csv).substr(0, 32), "seed,mean_assignment_latency_ms,");
  EXPECT_TRUE(fs::exists(env_.out_dir / "events.jsonl"));
  EXPECT_FALSE(fs::exists(env_.out_dir / "metrics.json.tmp"));
}

TEST_F(CliTest, RunConfigErrorExitsTwo) {
  EXPECT_EQ(cmd_run(write("bad.json", R"({"n_amrs": -5})"), {}, env_), kInputError);
  EXPECT_NE(err_.str().find("n_amrs"), std::string::npos);
  EXPECT_EQ(cmd_run(dir_ / "missing.json", {}, env_), kInputError);
  EXPECT_EQ(cmd_run(write("s.json", kTiny), {"nope=1"}, env_), kInputError);
}

TEST_F(CliTest, RunWithViolatedInvariantExitsThree) {
  env_.runner = [](const sim::SimConfig& c) {
    auto r = sim::run(c);
    // A reply delivered to the wrong robot.
    for (auto& rec : r.log.records())
      if (rec.kind == EventKind::Deliver && rec.topic.starts_with("reply/")) {
        rec.agent = "intruder";
        break;
      }
    return r;
  };
  EXPECT_EQ(cmd_run(write("s.json", kTiny), {}, env_), kInvariantViolation);
  EXPECT_NE(err_.str().find("selectivity"), std::string::npos);
  EXPECT_TRUE(fs::exists(env_.out_dir / "metrics.json"));
}

TEST_F(CliTest, RunnerErrorExitsThree) {
  env_.runner = [](const sim::SimConfig&) -> sim::SimResult { throw PreconditionViolation("broken"); };
  EXPECT_EQ(cmd_run(write("s.json", kTiny), {}, env_), kInvariantViolation);
}

TEST_F(CliTest, SweepWritesLongAndAggregateCsv) {
  auto p = write("sw.json", R"({
    "n_amrs": 50, "n_controllers": 3, "task_rate_per_min": 60, "duration_ticks": 3000, "controller_capacity": 0.001,
    "faults": { "controller_failure_fraction": 0.0 },
    "sweep": { "parameter": "n_amrs", "values": [50, 100], "seeds": 2 } })");
  EXPECT_EQ(cmd_sweep(p, {}, env_), kOk) << err_.str();
  std::string lng = slurp(env_.out_dir / "sweep_long.csv");
  std::string agg = slurp(env_.out_dir / "sweep_aggregate.csv");
  EXPECT_EQ(first_line(lng).substr(0, 59), "parameter,value,seed,status,error,mean_assignment_latency_m");
  EXPECT_EQ(first_line(agg).substr(0, 54), "parameter,value,runs,failed,mean_mean_assignment_laten");
  EXPECT_EQ(std::count(lng.begin(), lng.end(), '\n'), 5);
  EXPECT_EQ(std::count(agg.begin(), agg.end(), '\n'), 3);
  EXPECT_NE(agg.find("n_amrs,100,2,0,"), std::string::npos);
  EXPECT_TRUE(fs::exists(env_.out_dir / "points" / "n_amrs=50_seed-1.json"));
  EXPECT_TRUE(fs::exists(env_.out_dir / "points" / "n_amrs=100_seed-2.json"));
}

TEST_F(CliTest, SweepWithBadPointExitsFour) {
  auto p = write("sw.json", R"({
    "n_amrs": 50, "n_controllers": 3, "task_rate_per_min": 60, "duration_ticks": 3000, "controller_capacity": 0.001,
    "faults": { "controller_failure_fraction": 0.0 },
    "sweep": { "parameter": "n_amrs", "values": [50, -5], "seeds": 1 } })");
  EXPECT_EQ(cmd_sweep(p, {}, env_), kPartialFailure) << err_.str();
  std::string lng = slurp(env_.out_dir / "sweep_long.csv");
  EXPECT_NE(lng.find("n_amrs,-5,1,failed,"), std::string::npos);
  EXPECT_NE(lng.find("n_amrs,50,1,ok,"), std::string::npos);
}

TEST_F(CliTest, SweepWithoutBlockExitsTwo) {
  EXPECT_EQ(cmd_sweep(write("s.json", kTiny), {}, env_), kInputError);
}

TEST_F(CliTest, ReplayPassesOnHonestLog) {
  env_.write_events = true;
  ASSERT_EQ(cmd_run(write("s.json", kTiny), {}, env_), kOk);
  out_.str("");
  EXPECT_EQ(cmd_replay(env_.out_dir / "events.jsonl", {}, env_), kOk);
  EXPECT_NE(out_.str().find("PASS selectivity"), std::string::npos);
  EXPECT_NE(out_.str().find("PASS argmin"), std::string::npos);
  EXPECT_NE(out_.str().find("PASS conservation"), std::string::npos);
  EXPECT_EQ(cmd_replay(env_.out_dir / "events.jsonl", {"all"}, env_), kOk);
  EXPECT_EQ(cmd_replay(env_.out_dir / "events.jsonl", {"nonsense"}, env_), kInputError);
}

TEST_F(CliTest, ReplayCatchesPlantedViolations) {
  env_.write_events = true;
  ASSERT_EQ(cmd_run(write("s.json", kTiny), {}, env_), kOk);
  std::istringstream in(slurp(env_.out_dir / "events.jsonl"));
  EventLog log = EventLog::read_jsonl(in);

  EventLog cross = log;
  for (auto& r : cross.records())
    if (r.kind == EventKind::Deliver && r.topic.starts_with("reply/")) {
      r.agent = "amr-999";
      break;
    }
  auto cross_path = write("cross.jsonl", cross.to_jsonl());
  EXPECT_EQ(cmd_replay(cross_path, {"selectivity"}, env_), kInvariantViolation);

  EventLog wrong = log;
  bool planted = false;
  for (auto& r : wrong.records())
    if (r.kind == EventKind::Decide && r.detail["ranks"].size() >= 2) {
      // Crown a candidate that did not win.
      std::string worst;
      for (const auto& [k, v] : r.detail["ranks"].items())
        if (k != r.detail["winner"]) worst = k;
      r.detail["winner"] = worst;
      planted = true;
      break;
    }
  ASSERT_TRUE(planted) << wrong.size();
  out_.str("");
  EXPECT_EQ(cmd_replay(write("wrong.jsonl", wrong.to_jsonl()), {"argmin"}, env_), kInvariantViolation);
  EXPECT_NE(out_.str().find("FAIL argmin"), std::string::npos);
}

TEST_F(CliTest, ReplayRejectsCorruptOrEmptyLogs) {
  EXPECT_EQ(cmd_replay(write("corrupt.jsonl", "{\"tick\": 0, \"kind\": \"publish\"}\n{oops\n"), {}, env_),
            kInputError);
  EXPECT_EQ(cmd_replay(write("empty.jsonl", ""), {}, env_), kInputError);
  EXPECT_EQ(cmd_replay(dir_ / "missing.jsonl", {}, env_), kInputError);
}

TEST_F(CliTest, RunOutputIsByteIdentical) {
  env_.write_events = true;
  auto s = write("s.json", kTiny);
  ASSERT_EQ(cmd_run(s, {}, env_), kOk);
  CommandEnv second = env_;
  second.out_dir = dir_ / "out2";
  ASSERT_EQ(cmd_run(s, {}, second), kOk);
  for (const char* f : {"metrics.json", "metrics.csv", "events.jsonl"})
    EXPECT_EQ(slurp(env_.out_dir / f), slurp(second.out_dir / f)) << f;
}
