// agentflow: run scenarios, sweeps and log audits from the command line.
//
//   agentflow run <scenario.json> [key=value ...] [--events] [--out DIR]
//   agentflow sweep <scenario.json> [key=value ...] [--out DIR]
//   agentflow replay <events.jsonl> [--audit NAME ...]
//
// Output goes to --out, else $AGENTFLOW_OUT, else ./agentflow-out.

#include <CLI11.hpp>

#include "agentflow/cli/commands.hpp"

int main(int argc, char** argv) {
  using namespace agentflow::cli;

  CLI::App app{"Holonic agent coordination simulator"};
  app.require_subcommand(1);

  std::string scenario, log_path, out;
  std::vector<std::string> overrides, audits;
  bool events = false;

  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("scenario", scenario, "Scenario JSON file")->required();
  run->add_option("overrides", overrides, "Config overrides as dotted.key=value");
  run->add_flag("--events", events, "Also write events.jsonl");
  run->add_option("--out", out, "Output directory");

  auto* sweep = app.add_subcommand("sweep", "Run every point of a scenario's sweep block");
  sweep->add_option("scenario", scenario, "Scenario JSON file")->required();
  sweep->add_option("overrides", overrides, "Config overrides as dotted.key=value");
  sweep->add_option("--out", out, "Output directory");

  auto* replay = app.add_subcommand("replay", "Re-audit a recorded event log");
  replay->add_option("log", log_path, "events.jsonl from a previous run")->required();
  replay->add_option("--audit", audits, "Audit to run (repeatable; 'all' for every audit)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : kInputError;
  }

  CommandEnv env;
  env.out_dir = out.empty() ? default_out_dir() : std::filesystem::path(out);
  env.write_events = events;

  if (*run) return cmd_run(scenario, overrides, env);
  if (*sweep) return cmd_sweep(scenario, overrides, env);
  return cmd_replay(log_path, audits, env);
}
