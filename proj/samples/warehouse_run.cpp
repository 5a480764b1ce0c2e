// Runs the warehouse scenario once and prints its metrics and audits.
//
//   warehouse_run [n_amrs] [failure_fraction] [seed]

#include <cstdlib>
#include <iostream>

#include "agentflow/agentflow.hpp"

int main(int argc, char** argv) {
  using namespace agentflow;
  sim::SimConfig cfg;
  if (argc > 1) cfg.n_amrs = std::atoi(argv[1]);
  if (argc > 2) cfg.faults.controller_failure_fraction = std::atof(argv[2]);
  if (argc > 3) cfg.seed = std::strtoull(argv[3], nullptr, 10);

  try {
    auto result = sim::run(cfg);
    std::cout << result.metrics.to_json().dump(2) << "\n";
    for (const auto& a : sim::run_audits(result.log))
      std::cout << (a.passed() ? "ok   " : "FAIL ") << a.name << " (" << a.checked << " checked)\n";
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
}
