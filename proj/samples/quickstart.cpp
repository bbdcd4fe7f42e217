// Minimal library-as-API example: build a small experiment in code, run it
// in-memory, and print the final mean cumulative regret per policy.

#include "l1bandit/l1bandit.hpp"

#include <iostream>

int main() {
  using namespace l1bandit;

  ExperimentConfig cfg;
  cfg.exp.horizon = 300;
  cfg.exp.repetitions = 3;
  cfg.exp.master_seed = 7;

  SyntheticSpec env;
  env.K = 4;
  env.d = 20;
  env.s0 = 3;
  cfg.env = env;

  PolicySpec ball;
  ball.kind = PolicyKind::kL1Ball;
  ball.label = "l1ball";
  cfg.policies.push_back(ball);

  PolicySpec random;
  random.kind = PolicyKind::kRandom;
  random.label = "random";
  cfg.policies.push_back(random);

  RunnerOptions opts;
  opts.write_files = false;
  opts.jobs = 1;
  const RunOutputs out = run_experiment(cfg, opts);

  for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
    double total = 0.0;
    for (const RegretTrace& trace : out.traces[p])
      total += trace.rows.back().cum_regret;
    std::cout << cfg.policies[p].label << ": mean final regret "
              << total / static_cast<double>(out.traces[p].size()) << "\n";
  }
  return 0;
}
