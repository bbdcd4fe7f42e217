// Command-line front end for the sparse linear bandit lab.
//
// Subcommands:
//   run       simulate configured policies on a generative environment
//   replay    run policies over permutations of a labeled CSV dataset
//   diagnose  recompute design diagnostics for a finished run directory
//   chart     render a summary CSV as an SVG line chart
//
// Exit codes: 0 success, 2 invalid config or data, 3 I/O failure.

#include "l1bandit/l1bandit.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

int main(int argc, char** argv) {
  CLI::App app{"Sparse linear bandit simulation lab"};
  app.require_subcommand(1);

  std::string config_path;
  std::string trace_dir;
  std::string summary_path;
  std::string svg_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  int jobs = 0;

  CLI::App* run_cmd =
      app.add_subcommand("run", "Simulate policies on a generative environment");
  run_cmd->add_option("config", config_path, "experiment config file")->required();
  CLI::Option* run_seed =
      run_cmd->add_option("--seed", seed, "override the master seed");
  run_cmd->add_option("--jobs", jobs,
                      "worker threads (default: L1BANDIT_JOBS or hardware)");
  run_cmd->add_option("--out", out_dir, "override the output directory");

  CLI::App* replay_cmd =
      app.add_subcommand("replay", "Replay a labeled dataset as a bandit");
  replay_cmd->add_option("config", config_path, "experiment config file")->required();
  CLI::Option* replay_seed =
      replay_cmd->add_option("--seed", seed, "override the master seed");
  replay_cmd->add_option("--jobs", jobs,
                         "worker threads (default: L1BANDIT_JOBS or hardware)");
  replay_cmd->add_option("--out", out_dir, "override the output directory");

  CLI::App* diag_cmd = app.add_subcommand(
      "diagnose", "Recompute diagnostics for a finished run directory");
  diag_cmd->add_option("trace_dir", trace_dir, "directory holding config.resolved")
      ->required();
  diag_cmd->add_option("--jobs", jobs,
                       "worker threads (default: L1BANDIT_JOBS or hardware)");

  CLI::App* chart_cmd =
      app.add_subcommand("chart", "Render a summary CSV as an SVG line chart");
  chart_cmd->add_option("summary", summary_path, "summary CSV produced by run/replay")
      ->required();
  chart_cmd->add_option("output", svg_path, "SVG file to write")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    l1bandit::RunnerOptions opts;
    opts.jobs = jobs;
    opts.out_dir_override = out_dir;
    if (run_seed->count() > 0 || replay_seed->count() > 0) opts.seed_override = seed;

    if (run_cmd->parsed()) {
      const l1bandit::ExperimentConfig cfg = l1bandit::parse_config_file(config_path);
      const l1bandit::RunOutputs out = l1bandit::run_experiment(cfg, opts);
      std::cout << "wrote " << out.out_dir << "\n";
    } else if (replay_cmd->parsed()) {
      const l1bandit::ExperimentConfig cfg = l1bandit::parse_config_file(config_path);
      const l1bandit::RunOutputs out = l1bandit::run_replay(cfg, opts);
      std::cout << "wrote " << out.out_dir << "\n";
    } else if (diag_cmd->parsed()) {
      l1bandit::diagnose_run(trace_dir, opts);
      std::cout << "wrote diagnostics under " << trace_dir << "\n";
    } else {
      l1bandit::chart_summary_file(summary_path, svg_path);
      std::cout << "wrote " << svg_path << "\n";
    }
  } catch (const l1bandit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const l1bandit::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const l1bandit::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
