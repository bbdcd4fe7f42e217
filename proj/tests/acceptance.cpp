// Acceptance protocol for the simulation lab.  Every check prints exactly
// one PASS/FAIL line with the measured quantities; the process exits
// nonzero if any check fails.  Thresholds are pinned here on purpose --
// loosening them to make a run green defeats the point of the protocol.

#include "l1bandit/l1bandit.hpp"

#include "oracles.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

using namespace l1bandit;

namespace {

int failures = 0;

void report(int idx, const char* name, bool pass, const std::string& detail) {
  std::printf("%s %2d %s -- %s\n", pass ? "PASS" : "FAIL", idx, name,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

// --------------------------------------------------------------------------
// 1: the coordinate-descent solver agrees with an independent proximal-
//    gradient solver across 100 seeded instances and three penalty levels.
// --------------------------------------------------------------------------
void criterion_solver_agreement() {
  Rng rng(1001);
  double worst_diff = 0.0, worst_kkt = 0.0;
  bool all_converged = true;
  for (int instance = 0; instance < 100; ++instance) {
    const int d = 2 + static_cast<int>(uniform_int(rng, 9));  // <= 10
    // Keep the sample count well above the dimension: with t close to d the
    // Gram matrix is nearly singular and the unpenalized minimizer is so
    // ill-conditioned that no two correct solvers agree coordinate-wise.
    const int t = d + 10 + static_cast<int>(uniform_int(rng, 41));  // in [d+10, d+50]
    const oracle::DenseDesign dd = oracle::random_design(rng, t, d);
    const DesignState state = oracle::to_state(dd);
    for (double lambda : {0.0, 0.05, 0.5}) {
      const LassoSolution sol = lasso_solve(state, lambda);
      const Vec ref = oracle::lasso_fista(state.gram, state.xty, state.t, lambda,
                                          200000, 1e-14);
      worst_diff = std::max(worst_diff, (sol.beta - ref).lpNorm<Eigen::Infinity>());
      worst_kkt = std::max(worst_kkt, kkt_residual(state, sol.beta, lambda));
      all_converged = all_converged && sol.converged;
    }
  }
  const bool pass = all_converged && worst_diff <= 1e-6 && worst_kkt <= 1e-6;
  report(1, "penalized solver matches proximal-gradient reference", pass,
         "100 instances x {0, 0.05, 0.5}: max coord diff " + fmt(worst_diff) +
             " (<= 1e-6), max stationarity residual " + fmt(worst_kkt) +
             " (<= 1e-6)");
}

// --------------------------------------------------------------------------
// 2: the closed-form ball score picks the same arm as enumerating every
//    extreme point of the ball, over ten thousand random instances.
// --------------------------------------------------------------------------
void criterion_selection_equivalence() {
  Rng rng(2002);
  int mismatches = 0;
  const int n = 10000;
  for (int instance = 0; instance < n; ++instance) {
    const int k = 2 + static_cast<int>(uniform_int(rng, 5));
    const int d = 1 + static_cast<int>(uniform_int(rng, 8));
    ContextRound round;
    for (int a = 0; a < k; ++a) {
      Vec x(d);
      for (int j = 0; j < d; ++j) x[j] = normal(rng);
      round.arms.push_back(std::move(x));
    }
    ConfidenceBall ball;
    ball.center = Vec(d);
    for (int j = 0; j < d; ++j) ball.center[j] = normal(rng);
    ball.radius = 2.0 * uniform01(rng);
    if (l1ball_select(round, ball) !=
        oracle::select_enumerate(round, ball.center, ball.radius))
      ++mismatches;
  }
  report(2, "ball score equals extreme-point enumeration", mismatches == 0,
         std::to_string(mismatches) + " mismatches in " + std::to_string(n) +
             " instances (0 allowed)");
}

ExperimentConfig headline_config(std::uint64_t master) {
  ExperimentConfig cfg;
  cfg.exp.horizon = 2000;
  cfg.exp.repetitions = 5;
  cfg.exp.master_seed = master;
  SyntheticSpec env;
  env.K = 5;
  env.d = 100;
  env.s0 = 5;
  env.sigma = 1.0;
  cfg.env = env;
  const std::vector<std::pair<PolicyKind, std::string>> kinds = {
      {PolicyKind::kL1Ball, "l1ball"},
      {PolicyKind::kLassoBandit, "lasso_bandit"},
      {PolicyKind::kOlsBandit, "ols_bandit"},
      {PolicyKind::kOful, "oful"}};
  for (const auto& [kind, label] : kinds) {
    PolicySpec p;
    p.kind = kind;
    p.label = label;
    cfg.policies.push_back(p);
  }
  return cfg;
}

double mean_final_regret(const std::vector<RegretTrace>& traces, long t = 0) {
  double sum = 0.0;
  for (const RegretTrace& trace : traces) {
    const std::size_t idx =
        t > 0 ? static_cast<std::size_t>(t - 1) : trace.rows.size() - 1;
    sum += trace.rows[idx].cum_regret;
  }
  return sum / static_cast<double>(traces.size());
}

// --------------------------------------------------------------------------
// 3: on the headline configuration (5 arms, 100 features, 5 active) the
//    ball policy beats the three baselines in at least 4 of 5 seed batches.
// --------------------------------------------------------------------------
void criterion_headline_ordering() {
  int wins = 0;
  std::ostringstream detail;
  RunnerOptions opts;
  opts.write_files = false;
  for (std::uint64_t master = 101; master <= 105; ++master) {
    const RunOutputs out = run_experiment(headline_config(master), opts);
    const double ball = mean_final_regret(out.traces[0]);
    double best_other = std::numeric_limits<double>::infinity();
    for (std::size_t p = 1; p < out.traces.size(); ++p)
      best_other = std::min(best_other, mean_final_regret(out.traces[p]));
    if (ball < best_other) ++wins;
    if (master == 101)
      detail << "batch 101 mean final regret: ball " << fmt(ball) << ", lasso "
             << fmt(mean_final_regret(out.traces[1])) << ", ols "
             << fmt(mean_final_regret(out.traces[2])) << ", ellipsoid "
             << fmt(mean_final_regret(out.traces[3])) << "; ";
  }
  detail << "ball lowest in " << wins << "/5 batches (need >= 4)";
  report(3, "ball policy leads the headline comparison", wins >= 4, detail.str());
}

// --------------------------------------------------------------------------
// 4: on the two-arm margin family with a uniform gap law, doubling the
//    horizon grows regret by at most 1.5x (strongly sublinear growth).
// --------------------------------------------------------------------------
void criterion_margin_scaling() {
  ExperimentConfig cfg;
  cfg.exp.horizon = 4000;
  cfg.exp.repetitions = 10;
  cfg.exp.master_seed = 404;
  MarginSpec env;
  env.alpha = 1.0;
  env.d = 10;
  cfg.env = env;
  PolicySpec ball;
  ball.kind = PolicyKind::kL1Ball;
  ball.label = "l1ball";
  cfg.policies = {ball};
  RunnerOptions opts;
  opts.write_files = false;
  const RunOutputs out = run_experiment(cfg, opts);
  const double r1 = mean_final_regret(out.traces[0], 1000);
  const double r2 = mean_final_regret(out.traces[0], 2000);
  const double r4 = mean_final_regret(out.traces[0], 4000);
  const double ratio21 = r2 / r1;
  const double ratio42 = r4 / r2;
  const bool pass = ratio21 <= 1.5 && ratio42 <= 1.5;
  report(4, "margin-family regret flattens when the horizon doubles", pass,
         "mean regret " + fmt(r1) + " @1000, " + fmt(r2) + " @2000, " + fmt(r4) +
             " @4000; ratios " + fmt(ratio21) + ", " + fmt(ratio42) +
             " (each <= 1.5)");
}

// --------------------------------------------------------------------------
// 5: on the worst-case family, instances tuned to a 4x longer horizon incur
//    regret scaled like the root-order lower bound (ratio in [1.6, 2.9]).
// --------------------------------------------------------------------------
void criterion_hard_scaling() {
  // Early rounds cost roughly the same at both horizons (the policy has to
  // pay for exploration either way), which would dilute a whole-run ratio.
  // The gap-scale law shows in steady state, so compare the regret accrued
  // over the last half of each run.
  auto run_tuned = [](long horizon) {
    ExperimentConfig cfg;
    cfg.exp.horizon = horizon;
    cfg.exp.repetitions = 30;
    cfg.exp.master_seed = 505;
    HardInstanceSpec env;
    env.d = 200;
    env.T = static_cast<int>(horizon);  // gap scale tuned to the run length
    cfg.env = env;
    PolicySpec ball;
    ball.kind = PolicyKind::kL1Ball;
    ball.label = "l1ball";
    cfg.policies = {ball};
    RunnerOptions opts;
    opts.write_files = false;
    const RunOutputs out = run_experiment(cfg, opts);
    return std::make_pair(mean_final_regret(out.traces[0], horizon / 2),
                          mean_final_regret(out.traces[0]));
  };
  const auto [h1000, r1000] = run_tuned(1000);
  const auto [h4000, r4000] = run_tuned(4000);
  const double late1000 = r1000 - h1000;
  const double late4000 = r4000 - h4000;
  const double ratio = late4000 / late1000;
  const bool pass = ratio >= 1.6 && ratio <= 2.9;
  report(5, "worst-case family scales like the root-order lower bound", pass,
         "last-half mean regret " + fmt(late1000) + " @1000-tuned, " +
             fmt(late4000) + " @4000-tuned; ratio " + fmt(ratio) +
             " (in [1.6, 2.9]; whole-run means " + fmt(r1000) + " / " +
             fmt(r4000) + ")");
}

// --------------------------------------------------------------------------
// 6: under analysis-backed constants the ball contains the true parameter
//    vector at t in {512, 1024, 2048} in at least 90% of 50 runs.
// --------------------------------------------------------------------------
void criterion_theoretical_coverage() {
  SyntheticSpec env_spec;
  env_spec.K = 5;
  env_spec.d = 100;
  env_spec.s0 = 5;
  const SimEnvironment env(EnvironmentSpec{env_spec});
  const Mat& pop_cov = env.population_covariance();

  PolicySpec spec;
  spec.kind = PolicyKind::kL1Ball;
  spec.label = "l1ball";
  PolicyBuildContext ctx;
  ctx.dim = env.dim();
  ctx.num_arms = env.num_arms();
  ctx.sigma = env.sigma();
  ctx.x_max = env.x_max();
  ctx.population_covariance = &pop_cov;

  const std::uint64_t master = 606;
  const int runs = 50;
  const std::vector<int> checkpoints = {512, 1024, 2048};
  std::vector<int> covered(checkpoints.size(), 0);
  for (int rep = 0; rep < runs; ++rep) {
    Rng model_rng(derive_seed(master, "model", static_cast<std::uint64_t>(rep),
                              stream::kModel));
    const TrueModel model = env.sample_model(model_rng);
    Rng env_rng(derive_seed(master, spec.label, static_cast<std::uint64_t>(rep),
                            stream::kEnvironment));
    auto policy = build_policy(spec, ConstantMode::kTheoretical, ctx, model, 0,
                               /*diag_n_starts=*/32);
    std::size_t next = 0;
    for (int t = 1; t <= 2048; ++t) {
      const ContextRound round = env.gen_round(env_rng);
      const int a = policy->select(round);
      const Vec& x = round.arms[static_cast<std::size_t>(a)];
      policy->update({t, a, x, draw_reward(x, model, env_rng)});
      if (next < checkpoints.size() && t == checkpoints[next]) {
        if (coverage_check(*policy->ball(), model.beta))
          ++covered[next];
        ++next;
      }
    }
  }
  bool pass = true;
  std::ostringstream detail;
  detail << "covered";
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    pass = pass && covered[i] >= 45;
    detail << " " << covered[i] << "/50 @" << checkpoints[i];
  }
  detail << " (each >= 45)";
  report(6, "analysis-backed ball covers the truth", pass, detail.str());
}

// --------------------------------------------------------------------------
// 7: with sup-norm-normalized contexts the optimism bonus is the same for
//    every arm, so the ball policy must match pure exploitation exactly.
// --------------------------------------------------------------------------
void criterion_normalized_equivalence() {
  SyntheticSpec spec;
  spec.K = 5;
  spec.d = 20;
  spec.s0 = 3;
  spec.normalize_linf = true;
  Rng model_rng(derive_seed(707, "model", 0, stream::kModel));
  const TrueModel model = sample_synthetic_model(spec, model_rng);
  Rng env_rng(derive_seed(707, "l1ball", 0, stream::kEnvironment));
  L1BallPolicy policy(spec.d, L1BallConfig{});
  int mismatches = 0;
  const int horizon = 500;
  for (int t = 1; t <= horizon; ++t) {
    const ContextRound round = gen_synthetic_round(spec, env_rng);
    const int chosen = policy.select(round);
    const ConfidenceBall ball = *policy.ball();
    const int greedy = l1ball_select(round, {ball.center, 0.0});
    if (chosen != greedy) ++mismatches;
    const Vec& x = round.arms[static_cast<std::size_t>(chosen)];
    policy.update({t, chosen, x, draw_reward(x, model, env_rng)});
  }
  report(7, "constant-bonus contexts reduce optimism to exploitation",
         mismatches == 0,
         std::to_string(mismatches) + " mismatches in " +
             std::to_string(horizon) + " rounds (0 allowed)");
}

// --------------------------------------------------------------------------
// 8: the design diagnostics reproduce independent linear-algebra references:
//    the cone constant on the identity and exhaustive pair eigenvalues.
// --------------------------------------------------------------------------
void criterion_diagnostic_oracles() {
  // Exact cone minimum on the 50-dim identity with a 2-coordinate support:
  // the symmetric reduction gives sqrt((1 + 9*2/48)/16).
  const double reference = 0.2931509849889644;
  const double est = compatibility_estimate(Mat::Identity(50, 50), {7, 31});
  const bool compat_ok = std::abs(est - reference) <= 0.02 && est >= reference - 1e-9;

  Rng rng(808);
  const oracle::DenseDesign dd = oracle::random_design(rng, 60, 6);
  const Mat sigma = dd.x.transpose() * dd.x / 60.0;
  const EigenProbe probe = sparse_eigen_probe(sigma, 2);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (int i = 0; i < 6; ++i)
    for (int j = i + 1; j < 6; ++j) {
      const auto [emin, emax] = oracle::eig2(sigma(i, i), sigma(i, j), sigma(j, j));
      lo = std::min(lo, emin);
      hi = std::max(hi, emax);
    }
  const bool probe_ok = probe.exact && probe.subsets_checked == 15 &&
                        std::abs(probe.rho_min - lo) <= 1e-10 &&
                        std::abs(probe.rho_max - hi) <= 1e-10;

  report(8, "diagnostics match independent references", compat_ok && probe_ok,
         "cone constant " + fmt(est) + " vs exact " + fmt(reference) +
             " (+-0.02); pair eigen range [" + fmt(probe.rho_min) + ", " +
             fmt(probe.rho_max) + "] vs closed form [" + fmt(lo) + ", " +
             fmt(hi) + "]");
}

// --------------------------------------------------------------------------
// 9: in every repetition of the headline configuration the ball policy
//    pulls the optimal arm more than half the time over the last half.
// --------------------------------------------------------------------------
void criterion_optimal_fraction() {
  ExperimentConfig cfg = headline_config(909);
  cfg.policies.resize(1);  // ball only
  RunnerOptions opts;
  opts.write_files = false;
  const RunOutputs out = run_experiment(cfg, opts);
  bool pass = true;
  std::ostringstream detail;
  detail << "late-window optimal-pull fraction per repetition:";
  for (const RegretTrace& trace : out.traces[0]) {
    const double frac = optimal_fraction(trace, 1000);
    pass = pass && frac > 0.5;
    detail << " " << fmt(frac);
  }
  detail << " (each > 0.5)";
  report(9, "ball policy mostly pulls the optimal arm late", pass, detail.str());
}

// --------------------------------------------------------------------------
// 10: two full command-line runs of the same configuration produce
//     byte-identical CSV outputs, regardless of the worker count.
// --------------------------------------------------------------------------
void criterion_cli_determinism() {
#ifndef L1B_CLI_PATH
  report(10, "command-line runs are byte-identical", false,
         "CLI path not compiled in");
#else
  const std::string cli = L1B_CLI_PATH;
  const std::string cfg_path = "/tmp/l1b_accept_cli.cfg";
  write_text_file(cfg_path,
                  "[experiment]\n"
                  "horizon = 300\n"
                  "repetitions = 2\n"
                  "master_seed = 1010\n"
                  "checkpoint_every = 50\n"
                  "chart = on\n"
                  "[environment]\n"
                  "kind = synthetic\n"
                  "arms = 4\n"
                  "d = 30\n"
                  "s0 = 3\n"
                  "[policy]\n"
                  "kind = l1ball\n"
                  "label = ball\n"
                  "[policy]\n"
                  "kind = random\n");
  const std::string dir_a = "/tmp/l1b_accept_cli_a";
  const std::string dir_b = "/tmp/l1b_accept_cli_b";
  std::filesystem::remove_all(dir_a);
  std::filesystem::remove_all(dir_b);
  const int rc_a = std::system(
      (cli + " run " + cfg_path + " --out " + dir_a + " --jobs 1 > /dev/null").c_str());
  const int rc_b = std::system(
      (cli + " run " + cfg_path + " --out " + dir_b + " --jobs 3 > /dev/null").c_str());

  const std::vector<std::string> files = {
      "trace_ball_rep0.csv", "trace_ball_rep1.csv", "trace_random_rep0.csv",
      "trace_random_rep1.csv", "summary.csv", "regret.svg"};
  int differing = 0;
  bool all_present = rc_a == 0 && rc_b == 0;
  for (const std::string& f : files) {
    if (!std::filesystem::exists(dir_a + "/" + f) ||
        !std::filesystem::exists(dir_b + "/" + f)) {
      all_present = false;
      continue;
    }
    if (read_text_file(dir_a + "/" + f) != read_text_file(dir_b + "/" + f))
      ++differing;
  }
  report(10, "command-line runs are byte-identical", all_present && differing == 0,
         "exit codes " + std::to_string(rc_a) + "/" + std::to_string(rc_b) +
             ", " + std::to_string(differing) + " of " +
             std::to_string(files.size()) +
             " compared files differ (0 allowed; worker counts 1 vs 3)");
#endif
}

}  // namespace

int main() {
  criterion_solver_agreement();
  criterion_selection_equivalence();
  criterion_headline_ordering();
  criterion_margin_scaling();
  criterion_hard_scaling();
  criterion_theoretical_coverage();
  criterion_normalized_equivalence();
  criterion_diagnostic_oracles();
  criterion_optimal_fraction();
  criterion_cli_determinism();
  if (failures > 0) {
    std::printf("%d acceptance check(s) failed\n", failures);
    return 1;
  }
  std::printf("all acceptance checks passed\n");
  return 0;
}
