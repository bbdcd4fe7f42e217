#pragma once

// Experiment orchestration: seed derivation, the (policy x repetition) job
// grid, a small worker pool, CSV/SVG emission, and the replay and diagnose
// drivers.  All randomness flows through streams derived as
// hash(master_seed, policy_label, rep_index, salt), so results are
// byte-identical across runs and across worker counts.

#include "l1bandit/chart.hpp"
#include "l1bandit/config.hpp"
#include "l1bandit/core.hpp"
#include "l1bandit/diagnostics.hpp"
#include "l1bandit/environments.hpp"
#include "l1bandit/io.hpp"
#include "l1bandit/policies.hpp"
#include "l1bandit/rng.hpp"
#include "l1bandit/solvers.hpp"

#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

namespace l1bandit {

// ---------------------------------------------------------------------------
// environment adapter
// ---------------------------------------------------------------------------

/// Uniform runtime view over the simulated environment kinds.  (Replay is
/// driven separately; it has no generative model.)
class SimEnvironment {
 public:
  explicit SimEnvironment(const EnvironmentSpec& spec) : spec_(spec) {
    if (std::holds_alternative<ReplaySpec>(spec_))
      throw ValidationError("SimEnvironment: replay has no generative model");
  }

  int dim() const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) return s->d;
    if (const auto* s = std::get_if<MarginSpec>(&spec_)) return s->d;
    return std::get<HardInstanceSpec>(spec_).dim();
  }

  int num_arms() const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) return s->K;
    return 2;
  }

  int sparsity() const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) return s->s0;
    if (std::get_if<MarginSpec>(&spec_)) return 1;
    return 2;
  }

  double sigma() const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) return s->sigma;
    if (const auto* s = std::get_if<MarginSpec>(&spec_)) return s->sigma;
    return std::get<HardInstanceSpec>(spec_).sigma;
  }

  double x_max() const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) return s->x_max;
    if (const auto* s = std::get_if<MarginSpec>(&spec_)) return s->x_max();
    return std::get<HardInstanceSpec>(spec_).x_max;
  }

  TrueModel sample_model(Rng& rng) const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_))
      return sample_synthetic_model(*s, rng);
    if (const auto* s = std::get_if<MarginSpec>(&spec_)) return margin_model(*s);
    return sample_hard_model(std::get<HardInstanceSpec>(spec_), rng);
  }

  ContextRound gen_round(Rng& rng) const {
    if (const auto* s = std::get_if<SyntheticSpec>(&spec_))
      return gen_synthetic_round(*s, rng);
    if (const auto* s = std::get_if<MarginSpec>(&spec_))
      return gen_margin_round(*s, rng);
    return gen_hard_round(std::get<HardInstanceSpec>(spec_), rng);
  }

  /// Population feature second-moment matrix (context distribution oracle);
  /// call once before sharing this object across workers.
  const Mat& population_covariance() const {
    if (!pop_cov_) {
      if (const auto* s = std::get_if<SyntheticSpec>(&spec_)) {
        pop_cov_ = population_clamped_ar_covariance(s->d, s->cov_decay, s->x_max);
      } else if (const auto* s = std::get_if<MarginSpec>(&spec_)) {
        pop_cov_ =
            population_clamped_ar_covariance(s->d, s->cov_decay, s->base_x_max);
      } else {
        const auto& h = std::get<HardInstanceSpec>(spec_);
        Mat m = Mat::Zero(h.dim(), h.dim());
        m(0, 0) = 1.0 - h.p_zero();
        const double payload = clamped_normal_second_moment(h.x_max);
        for (int i = 1; i < h.dim(); ++i) m(i, i) = payload;
        pop_cov_ = std::move(m);
      }
    }
    return *pop_cov_;
  }

 private:
  EnvironmentSpec spec_;
  mutable std::optional<Mat> pop_cov_;
};

// ---------------------------------------------------------------------------
// policy construction
// ---------------------------------------------------------------------------

/// Everything policy construction needs to know about the surrounding run.
struct PolicyBuildContext {
  int dim = 0;
  int num_arms = 2;
  double sigma = 1.0;
  double x_max = 1.0;
  /// Population feature second-moment matrix; required only when
  /// theoretical-mode tau0 must be derived (nullptr otherwise).
  const Mat* population_covariance = nullptr;
};

/// Builds a fresh policy instance for one (policy, repetition) job.  In
/// theoretical constant mode the ball policy's scales are derived from the
/// environment oracle: lambda0 from (sigma, x_max), tau0 additionally from
/// the population compatibility constant on the model's support.
inline std::unique_ptr<Policy> build_policy(const PolicySpec& spec,
                                            ConstantMode mode,
                                            const PolicyBuildContext& ctx,
                                            const TrueModel& model,
                                            std::uint64_t policy_seed,
                                            int diag_n_starts) {
  const int d = ctx.dim;
  switch (spec.kind) {
    case PolicyKind::kL1Ball:
    case PolicyKind::kGreedy: {
      L1BallConfig cfg = spec.l1ball;
      if (spec.kind == PolicyKind::kGreedy) cfg.tau0 = 0.0;
      if (mode == ConstantMode::kTheoretical) {
        cfg.lambda0 = theory_lambda0(ctx.sigma, ctx.x_max);
        if (spec.kind != PolicyKind::kGreedy) {
          if (ctx.population_covariance == nullptr)
            throw ConfigError("experiment.constant_mode",
                              "theoretical constants need a generative environment");
          CompatConfig cc;
          cc.n_starts = diag_n_starts;
          const double phi0 = compatibility_estimate(*ctx.population_covariance,
                                                     model.support, cc);
          cfg.tau0 = theory_tau0(static_cast<int>(model.support.size()),
                                 ctx.sigma, ctx.x_max, phi0);
        }
      }
      return std::make_unique<L1BallPolicy>(d, cfg);
    }
    case PolicyKind::kOful: {
      OfulConfig cfg = spec.oful;
      cfg.x_max = ctx.x_max;
      return std::make_unique<OfulPolicy>(d, cfg);
    }
    case PolicyKind::kLassoBandit:
      return std::make_unique<LassoBanditPolicy>(d, ctx.num_arms, spec.lasso_bandit);
    case PolicyKind::kOlsBandit:
      return std::make_unique<OlsBanditPolicy>(d, ctx.num_arms, spec.ols_bandit);
    case PolicyKind::kRandom:
      return std::make_unique<UniformRandomPolicy>(policy_seed);
    case PolicyKind::kConstant:
      if (spec.constant_arm < 0)
        throw ConfigError("policy.arm",
                          "constant policy needs an explicit arm outside replay");
      return std::make_unique<ConstantPolicy>(spec.constant_arm);
    case PolicyKind::kOracle:
      return std::make_unique<OraclePolicy>();
  }
  throw ValidationError("build_policy: unreachable");
}

// ---------------------------------------------------------------------------
// worker pool
// ---------------------------------------------------------------------------

struct RunnerOptions {
  int jobs = 0;  ///< 0: use L1BANDIT_JOBS env var, else hardware threads
  std::string out_dir_override;
  std::optional<std::uint64_t> seed_override;
  bool write_files = true;
};

inline int resolve_job_count(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("L1BANDIT_JOBS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

/// Runs fn(0..total-1) on up to `jobs` threads; results must be written to
/// pre-sized slots so the outcome is independent of scheduling.
inline void run_job_grid(int jobs, int total, const std::function<void(int)>& fn) {
  if (total <= 0) return;
  const int n = std::min(std::max(1, jobs), total);
  if (n == 1) {
    for (int i = 0; i < total; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mu;
  auto worker = [&] {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= total) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mu);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> threads;
  threads.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& th : threads) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

// ---------------------------------------------------------------------------
// experiment driver
// ---------------------------------------------------------------------------

struct RunOutputs {
  std::vector<std::vector<RegretTrace>> traces;  ///< [policy][rep]
  std::vector<SummaryRow> summary;
  std::vector<std::vector<std::vector<DiagnosticsRow>>> diagnostics;  ///< [policy][rep]
  std::string out_dir;
};

namespace detail {

inline std::string sanitize_filename(const std::string& s) {
  std::string out;
  for (char c : s)
    out.push_back(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'
                      ? c
                      : '_');
  return out;
}

inline std::vector<long> summary_checkpoints(long horizon, int every) {
  std::vector<long> ts;
  for (long t = every; t < horizon; t += every) ts.push_back(t);
  ts.push_back(horizon);
  return ts;
}

inline std::vector<int> diagnostic_checkpoints(long horizon) {
  std::vector<int> ts;
  for (long t = 1; t < horizon; t *= 2) ts.push_back(static_cast<int>(t));
  ts.push_back(static_cast<int>(horizon));
  return ts;
}

inline void append_mean_sd_rows(std::vector<SummaryRow>* out,
                                const std::vector<std::vector<RegretTrace>>& traces,
                                const std::vector<PolicySpec>& policies,
                                const std::vector<long>& checkpoints,
                                bool as_rate) {
  for (std::size_t p = 0; p < policies.size(); ++p) {
    for (long t : checkpoints) {
      double sum = 0.0, sum2 = 0.0;
      int n = 0;
      for (const RegretTrace& tr : traces[p]) {
        if (t < 1 || t > static_cast<long>(tr.rows.size())) continue;
        double v = tr.rows[static_cast<std::size_t>(t - 1)].cum_regret;
        if (as_rate) v /= static_cast<double>(t);
        sum += v;
        sum2 += v * v;
        ++n;
      }
      if (n == 0) continue;
      SummaryRow row;
      row.t = t;
      row.policy = policies[p].label;
      row.mean = sum / n;
      row.sd = n > 1 ? std::sqrt(std::max(0.0, (sum2 - sum * sum / n) / (n - 1)))
                     : 0.0;
      out->push_back(std::move(row));
    }
  }
}

inline std::vector<ChartSeries> summary_to_series(
    const std::vector<SummaryRow>& rows, const std::vector<PolicySpec>& policies) {
  std::vector<ChartSeries> series;
  for (const PolicySpec& p : policies) {
    ChartSeries s;
    s.label = p.label;
    for (const SummaryRow& r : rows)
      if (r.policy == p.label)
        s.points.emplace_back(static_cast<double>(r.t), r.mean);
    series.push_back(std::move(s));
  }
  return series;
}

}  // namespace detail

/// Simulated-environment experiment: for each (policy, repetition) pair a
/// fresh policy faces a fresh context stream; the true model is drawn once
/// per repetition and shared by all policies of that repetition.
inline RunOutputs run_experiment(const ExperimentConfig& cfg_in,
                                 const RunnerOptions& options = {}) {
  ExperimentConfig cfg = cfg_in;
  if (options.seed_override) cfg.exp.master_seed = *options.seed_override;
  if (!options.out_dir_override.empty()) cfg.exp.out_dir = options.out_dir_override;
  if (std::holds_alternative<ReplaySpec>(cfg.env))
    throw ConfigError("environment.kind",
                      "replay environments run via the replay driver");

  const SimEnvironment env(cfg.env);
  const bool need_pop_cov =
      cfg.exp.constant_mode == ConstantMode::kTheoretical;
  if (need_pop_cov) env.population_covariance();  // warm the shared cache

  const int n_policies = static_cast<int>(cfg.policies.size());
  const int n_reps = cfg.exp.repetitions;
  const long horizon = cfg.exp.horizon;
  const std::uint64_t master = cfg.exp.master_seed;

  RunOutputs out;
  out.out_dir = cfg.exp.out_dir;
  out.traces.assign(static_cast<std::size_t>(n_policies),
                    std::vector<RegretTrace>(static_cast<std::size_t>(n_reps)));
  out.diagnostics.assign(
      static_cast<std::size_t>(n_policies),
      std::vector<std::vector<DiagnosticsRow>>(static_cast<std::size_t>(n_reps)));

  const std::vector<int> diag_ts = detail::diagnostic_checkpoints(horizon);

  auto job = [&](int index) {
    const int p = index / n_reps;
    const int rep = index % n_reps;
    const PolicySpec& pspec = cfg.policies[static_cast<std::size_t>(p)];

    Rng model_rng(derive_seed(master, "model", static_cast<std::uint64_t>(rep),
                              stream::kModel));
    const TrueModel model = env.sample_model(model_rng);

    Rng env_rng(derive_seed(master, pspec.label, static_cast<std::uint64_t>(rep),
                            stream::kEnvironment));
    const std::uint64_t policy_seed = derive_seed(
        master, pspec.label, static_cast<std::uint64_t>(rep), stream::kPolicy);
    PolicyBuildContext ctx;
    ctx.dim = env.dim();
    ctx.num_arms = env.num_arms();
    ctx.sigma = env.sigma();
    ctx.x_max = env.x_max();
    if (need_pop_cov) ctx.population_covariance = &env.population_covariance();
    std::unique_ptr<Policy> policy = build_policy(
        pspec, cfg.exp.constant_mode, ctx, model, policy_seed, cfg.exp.diag_n_starts);
    auto* oracle = dynamic_cast<OraclePolicy*>(policy.get());

    RegretTrace trace;
    trace.policy_id = pspec.label;
    trace.rep = rep;
    trace.seed = env_rng();  // record a fingerprint of the stream
    trace.rows.reserve(static_cast<std::size_t>(horizon));

    std::unique_ptr<DesignState> chosen_design;
    if (cfg.exp.diagnostics)
      chosen_design = std::make_unique<DesignState>(env.dim());
    std::size_t next_diag = 0;
    const double regret_cap = 2.0 * model.b * model.x_max;

    double cum = 0.0;
    for (long t = 1; t <= horizon; ++t) {
      const ContextRound round = env.gen_round(env_rng);
      const int astar = best_arm(round, model.beta);
      if (oracle != nullptr) oracle->set_hint(astar);
      const int a = policy->select(round);
      const double reg = instant_regret(round, model, a);
      if (reg < 0.0 || reg > regret_cap + 1e-9)
        throw ValidationError("run_experiment: regret outside [0, 2*b*x_max]");
      const Vec& x = round.arms[static_cast<std::size_t>(a)];
      const double reward = draw_reward(x, model, env_rng);
      policy->update({static_cast<int>(t), a, x, reward});
      cum += reg;
      trace.rows.push_back({static_cast<int>(t), a, astar, reg, cum});

      if (cfg.exp.diagnostics) {
        chosen_design->update(x, reward);
        if (next_diag < diag_ts.size() &&
            t == diag_ts[next_diag]) {
          DiagnosticsRow row;
          row.t = static_cast<int>(t);
          const Mat cov = chosen_design->covariance();
          CompatConfig cc;
          cc.n_starts = cfg.exp.diag_n_starts;
          row.phi_hat = compatibility_estimate(cov, model.support, cc);
          const EigenProbe probe = sparse_eigen_probe(
              cov, static_cast<int>(model.support.size()));
          row.rho_min = probe.rho_min;
          row.rho_max = probe.rho_max;
          if (auto ball = policy->ball())
            row.coverage = coverage_check(*ball, model.beta) ? 1.0 : 0.0;
          else
            row.coverage = std::numeric_limits<double>::quiet_NaN();
          row.optimal_fraction =
              optimal_fraction(trace, static_cast<int>(t / 2));
          out.diagnostics[static_cast<std::size_t>(p)][static_cast<std::size_t>(rep)]
              .push_back(row);
          ++next_diag;
        }
      }
    }
    trace.events = policy->take_events();
    out.traces[static_cast<std::size_t>(p)][static_cast<std::size_t>(rep)] =
        std::move(trace);
  };

  run_job_grid(resolve_job_count(options.jobs), n_policies * n_reps, job);

  detail::append_mean_sd_rows(&out.summary, out.traces, cfg.policies,
                              detail::summary_checkpoints(horizon, cfg.exp.checkpoint_every),
                              /*as_rate=*/false);

  if (options.write_files) {
    ensure_directory(cfg.exp.out_dir);
    write_text_file(cfg.exp.out_dir + "/config.resolved", write_config(cfg));
    for (int p = 0; p < n_policies; ++p) {
      const std::string label =
          detail::sanitize_filename(cfg.policies[static_cast<std::size_t>(p)].label);
      for (int rep = 0; rep < n_reps; ++rep) {
        const RegretTrace& tr =
            out.traces[static_cast<std::size_t>(p)][static_cast<std::size_t>(rep)];
        write_text_file(cfg.exp.out_dir + "/trace_" + label + "_rep" +
                            std::to_string(rep) + ".csv",
                        trace_to_csv(tr));
        const auto& diag =
            out.diagnostics[static_cast<std::size_t>(p)][static_cast<std::size_t>(rep)];
        if (!diag.empty())
          write_text_file(cfg.exp.out_dir + "/diagnostics_" + label + "_rep" +
                              std::to_string(rep) + ".csv",
                          diagnostics_to_csv(diag));
      }
    }
    write_text_file(cfg.exp.out_dir + "/summary.csv",
                    summary_to_csv(out.summary, "cum_regret"));
    std::ostringstream events;
    events << "t,rep,policy,message\n";
    bool any_events = false;
    for (int p = 0; p < n_policies; ++p)
      for (int rep = 0; rep < n_reps; ++rep)
        for (const auto& [t, msg] :
             out.traces[static_cast<std::size_t>(p)][static_cast<std::size_t>(rep)]
                 .events) {
          std::string clean = msg;
          for (char& c : clean)
            if (c == ',' || c == '\n') c = ';';
          events << t << ',' << rep << ','
                 << cfg.policies[static_cast<std::size_t>(p)].label << ',' << clean
                 << "\n";
          any_events = true;
        }
    if (any_events)
      write_text_file(cfg.exp.out_dir + "/events.csv", events.str());
    if (cfg.exp.chart) {
      ChartOptions copt;
      write_text_file(cfg.exp.out_dir + "/regret.svg",
                      render_chart_svg(
                          detail::summary_to_series(out.summary, cfg.policies), copt));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// replay driver
// ---------------------------------------------------------------------------

/// Replays a labeled dataset as a bandit: per permutation of the row order,
/// every policy walks the rows once under block embedding, earning reward 1
/// when it picks the recorded best arm.  Traces reuse the regret schema
/// with instant_regret = 1 - reward (the misclassification indicator).
inline RunOutputs run_replay(const ExperimentConfig& cfg_in,
                             const RunnerOptions& options = {}) {
  ExperimentConfig cfg = cfg_in;
  if (options.seed_override) cfg.exp.master_seed = *options.seed_override;
  if (!options.out_dir_override.empty()) cfg.exp.out_dir = options.out_dir_override;
  const auto* rspec = std::get_if<ReplaySpec>(&cfg.env);
  if (rspec == nullptr)
    throw ConfigError("environment.kind", "replay driver needs kind = replay");
  if (cfg.exp.constant_mode == ConstantMode::kTheoretical)
    throw ConfigError("experiment.constant_mode",
                      "theoretical constants need a generative environment");

  const ReplayDataset ds = replay_load(rspec->path, rspec->num_arms);
  const long n_rows = static_cast<long>(ds.labels.size());
  const int K = ds.num_arms;
  const int dim = K * ds.num_covariates;

  int majority = 0;
  {
    std::vector<long> counts(static_cast<std::size_t>(K), 0);
    for (int lab : ds.labels) ++counts[static_cast<std::size_t>(lab)];
    for (int a = 1; a < K; ++a)
      if (counts[static_cast<std::size_t>(a)] > counts[static_cast<std::size_t>(majority)])
        majority = a;
  }

  const int n_policies = static_cast<int>(cfg.policies.size());
  const int n_perms = cfg.exp.replay_permutations;
  const std::uint64_t master = cfg.exp.master_seed;

  RunOutputs out;
  out.out_dir = cfg.exp.out_dir;
  out.traces.assign(static_cast<std::size_t>(n_policies),
                    std::vector<RegretTrace>(static_cast<std::size_t>(n_perms)));

  auto job = [&](int index) {
    const int p = index / n_perms;
    const int perm = index % n_perms;
    const PolicySpec& pspec = cfg.policies[static_cast<std::size_t>(p)];

    std::vector<long> order(static_cast<std::size_t>(n_rows));
    std::iota(order.begin(), order.end(), 0L);
    Rng perm_rng(derive_seed(master, "perm", static_cast<std::uint64_t>(perm),
                             stream::kPermutation));
    shuffle(order, perm_rng);

    const std::uint64_t policy_seed = derive_seed(
        master, pspec.label, static_cast<std::uint64_t>(perm), stream::kPolicy);
    std::unique_ptr<Policy> policy;
    if (pspec.kind == PolicyKind::kConstant) {
      policy = std::make_unique<ConstantPolicy>(
          pspec.constant_arm < 0 ? majority : pspec.constant_arm);
    } else {
      TrueModel dummy;  // replay has no generative model; only dim matters
      dummy.beta = Vec::Zero(dim);
      PolicyBuildContext ctx;
      ctx.dim = dim;
      ctx.num_arms = K;
      policy = build_policy(pspec, cfg.exp.constant_mode, ctx, dummy, policy_seed,
                            cfg.exp.diag_n_starts);
    }
    auto* oracle = dynamic_cast<OraclePolicy*>(policy.get());

    RegretTrace trace;
    trace.policy_id = pspec.label;
    trace.rep = perm;
    trace.rows.reserve(static_cast<std::size_t>(n_rows));
    double miss_count = 0.0;
    for (long i = 0; i < n_rows; ++i) {
      const long r = order[static_cast<std::size_t>(i)];
      const ContextRound round = embed_round(ds.rows.row(r).transpose(), K);
      const int label = ds.labels[static_cast<std::size_t>(r)];
      if (oracle != nullptr) oracle->set_hint(label);
      const int a = policy->select(round);
      const double reward = a == label ? 1.0 : 0.0;
      policy->update({static_cast<int>(i + 1), a,
                      round.arms[static_cast<std::size_t>(a)], reward});
      miss_count += 1.0 - reward;
      trace.rows.push_back({static_cast<int>(i + 1), a, label, 1.0 - reward,
                            miss_count});
    }
    trace.events = policy->take_events();
    out.traces[static_cast<std::size_t>(p)][static_cast<std::size_t>(perm)] =
        std::move(trace);
  };

  run_job_grid(resolve_job_count(options.jobs), n_policies * n_perms, job);

  detail::append_mean_sd_rows(&out.summary, out.traces, cfg.policies,
                              detail::summary_checkpoints(n_rows, cfg.exp.checkpoint_every),
                              /*as_rate=*/true);

  if (options.write_files) {
    ensure_directory(cfg.exp.out_dir);
    write_text_file(cfg.exp.out_dir + "/config.resolved", write_config(cfg));
    for (int p = 0; p < n_policies; ++p) {
      const std::string label =
          detail::sanitize_filename(cfg.policies[static_cast<std::size_t>(p)].label);
      for (int perm = 0; perm < n_perms; ++perm)
        write_text_file(
            cfg.exp.out_dir + "/trace_" + label + "_perm" + std::to_string(perm) +
                ".csv",
            trace_to_csv(
                out.traces[static_cast<std::size_t>(p)][static_cast<std::size_t>(perm)]));
    }
    write_text_file(cfg.exp.out_dir + "/replay_summary.csv",
                    summary_to_csv(out.summary, "miss_rate"));
    if (cfg.exp.chart) {
      ChartOptions copt;
      copt.y_label = "misclassification rate";
      write_text_file(cfg.exp.out_dir + "/miss_rate.svg",
                      render_chart_svg(
                          detail::summary_to_series(out.summary, cfg.policies), copt));
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// diagnose driver
// ---------------------------------------------------------------------------

/// Recomputes diagnostics for a finished run directory by replaying its
/// pinned config (the derived streams make the rerun exact) and writes
/// diagnostics_<policy>_rep<k>.csv files next to the traces.  When the
/// config carries delta_star, a conditional-moment sensitivity table is
/// written as well.
inline RunOutputs diagnose_run(const std::string& trace_dir,
                               const RunnerOptions& options = {}) {
  ExperimentConfig cfg = parse_config_file(trace_dir + "/config.resolved");
  if (std::holds_alternative<ReplaySpec>(cfg.env))
    throw ConfigError("environment.kind",
                      "diagnose needs a simulated environment");
  cfg.exp.diagnostics = true;
  RunnerOptions opts = options;
  opts.write_files = false;
  opts.out_dir_override.clear();
  RunOutputs out = run_experiment(cfg, opts);

  for (std::size_t p = 0; p < cfg.policies.size(); ++p) {
    const std::string label = detail::sanitize_filename(cfg.policies[p].label);
    for (std::size_t rep = 0; rep < out.diagnostics[p].size(); ++rep)
      write_text_file(trace_dir + "/diagnostics_" + label + "_rep" +
                          std::to_string(rep) + ".csv",
                      diagnostics_to_csv(out.diagnostics[p][rep]));
  }

  if (cfg.exp.delta_star) {
    const SimEnvironment env(cfg.env);
    Rng model_rng(derive_seed(cfg.exp.master_seed, "model", 0, stream::kModel));
    const TrueModel model = env.sample_model(model_rng);
    Rng diag_rng(derive_seed(cfg.exp.master_seed, "diagnose", 0, stream::kDiagnostics));
    std::ostringstream csv;
    csv << "delta_star,kept,total,phi_cond,rho_min,rho_max\n";
    for (double mult : {0.5, 1.0, 2.0}) {
      const double ds = *cfg.exp.delta_star * mult;
      const ConditionalMoments cm = conditional_design_moments(
          [&](Rng& r) { return env.gen_round(r); }, model, ds, 4000, diag_rng);
      double phi = std::numeric_limits<double>::quiet_NaN();
      double rmin = phi, rmax = phi;
      if (cm.kept > 0) {
        CompatConfig cc;
        cc.n_starts = cfg.exp.diag_n_starts;
        phi = compatibility_estimate(cm.second_moment, model.support, cc);
        const EigenProbe probe = sparse_eigen_probe(
            cm.second_moment, static_cast<int>(model.support.size()));
        rmin = probe.rho_min;
        rmax = probe.rho_max;
      }
      csv << format_double(ds) << ',' << cm.kept << ',' << cm.total << ','
          << format_double(phi) << ',' << format_double(rmin) << ','
          << format_double(rmax) << "\n";
    }
    write_text_file(trace_dir + "/condition_sensitivity.csv", csv.str());
  }
  out.out_dir = trace_dir;
  return out;
}

/// Reads a summary CSV and renders its series (first-appearance order).
inline void chart_summary_file(const std::string& summary_path,
                               const std::string& out_svg) {
  const std::vector<SummaryRow> rows = summary_from_csv_file(summary_path);
  std::vector<ChartSeries> series;
  for (const SummaryRow& r : rows) {
    ChartSeries* s = nullptr;
    for (ChartSeries& cand : series)
      if (cand.label == r.policy) s = &cand;
    if (s == nullptr) {
      series.push_back({r.policy, {}});
      s = &series.back();
    }
    s->points.emplace_back(static_cast<double>(r.t), r.mean);
  }
  write_text_file(out_svg, render_chart_svg(series));
}

}  // namespace l1bandit
