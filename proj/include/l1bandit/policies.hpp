#pragma once

// Bandit policies.
//
//  * L1BallPolicy     - optimism over an l1 parameter ball centered at a
//                       LASSO estimate; the ball maximum has the closed form
//                       score(x) = <x, center> + radius * ||x||_inf.
//  * OfulPolicy       - classic ellipsoidal optimism around a ridge estimate.
//  * LassoBanditPolicy / OlsBanditPolicy
//                     - forced-sampling two-stage baselines sharing one
//                       parameter vector across arms.
//  * GreedyPolicy     - the ball policy with radius zero (pure exploitation).
//  * UniformRandomPolicy, ConstantPolicy, OraclePolicy - controls.

#include "l1bandit/core.hpp"
#include "l1bandit/rng.hpp"
#include "l1bandit/solvers.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <sstream>

namespace l1bandit {

// ---------------------------------------------------------------------------
// schedules and constants
// ---------------------------------------------------------------------------

/// Shrinking schedule c0 * sqrt((ln d + ln t)/t) shared by the penalty and
/// the ball radius.  t is 1-based; t=1 gives c0*sqrt(ln d).
inline double schedule_value(double c0, int t, int d) {
  if (t < 1) throw ValidationError("schedule_value: t must be >= 1");
  if (d < 1) throw ValidationError("schedule_value: d must be >= 1");
  const double td = static_cast<double>(t);
  return c0 * std::sqrt((std::log(static_cast<double>(d)) + std::log(td)) / td);
}

/// Conservative analysis-backed constants for the ball policy.  The
/// practical defaults (0.5 and 1.0) are far smaller; these are the values
/// under which the coverage guarantee is proved.
inline double theory_lambda0(double sigma, double x_max) {
  return 2.0 * std::sqrt(2.0) * sigma * x_max;
}
inline double theory_tau0(int s0, double sigma, double x_max, double phi0) {
  if (phi0 <= 0.0) throw ValidationError("theory_tau0: phi0 must be positive");
  return 384.0 * std::sqrt(2.0) * s0 * sigma * x_max / (phi0 * phi0);
}

/// Radius at which the estimate provably traps the truth under a penalty of
/// 2*sigma*x_max*sqrt((2 ln t + 2 ln d)/t) and compatibility phi.
inline double analysis_radius(int s0, double sigma, double x_max, double phi,
                              int t, int d) {
  if (phi <= 0.0) throw ValidationError("analysis_radius: phi must be positive");
  const double td = static_cast<double>(t);
  return 6.0 * s0 * sigma * x_max / (phi * phi) *
         std::sqrt((2.0 * std::log(td) + 2.0 * std::log(static_cast<double>(d))) / td);
}

// ---------------------------------------------------------------------------
// l1-ball policy
// ---------------------------------------------------------------------------

/// Closed-form argmax of <x, beta> over beta in the ball and over arms:
/// the inner maximum is <x, center> + radius*||x||_inf, attained at an
/// extreme point of the ball on the arm's largest-magnitude coordinate.
/// Ties break toward the lowest arm index.
inline int l1ball_select(const ContextRound& round, const ConfidenceBall& ball) {
  if (round.arms.empty()) throw ValidationError("l1ball_select: empty round");
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < round.num_arms(); ++a) {
    const Vec& x = round.arms[static_cast<std::size_t>(a)];
    if (x.size() != ball.center.size())
      throw ValidationError("l1ball_select: arm dimension mismatch");
    const double score =
        x.dot(ball.center) + ball.radius * x.lpNorm<Eigen::Infinity>();
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

struct L1BallConfig {
  double lambda0 = 0.5;  ///< penalty scale
  double tau0 = 1.0;     ///< radius scale; the first round uses it unscaled
  bool resolve_doubling = false;  ///< refresh the center only at t in {1,2,4,...}
  LassoConfig solver;
};

class L1BallPolicy : public Policy {
 public:
  L1BallPolicy(int dim, const L1BallConfig& cfg)
      : cfg_(cfg), design_(dim), center_(Vec::Zero(dim)), radius_(cfg.tau0) {}

  int select(const ContextRound& round) override {
    return l1ball_select(round, {center_, radius_});
  }

  void update(const Observation& obs) override {
    design_.update(obs.x, obs.reward);
    const int t = design_.t;
    const int d = design_.dim();
    const bool resolve =
        !cfg_.resolve_doubling || (t & (t - 1)) == 0;  // powers of two and t=1
    if (resolve) {
      const double lam = schedule_value(cfg_.lambda0, t, d);
      LassoSolution sol = lasso_solve(design_, lam, &center_, cfg_.solver);
      if (!sol.converged) {
        std::ostringstream msg;
        msg << "lasso stopped before convergence (sweeps=" << sol.sweeps
            << ", kkt=" << sol.kkt_violation << ")";
        events_.emplace_back(obs.t, msg.str());
      }
      center_ = std::move(sol.beta);
    }
    radius_ = schedule_value(cfg_.tau0, t, d);
  }

  const DesignState* design() const override { return &design_; }
  std::optional<ConfidenceBall> ball() const override {
    return ConfidenceBall{center_, radius_};
  }
  std::vector<std::pair<int, std::string>> take_events() override {
    auto out = std::move(events_);
    events_.clear();
    return out;
  }

 private:
  L1BallConfig cfg_;
  DesignState design_;
  Vec center_;
  double radius_;
  std::vector<std::pair<int, std::string>> events_;
};

/// Pure exploitation on the same LASSO center: a ball of radius zero.
class GreedyPolicy : public L1BallPolicy {
 public:
  GreedyPolicy(int dim, double lambda0 = 0.5)
      : L1BallPolicy(dim, make_config(lambda0)) {}

 private:
  static L1BallConfig make_config(double lambda0) {
    L1BallConfig cfg;
    cfg.lambda0 = lambda0;
    cfg.tau0 = 0.0;
    return cfg;
  }
};

// ---------------------------------------------------------------------------
// OFUL
// ---------------------------------------------------------------------------

struct OfulConfig {
  double lambda = 1.0;       ///< ridge regularizer
  double delta = 1e-4;       ///< confidence level
  double noise_scale = 1.0;  ///< sub-Gaussian reward-noise bound R
  double param_bound = 1.0;  ///< bound S on ||beta||_2
  double x_max = 1.0;        ///< coordinate bound on contexts
};

/// Ellipsoid radius after t observations in dimension d.
inline double oful_radius(const OfulConfig& cfg, int t, int d) {
  const double inner =
      (1.0 + static_cast<double>(t) * cfg.x_max * cfg.x_max *
                 static_cast<double>(d) / cfg.lambda) /
      cfg.delta;
  return cfg.noise_scale * std::sqrt(static_cast<double>(d) * std::log(inner)) +
         std::sqrt(cfg.lambda) * cfg.param_bound;
}

class OfulPolicy : public Policy {
 public:
  OfulPolicy(int dim, const OfulConfig& cfg) : cfg_(cfg), design_(dim) {
    if (cfg.lambda <= 0.0) throw ValidationError("OfulPolicy: lambda must be > 0");
    if (cfg.delta <= 0.0 || cfg.delta >= 1.0)
      throw ValidationError("OfulPolicy: delta must be in (0,1)");
  }

  int select(const ContextRound& round) override {
    if (round.arms.empty()) throw ValidationError("OfulPolicy: empty round");
    const int d = design_.dim();
    Mat v = design_.gram;
    v.diagonal().array() += cfg_.lambda;
    Eigen::LDLT<Mat> ldlt(v);
    const Vec beta = ldlt.solve(design_.xty);
    const double rho = oful_radius(cfg_, design_.t, d);
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < round.num_arms(); ++a) {
      const Vec& x = round.arms[static_cast<std::size_t>(a)];
      const double width = std::sqrt(std::max(0.0, x.dot(ldlt.solve(x))));
      const double score = x.dot(beta) + rho * width;
      if (score > best_score) {
        best_score = score;
        best = a;
      }
    }
    return best;
  }

  void update(const Observation& obs) override { design_.update(obs.x, obs.reward); }

  const DesignState* design() const override { return &design_; }

 private:
  OfulConfig cfg_;
  DesignState design_;
};

// ---------------------------------------------------------------------------
// forced-sampling two-stage baselines
// ---------------------------------------------------------------------------

/// Doubling-epoch forced-pull plan: epoch 0 covers rounds 1..K*q (all
/// forced, q per arm in order); epoch i >= 1 covers (K*q*2^{i-1}, K*q*2^i]
/// and forces its first K*q slots the same way.  Per-arm forced count up to
/// T is q*(1 + number of epochs), i.e. Theta(log T).
struct ForcedSamplingPlan {
  int num_arms = 2;
  int q = 1;
};

/// Arm prescribed for round t (1-based), or -1 when the round is free.
inline int forced_arm(const ForcedSamplingPlan& plan, int t) {
  if (t < 1) throw ValidationError("forced_arm: t must be >= 1");
  const long kq = static_cast<long>(plan.num_arms) * plan.q;
  if (kq <= 0) throw ValidationError("forced_arm: empty plan");
  if (t <= kq) return static_cast<int>((t - 1) / plan.q);
  long start = kq;  // epoch i covers (start, 2*start]
  while (2 * start < t) start *= 2;
  const long offset = t - start - 1;  // position within the epoch, 0-based
  if (offset < kq) return static_cast<int>(offset / plan.q);
  return -1;
}

/// Two-stage choice shared by the forced-sampling baselines: stage 1 keeps
/// every arm whose coarse (forced-sample) score is within h/2 of the best
/// coarse score, stage 2 picks the kept arm with the best refined
/// (all-sample) score.  Ties break toward the lowest index.
inline int two_stage_select(const ContextRound& round, const Vec& coarse_beta,
                            const Vec& refined_beta, double h) {
  if (round.arms.empty()) throw ValidationError("two_stage_select: empty round");
  const int k = round.num_arms();
  std::vector<double> coarse(static_cast<std::size_t>(k));
  double coarse_best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a) {
    coarse[static_cast<std::size_t>(a)] =
        round.arms[static_cast<std::size_t>(a)].dot(coarse_beta);
    coarse_best = std::max(coarse_best, coarse[static_cast<std::size_t>(a)]);
  }
  int best = -1;
  double best_score = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < k; ++a) {
    if (coarse[static_cast<std::size_t>(a)] < coarse_best - h / 2.0) continue;
    const double score = round.arms[static_cast<std::size_t>(a)].dot(refined_beta);
    if (score > best_score) {
      best_score = score;
      best = a;
    }
  }
  return best;
}

struct LassoBanditConfig {
  int q = 1;
  double h = 5.0;          ///< stage-1 keep width
  double lambda1 = 0.5;    ///< fixed penalty of the forced-sample estimate
  double lambda20 = 0.5;   ///< schedule scale of the all-sample estimate
  LassoConfig solver;
};

/// Forced-sampling baseline with LASSO estimates for both stages.
class LassoBanditPolicy : public Policy {
 public:
  LassoBanditPolicy(int dim, int num_arms, const LassoBanditConfig& cfg)
      : cfg_(cfg),
        plan_{num_arms, cfg.q},
        forced_(dim),
        all_(dim),
        beta_forced_(Vec::Zero(dim)),
        beta_all_(Vec::Zero(dim)) {}

  int select(const ContextRound& round) override {
    const int f = forced_arm(plan_, all_.t + 1);
    if (f >= 0 && f < round.num_arms()) return f;
    return two_stage_select(round, beta_forced_, beta_all_, cfg_.h);
  }

  void update(const Observation& obs) override {
    all_.update(obs.x, obs.reward);
    const int t = all_.t;
    const int d = all_.dim();
    if (forced_arm(plan_, t) >= 0) {
      forced_.update(obs.x, obs.reward);
      beta_forced_ =
          lasso_solve(forced_, cfg_.lambda1, &beta_forced_, cfg_.solver).beta;
    }
    const double lam = schedule_value(cfg_.lambda20, t, d);
    beta_all_ = lasso_solve(all_, lam, &beta_all_, cfg_.solver).beta;
  }

  const DesignState* design() const override { return &all_; }

 private:
  LassoBanditConfig cfg_;
  ForcedSamplingPlan plan_;
  DesignState forced_;
  DesignState all_;
  Vec beta_forced_;
  Vec beta_all_;
};

struct OlsBanditConfig {
  int q = 1;
  double h = 1.0;
};

/// Forced-sampling baseline with unpenalized least-squares estimates
/// (stabilized by a vanishing ridge proportional to the Gram trace).
class OlsBanditPolicy : public Policy {
 public:
  OlsBanditPolicy(int dim, int num_arms, const OlsBanditConfig& cfg)
      : cfg_(cfg), plan_{num_arms, cfg.q}, forced_(dim), all_(dim) {}

  int select(const ContextRound& round) override {
    const int f = forced_arm(plan_, all_.t + 1);
    if (f >= 0 && f < round.num_arms()) return f;
    return two_stage_select(round, near_ols(forced_), near_ols(all_), cfg_.h);
  }

  void update(const Observation& obs) override {
    all_.update(obs.x, obs.reward);
    if (forced_arm(plan_, all_.t) >= 0) forced_.update(obs.x, obs.reward);
  }

  const DesignState* design() const override { return &all_; }

 private:
  static Vec near_ols(const DesignState& s) {
    const double trace = s.gram.diagonal().sum();
    if (s.t == 0 || trace <= 0.0) return Vec::Zero(s.dim());
    return ridge_solve(s, 1e-10 * trace / s.dim());
  }

  OlsBanditConfig cfg_;
  ForcedSamplingPlan plan_;
  DesignState forced_;
  DesignState all_;
};

// ---------------------------------------------------------------------------
// controls
// ---------------------------------------------------------------------------

class UniformRandomPolicy : public Policy {
 public:
  explicit UniformRandomPolicy(std::uint64_t seed) : rng_(seed) {}

  int select(const ContextRound& round) override {
    if (round.arms.empty())
      throw ValidationError("UniformRandomPolicy: empty round");
    return uniform_int(rng_, round.num_arms());
  }
  void update(const Observation&) override {}

 private:
  Rng rng_;
};

/// Always plays the same arm (e.g. a fixed dosing level).
class ConstantPolicy : public Policy {
 public:
  explicit ConstantPolicy(int arm) : arm_(arm) {
    if (arm < 0) throw ValidationError("ConstantPolicy: negative arm");
  }

  int select(const ContextRound& round) override {
    if (arm_ >= round.num_arms())
      throw ValidationError("ConstantPolicy: arm out of range");
    return arm_;
  }
  void update(const Observation&) override {}

 private:
  int arm_;
};

/// Plays the arm the runner reveals as optimal each round (true-parameter
/// argmax in simulation, the recorded label in replay).
class OraclePolicy : public Policy {
 public:
  void set_hint(int arm) { hint_ = arm; }

  int select(const ContextRound& round) override {
    if (hint_ < 0 || hint_ >= round.num_arms())
      throw ValidationError("OraclePolicy: no hint for this round");
    return hint_;
  }
  void update(const Observation&) override {}

 private:
  int hint_ = -1;
};

}  // namespace l1bandit
