#pragma once

// Core types for contextual linear bandit simulation: the true model, one
// round of arm contexts, regret bookkeeping, and the policy interface.

#include <Eigen/Dense>

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace l1bandit {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct DesignState;  // defined in solvers.hpp

/// Thrown when an input file or argument fails validation.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Thrown on filesystem failures (unreadable/unwritable paths).
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Ground truth of a simulated instance: sparse parameter vector, its
/// support, an l1-norm bound, noise scale and the context box bound.
struct TrueModel {
  Vec beta;
  std::vector<int> support;  ///< indices of nonzero coefficients, ascending
  double b = 0.0;            ///< bound on ||beta||_1 (equals it when sampled)
  double sigma = 1.0;        ///< sub-Gaussian noise scale
  double x_max = 1.0;        ///< coordinate-wise bound on every context
};

/// The K candidate feature vectors offered in one round.
struct ContextRound {
  std::vector<Vec> arms;

  int num_arms() const { return static_cast<int>(arms.size()); }
  int dim() const { return arms.empty() ? 0 : static_cast<int>(arms[0].size()); }
};

/// What a policy learns after pulling: round index (1-based), chosen arm,
/// its feature vector and the realized reward.
struct Observation {
  int t = 0;
  int arm = 0;
  Vec x;
  double reward = 0.0;
};

/// l1-ball parameter region kept by the ball policy: all beta with
/// ||beta - center||_1 <= radius.
struct ConfidenceBall {
  Vec center;
  double radius = 0.0;

  bool contains(const Vec& beta) const {
    return (beta - center).lpNorm<1>() <= radius;
  }
};

/// One recorded round of a run.
struct RegretRow {
  int t = 0;
  int chosen_arm = 0;
  int optimal_arm = 0;
  double instant_regret = 0.0;
  double cum_regret = 0.0;
};

/// Full record of one (policy, repetition) run.
struct RegretTrace {
  std::string policy_id;
  int rep = 0;
  std::uint64_t seed = 0;
  std::vector<RegretRow> rows;
  /// Irregular events (e.g. a solver that hit its iteration cap), as
  /// (round, message) pairs; empty in the common case.
  std::vector<std::pair<int, std::string>> events;
};

/// Index of the arm with the highest expected reward under `beta`;
/// ties break toward the lowest index.  Scale-invariant in beta > 0.
inline int best_arm(const ContextRound& round, const Vec& beta) {
  if (round.arms.empty()) throw ValidationError("best_arm: empty round");
  int best = 0;
  double best_val = round.arms[0].dot(beta);
  for (int a = 1; a < round.num_arms(); ++a) {
    if (round.arms[static_cast<std::size_t>(a)].size() != beta.size())
      throw ValidationError("best_arm: arm dimension mismatch");
    const double v = round.arms[static_cast<std::size_t>(a)].dot(beta);
    if (v > best_val) {
      best_val = v;
      best = a;
    }
  }
  if (round.arms[0].size() != beta.size())
    throw ValidationError("best_arm: arm dimension mismatch");
  return best;
}

/// Expected-reward shortfall of the chosen arm against the best arm.
/// Non-negative by construction (the maximum ranges over the same dot
/// products the chosen value comes from), and at most 2*b*x_max.
inline double instant_regret(const ContextRound& round, const TrueModel& model,
                             int chosen) {
  if (chosen < 0 || chosen >= round.num_arms())
    throw ValidationError("instant_regret: chosen arm out of range");
  double best_val = -std::numeric_limits<double>::infinity();
  for (const Vec& x : round.arms) best_val = std::max(best_val, x.dot(model.beta));
  return best_val - round.arms[static_cast<std::size_t>(chosen)].dot(model.beta);
}

/// Interface every bandit policy implements.  A policy sees one round of
/// contexts, commits to an arm, then learns only the chosen arm's reward.
class Policy {
 public:
  virtual ~Policy() = default;

  /// Chooses an arm for the upcoming round.
  virtual int select(const ContextRound& round) = 0;

  /// Consumes the feedback for the round just played.
  virtual void update(const Observation& obs) = 0;

  /// Design accumulated by the policy, if it keeps one (for diagnostics).
  virtual const DesignState* design() const { return nullptr; }

  /// Current parameter region, if the policy maintains one.
  virtual std::optional<ConfidenceBall> ball() const { return std::nullopt; }

  /// Drains accumulated irregular-event messages as (round, text) pairs.
  virtual std::vector<std::pair<int, std::string>> take_events() { return {}; }
};

}  // namespace l1bandit
