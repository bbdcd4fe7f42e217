#pragma once

// Estimation machinery shared by the policies: an incrementally maintained
// design (Gram matrix + cross moments) and the two regression solvers that
// run on it, l1-penalized least squares via cyclic coordinate descent and
// ridge regression.
//
// Everything works on the Gram form, so a solve after round t never touches
// the raw t x d design matrix:
//
//   objective(beta) = (1/2t) * (beta'G beta - 2 beta'q + yty) + lambda*||beta||_1
//
// with G = sum_s x_s x_s', q = sum_s y_s x_s, yty = sum_s y_s^2.

#include "l1bandit/core.hpp"

#include <cmath>
#include <cstdlib>

namespace l1bandit {

/// Sufficient statistics of all observations so far.  update() is a rank-1
/// refresh, so per-round cost is O(d^2) regardless of t.
struct DesignState {
  int t = 0;
  Mat gram;    ///< sum of x x'
  Vec xty;     ///< sum of y x
  double yty = 0.0;

  explicit DesignState(int dim)
      : gram(Mat::Zero(dim, dim)), xty(Vec::Zero(dim)) {}

  int dim() const { return static_cast<int>(xty.size()); }

  void update(const Vec& x, double y) {
    if (x.size() != xty.size())
      throw ValidationError("DesignState::update: dimension mismatch");
    gram.noalias() += x * x.transpose();
    xty.noalias() += y * x;
    yty += y * y;
    ++t;
  }

  /// Empirical second-moment matrix gram/t (zero matrix before any data).
  Mat covariance() const {
    if (t == 0) return Mat::Zero(dim(), dim());
    return gram / static_cast<double>(t);
  }
};

struct LassoConfig {
  double tol = 1e-8;        ///< stop when no coordinate moves more than this
  int max_sweeps = 10000;   ///< hard cap on full passes
  double kkt_tol = 1e-6;    ///< stationarity certificate required for "converged"
  bool record_objective = false;  ///< fill LassoSolution::objective_path
};

struct LassoSolution {
  Vec beta;
  double lambda = 0.0;
  int sweeps = 0;
  bool converged = false;
  double kkt_violation = 0.0;
  int zero_variance_coords = 0;  ///< coordinates pinned at 0 for lack of data
  double objective = 0.0;
  std::vector<double> objective_path;  ///< per-sweep values when recorded
};

inline double soft_threshold(double z, double g) {
  if (z > g) return z - g;
  if (z < -g) return z + g;
  return 0.0;
}

/// Penalized least-squares objective at beta, in the averaged form above.
inline double lasso_objective(const DesignState& s, const Vec& beta,
                              double lambda) {
  if (s.t == 0) return lambda * beta.lpNorm<1>();
  const double t = static_cast<double>(s.t);
  const double quad =
      beta.dot(s.gram * beta) - 2.0 * beta.dot(s.xty) + s.yty;
  return quad / (2.0 * t) + lambda * beta.lpNorm<1>();
}

/// Largest violation of the subgradient stationarity conditions at beta:
/// for active coordinates |g_j + lambda*sign(beta_j)|, for inactive ones
/// max(0, |g_j| - lambda), where g = (G beta - q)/t.  Zero at an exact
/// minimizer.
inline double kkt_residual(const DesignState& s, const Vec& beta,
                           double lambda) {
  if (s.t == 0) return 0.0;
  const double t = static_cast<double>(s.t);
  const Vec grad = (s.gram * beta - s.xty) / t;
  double worst = 0.0;
  for (int j = 0; j < s.dim(); ++j) {
    double v;
    if (beta[j] > 0.0)
      v = std::abs(grad[j] + lambda);
    else if (beta[j] < 0.0)
      v = std::abs(grad[j] - lambda);
    else
      v = std::max(0.0, std::abs(grad[j]) - lambda);
    worst = std::max(worst, v);
  }
  return worst;
}

/// Cyclic coordinate descent with soft thresholding on the Gram form.
/// Supports warm starts; a null `warm` starts from zero.  Coordinates whose
/// diagonal Gram entry is zero carry no data and are pinned at zero (counted
/// in zero_variance_coords).  The per-sweep update is an exact coordinate
/// minimization, so the objective never increases between sweeps.
inline LassoSolution lasso_solve(const DesignState& s, double lambda,
                                 const Vec* warm = nullptr,
                                 const LassoConfig& cfg = {}) {
  if (lambda < 0.0) throw ValidationError("lasso_solve: negative penalty");
  const int d = s.dim();
  LassoSolution sol;
  sol.lambda = lambda;
  if (s.t == 0) {
    sol.beta = Vec::Zero(d);
    sol.converged = true;
    return sol;
  }
  const double t = static_cast<double>(s.t);

  Vec beta = (warm != nullptr && warm->size() == d) ? *warm : Vec::Zero(d);
  const Vec diag = s.gram.diagonal() / t;
  for (int j = 0; j < d; ++j) {
    if (diag[j] <= 0.0) {
      if (beta[j] != 0.0) beta[j] = 0.0;
      ++sol.zero_variance_coords;
    }
  }
  Vec grad = (s.gram * beta - s.xty) / t;

  int sweep = 0;
  double max_delta = std::numeric_limits<double>::infinity();
  while (sweep < cfg.max_sweeps) {
    ++sweep;
    max_delta = 0.0;
    for (int j = 0; j < d; ++j) {
      if (diag[j] <= 0.0) continue;
      const double z = beta[j] - grad[j] / diag[j];
      const double bj = soft_threshold(z, lambda / diag[j]);
      const double delta = bj - beta[j];
      if (delta != 0.0) {
        grad.noalias() += (delta / t) * s.gram.col(j);
        beta[j] = bj;
        max_delta = std::max(max_delta, std::abs(delta));
      }
    }
    if (cfg.record_objective)
      sol.objective_path.push_back(lasso_objective(s, beta, lambda));
    if (max_delta <= cfg.tol) break;
    // Periodically rebuild the maintained gradient to shed rounding drift.
    if (sweep % 64 == 0) grad = (s.gram * beta - s.xty) / t;
  }

  sol.beta = std::move(beta);
  sol.sweeps = sweep;
  sol.kkt_violation = kkt_residual(s, sol.beta, lambda);
  sol.converged = (max_delta <= cfg.tol) && (sol.kkt_violation <= cfg.kkt_tol);
  sol.objective = lasso_objective(s, sol.beta, lambda);
  return sol;
}

/// Ridge estimate (G + lambda I)^{-1} q.  Returns zero before any data.
inline Vec ridge_solve(const DesignState& s, double lambda) {
  if (lambda < 0.0) throw ValidationError("ridge_solve: negative penalty");
  const int d = s.dim();
  if (s.t == 0 || s.gram.diagonal().sum() == 0.0) return Vec::Zero(d);
  Mat v = s.gram;
  v.diagonal().array() += lambda;
  Vec beta = v.ldlt().solve(s.xty);
  if (!beta.allFinite())
    throw ValidationError("ridge_solve: non-finite solution");
  return beta;
}

}  // namespace l1bandit
