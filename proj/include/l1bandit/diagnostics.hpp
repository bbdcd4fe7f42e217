#pragma once

// Diagnostics for assumption checking.
//
//  * coverage_check          - does the current ball trap the true vector?
//  * compatibility_estimate  - certified upper bound on the restricted
//                              (cone) eigenvalue-style constant of a
//                              covariance snapshot.
//  * sparse_eigen_probe      - extreme eigenvalues over sparse principal
//                              submatrices, exact or sampled.
//  * conditional_design_moments - second moment of the winning arm's
//                              features on well-separated rounds.
//  * optimal_fraction        - how often a trace pulled the optimal arm.

#include "l1bandit/core.hpp"
#include "l1bandit/rng.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace l1bandit {

/// True when the ball contains the true parameter vector.
inline bool coverage_check(const ConfidenceBall& ball, const Vec& beta_true) {
  if (ball.center.size() != beta_true.size())
    throw ValidationError("coverage_check: dimension mismatch");
  return ball.contains(beta_true);
}

struct CompatConfig {
  int n_starts = 64;
  int pgd_iters = 300;
  int refine_sweeps = 30;
  std::uint64_t seed = 0x5eedULL;
};

namespace detail {

/// State for minimizing f(v) = s * v'Sigma v / ||v||_1^2 over the cone
/// ||v_offS||_1 <= 3 ||v_onS||_1.  Feasibility is restored by scaling the
/// on-support block up, which never leaves the cone empty-handed.
struct ConeProblem {
  const Mat& sigma;
  const std::vector<char>& on_support;  // indicator per coordinate
  double s;

  double value(const Vec& v) const {
    const double l1 = v.lpNorm<1>();
    if (l1 <= 0.0) return std::numeric_limits<double>::infinity();
    const double quad = v.dot(sigma * v);
    return s * std::max(0.0, quad) / (l1 * l1);
  }

  void project(Vec& v) const {
    double a_s = 0.0, a_c = 0.0;
    for (int j = 0; j < v.size(); ++j)
      (on_support[static_cast<std::size_t>(j)] ? a_s : a_c) += std::abs(v[j]);
    if (a_s + a_c <= 0.0) return;
    if (a_c > 3.0 * a_s) {
      if (a_s <= 0.0) {
        // No mass on the support: seed it with the minimum the cone needs.
        const double per = a_c / 3.0 / std::max(1.0, s);
        for (int j = 0; j < v.size(); ++j)
          if (on_support[static_cast<std::size_t>(j)]) v[j] = per;
      } else {
        const double gamma = a_c / (3.0 * a_s);
        for (int j = 0; j < v.size(); ++j)
          if (on_support[static_cast<std::size_t>(j)]) v[j] *= gamma;
      }
    }
    const double l1 = v.lpNorm<1>();
    if (l1 > 0.0) v /= l1;
  }
};

inline double cone_minimize_from(const ConeProblem& prob, Vec v,
                                 const CompatConfig& cfg) {
  prob.project(v);
  double fv = prob.value(v);
  double step = 1.0;
  const int d = static_cast<int>(v.size());
  for (int it = 0; it < cfg.pgd_iters; ++it) {
    const double l1 = v.lpNorm<1>();
    const Vec sv = prob.sigma * v;
    const double quad = v.dot(sv);
    Vec grad = (2.0 * prob.s / (l1 * l1)) * sv;
    const double gshift = 2.0 * prob.s * quad / (l1 * l1 * l1);
    for (int j = 0; j < d; ++j)
      grad[j] -= gshift * (v[j] > 0.0 ? 1.0 : (v[j] < 0.0 ? -1.0 : 0.0));
    bool moved = false;
    for (int bt = 0; bt < 30; ++bt) {
      Vec cand = v - step * grad;
      prob.project(cand);
      const double fc = prob.value(cand);
      if (fc < fv) {
        v = std::move(cand);
        fv = fc;
        step *= 1.2;
        moved = true;
        break;
      }
      step *= 0.5;
    }
    if (!moved && step < 1e-18) break;
  }

  // Coordinate refinement with incremental quadratic-form updates.
  Vec sv = prob.sigma * v;
  double quad = v.dot(sv);
  double a_s = 0.0, a_c = 0.0;
  for (int j = 0; j < d; ++j)
    (prob.on_support[static_cast<std::size_t>(j)] ? a_s : a_c) += std::abs(v[j]);
  auto objective = [&](double q, double l1) {
    return l1 > 0.0 ? prob.s * std::max(0.0, q) / (l1 * l1)
                    : std::numeric_limits<double>::infinity();
  };
  fv = objective(quad, a_s + a_c);
  for (int sweep = 0; sweep < cfg.refine_sweeps; ++sweep) {
    bool improved = false;
    for (int j = 0; j < d; ++j) {
      const bool on = prob.on_support[static_cast<std::size_t>(j)] != 0;
      const double l1 = a_s + a_c;
      const double scale = std::max(std::abs(v[j]), 0.1 * l1 / d);
      double best_delta = 0.0, best_f = fv;
      const double steps[] = {0.5 * scale,  -0.5 * scale, 0.1 * scale,
                              -0.1 * scale, 0.02 * scale, -0.02 * scale,
                              -v[j]};
      for (double delta : steps) {
        if (delta == 0.0) continue;
        const double nj = v[j] + delta;
        const double dj = std::abs(nj) - std::abs(v[j]);
        const double na_s = on ? a_s + dj : a_s;
        const double na_c = on ? a_c : a_c + dj;
        if (na_c > 3.0 * na_s + 1e-15 || na_s + na_c <= 0.0) continue;
        const double nq = quad + 2.0 * delta * sv[j] + delta * delta * prob.sigma(j, j);
        const double nf = objective(nq, na_s + na_c);
        if (nf < best_f) {
          best_f = nf;
          best_delta = delta;
        }
      }
      if (best_delta != 0.0) {
        const double nj = v[j] + best_delta;
        const double dj = std::abs(nj) - std::abs(v[j]);
        if (on)
          a_s += dj;
        else
          a_c += dj;
        quad += 2.0 * best_delta * sv[j] + best_delta * best_delta * prob.sigma(j, j);
        sv.noalias() += best_delta * prob.sigma.col(j);
        v[j] = nj;
        fv = best_f;
        improved = true;
      }
    }
    if (!improved) break;
  }
  // Certify with a from-scratch evaluation (the incremental state drifts).
  prob.project(v);
  return prob.value(v);
}

}  // namespace detail

/// Upper bound on phi = sqrt( min over the cone of |S| v'Sigma v / ||v||_1^2 ),
/// the constant under which ||v||_1^2 <= |S| (v'Sigma v)/phi^2 holds for all
/// v with ||v_offS||_1 <= 3 ||v_onS||_1.  Multi-start projected descent plus
/// coordinate refinement; every returned value is achieved by a feasible
/// direction, so the result can only overestimate the true constant.
inline double compatibility_estimate(const Mat& sigma_in,
                                     const std::vector<int>& support,
                                     const CompatConfig& cfg = {}) {
  const int d = static_cast<int>(sigma_in.rows());
  if (sigma_in.cols() != d) throw ValidationError("compatibility_estimate: not square");
  if (support.empty())
    throw ValidationError("compatibility_estimate: empty support");
  std::vector<char> on(static_cast<std::size_t>(d), 0);
  for (int j : support) {
    if (j < 0 || j >= d)
      throw ValidationError("compatibility_estimate: support index out of range");
    on[static_cast<std::size_t>(j)] = 1;
  }
  const Mat sigma = 0.5 * (sigma_in + sigma_in.transpose());
  const double s = static_cast<double>(support.size());
  const detail::ConeProblem prob{sigma, on, s};

  Rng rng(cfg.seed);
  double best = std::numeric_limits<double>::infinity();
  const int n_off = d - static_cast<int>(support.size());

  std::vector<Vec> starts;
  // Equal mass on the support, cone-saturating equal spread off it; the
  // analytic optimum for identity-like snapshots.
  {
    Vec v = Vec::Zero(d);
    for (int j : support) v[j] = 0.25 / s;
    if (n_off > 0)
      for (int j = 0; j < d; ++j)
        if (!on[static_cast<std::size_t>(j)]) v[j] = 0.75 / n_off;
    starts.push_back(v);
  }
  // Single support coordinates.
  for (int j : support) {
    Vec v = Vec::Zero(d);
    v[j] = 1.0;
    starts.push_back(v);
  }
  // Globally softest direction, pushed into the cone.
  {
    Eigen::SelfAdjointEigenSolver<Mat> es(sigma);
    if (es.info() == Eigen::Success) starts.push_back(es.eigenvectors().col(0));
  }
  // Random sign/magnitude starts fill the remaining budget.
  while (static_cast<int>(starts.size()) < cfg.n_starts) {
    Vec v(d);
    for (int j = 0; j < d; ++j) {
      const double mag = -std::log(uniform_open01(rng));
      v[j] = uniform01(rng) < 0.5 ? mag : -mag;
    }
    starts.push_back(std::move(v));
  }

  for (const Vec& v0 : starts)
    best = std::min(best, detail::cone_minimize_from(prob, v0, cfg));
  return std::sqrt(std::max(0.0, best));
}

struct EigenProbe {
  double rho_min = 0.0;  ///< smallest eigenvalue over probed submatrices
  double rho_max = 0.0;  ///< largest eigenvalue over probed submatrices
  bool exact = false;    ///< true when every m-subset was enumerated
  long subsets_checked = 0;
};

namespace detail {
inline long long subset_count_capped(int d, int m, long long cap) {
  long long c = 1;
  for (int i = 1; i <= m; ++i) {
    c = c * (d - m + i) / i;
    if (c > cap) return cap + 1;
  }
  return c;
}
}  // namespace detail

/// Extreme eigenvalues of m x m principal submatrices of a covariance
/// snapshot: exhaustive when the subset count is at most `exact_cap`,
/// otherwise a seeded random sample of `n_samples` subsets.
inline EigenProbe sparse_eigen_probe(const Mat& sigma, int m,
                                     int n_samples = 2000,
                                     std::uint64_t seed = 0x9e1dULL,
                                     long long exact_cap = 10000) {
  const int d = static_cast<int>(sigma.rows());
  if (sigma.cols() != d) throw ValidationError("sparse_eigen_probe: not square");
  if (m < 1 || m > d)
    throw ValidationError("sparse_eigen_probe: m must be in [1,d]");

  EigenProbe probe;
  probe.rho_min = std::numeric_limits<double>::infinity();
  probe.rho_max = -std::numeric_limits<double>::infinity();
  Mat sub(m, m);
  auto visit = [&](const std::vector<int>& idx) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        sub(i, j) = sigma(idx[static_cast<std::size_t>(i)],
                          idx[static_cast<std::size_t>(j)]);
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (sub + sub.transpose()),
                                          Eigen::EigenvaluesOnly);
    probe.rho_min = std::min(probe.rho_min, es.eigenvalues().minCoeff());
    probe.rho_max = std::max(probe.rho_max, es.eigenvalues().maxCoeff());
    ++probe.subsets_checked;
  };

  if (detail::subset_count_capped(d, m, exact_cap) <= exact_cap) {
    probe.exact = true;
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    while (true) {
      visit(idx);
      int i = m - 1;
      while (i >= 0 && idx[static_cast<std::size_t>(i)] == d - m + i) --i;
      if (i < 0) break;
      ++idx[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < m; ++j)
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    Rng rng(seed);
    std::vector<int> all(static_cast<std::size_t>(d));
    std::iota(all.begin(), all.end(), 0);
    std::vector<int> idx(static_cast<std::size_t>(m));
    for (int n = 0; n < n_samples; ++n) {
      for (int i = 0; i < m; ++i) {
        const int j = i + uniform_int(rng, d - i);
        std::swap(all[static_cast<std::size_t>(i)], all[static_cast<std::size_t>(j)]);
        idx[static_cast<std::size_t>(i)] = all[static_cast<std::size_t>(i)];
      }
      visit(idx);
    }
  }
  return probe;
}

struct ConditionalMoments {
  Mat second_moment;  ///< mean of x* x*' over kept rounds
  long kept = 0;
  long total = 0;
};

/// Second moment of the best arm's features conditioned on the round being
/// well separated (expected-reward gap between best and runner-up at least
/// `delta_star`).  Rejection sampling over freshly generated rounds.
inline ConditionalMoments conditional_design_moments(
    const std::function<ContextRound(Rng&)>& gen, const TrueModel& model,
    double delta_star, int n_rounds, Rng& rng) {
  if (n_rounds < 1)
    throw ValidationError("conditional_design_moments: n_rounds must be >= 1");
  ConditionalMoments out;
  out.second_moment = Mat::Zero(model.beta.size(), model.beta.size());
  for (int n = 0; n < n_rounds; ++n) {
    const ContextRound round = gen(rng);
    ++out.total;
    int best = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    double second_v = -std::numeric_limits<double>::infinity();
    for (int a = 0; a < round.num_arms(); ++a) {
      const double v = round.arms[static_cast<std::size_t>(a)].dot(model.beta);
      if (v > best_v) {
        second_v = best_v;
        best_v = v;
        best = a;
      } else if (v > second_v) {
        second_v = v;
      }
    }
    if (round.num_arms() > 1 && best_v - second_v < delta_star) continue;
    const Vec& x = round.arms[static_cast<std::size_t>(best)];
    out.second_moment.noalias() += x * x.transpose();
    ++out.kept;
  }
  if (out.kept > 0) out.second_moment /= static_cast<double>(out.kept);
  return out;
}

/// Fraction of rounds with t >= window_start whose chosen arm was optimal.
inline double optimal_fraction(const RegretTrace& trace, int window_start) {
  long in_window = 0, hits = 0;
  for (const RegretRow& row : trace.rows) {
    if (row.t < window_start) continue;
    ++in_window;
    if (row.chosen_arm == row.optimal_arm) ++hits;
  }
  if (in_window == 0)
    throw ValidationError("optimal_fraction: empty window");
  return static_cast<double>(hits) / static_cast<double>(in_window);
}

}  // namespace l1bandit
