#include "l1bandit/solvers.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace l1bandit;

TEST_CASE("design state matches explicitly assembled matrices") {
  Rng rng(21);
  const oracle::DenseDesign dd = oracle::random_design(rng, 17, 6);
  const DesignState state = oracle::to_state(dd);
  CHECK(state.t == 17);
  CHECK(state.dim() == 6);
  const Mat gram_ref = dd.x.transpose() * dd.x;
  const Vec xty_ref = dd.x.transpose() * dd.y;
  CHECK((state.gram - gram_ref).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((state.xty - xty_ref).lpNorm<Eigen::Infinity>() < 1e-10);
  CHECK(state.yty == Catch::Approx(dd.y.squaredNorm()).margin(1e-10));
  CHECK((state.covariance() - gram_ref / 17.0).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("soft threshold shrinks toward zero by the threshold") {
  CHECK(soft_threshold(3.0, 1.0) == 2.0);
  CHECK(soft_threshold(-3.0, 1.0) == -2.0);
  CHECK(soft_threshold(0.5, 1.0) == 0.0);
  CHECK(soft_threshold(-0.5, 1.0) == 0.0);
  CHECK(soft_threshold(1.0, 1.0) == 0.0);
  CHECK(soft_threshold(0.7, 0.0) == 0.7);
}

TEST_CASE("lasso with zero penalty solves least squares") {
  Rng rng(33);
  const oracle::DenseDesign dd = oracle::random_design(rng, 40, 5);
  const DesignState state = oracle::to_state(dd);
  const LassoSolution sol = lasso_solve(state, 0.0);
  const Vec ols =
      oracle::gauss_jordan_inverse(dd.x.transpose() * dd.x) * (dd.x.transpose() * dd.y);
  CHECK(sol.converged);
  CHECK((sol.beta - ols).lpNorm<Eigen::Infinity>() < 1e-6);
}

TEST_CASE("lasso agrees with the proximal-gradient reference across penalties") {
  Rng rng(55);
  for (int trial = 0; trial < 25; ++trial) {
    const int d = 2 + static_cast<int>(uniform_int(rng, 7));
    const int t = d + static_cast<int>(uniform_int(rng, 30));
    const oracle::DenseDesign dd = oracle::random_design(rng, t, d);
    const DesignState state = oracle::to_state(dd);
    for (double lambda : {0.0, 0.05, 0.5}) {
      const LassoSolution sol = lasso_solve(state, lambda);
      const Vec ref = oracle::lasso_fista(state.gram, state.xty, state.t, lambda);
      INFO("trial " << trial << " d=" << d << " t=" << t << " lambda=" << lambda);
      CHECK(sol.converged);
      CHECK((sol.beta - ref).lpNorm<Eigen::Infinity>() < 1e-6);
      CHECK(kkt_residual(state, sol.beta, lambda) <= 1e-6);
      // neither solution has lower objective beyond numerical slack
      const double obj_cd = oracle::lasso_objective_ref(state.gram, state.xty,
                                                        state.yty, state.t,
                                                        sol.beta, lambda);
      const double obj_ref = oracle::lasso_objective_ref(state.gram, state.xty,
                                                         state.yty, state.t, ref,
                                                         lambda);
      CHECK(obj_cd <= obj_ref + 1e-9);
    }
  }
}

TEST_CASE("library objective matches the reference evaluation") {
  Rng rng(70);
  const oracle::DenseDesign dd = oracle::random_design(rng, 12, 4);
  const DesignState state = oracle::to_state(dd);
  Vec beta(4);
  beta << 0.3, -1.2, 0.0, 0.5;
  CHECK(lasso_objective(state, beta, 0.17) ==
        Catch::Approx(oracle::lasso_objective_ref(state.gram, state.xty, state.yty,
                                                  state.t, beta, 0.17))
            .epsilon(1e-12));
}

TEST_CASE("a penalty above the gradient bound zeroes the solution") {
  Rng rng(81);
  const oracle::DenseDesign dd = oracle::random_design(rng, 30, 6);
  const DesignState state = oracle::to_state(dd);
  const double lambda_max = (state.xty / state.t).lpNorm<Eigen::Infinity>();
  const LassoSolution sol = lasso_solve(state, lambda_max * 1.000001);
  CHECK(sol.beta.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sol.converged);
}

TEST_CASE("warm starts reproduce the cold solution") {
  Rng rng(90);
  const oracle::DenseDesign dd = oracle::random_design(rng, 25, 8);
  const DesignState state = oracle::to_state(dd);
  const LassoSolution cold = lasso_solve(state, 0.1);
  Vec warm = cold.beta;
  const LassoSolution warm_sol = lasso_solve(state, 0.1, &warm);
  CHECK((warm_sol.beta - cold.beta).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(warm_sol.sweeps <= cold.sweeps);
}

TEST_CASE("recorded objective path never increases") {
  Rng rng(101);
  const oracle::DenseDesign dd = oracle::random_design(rng, 30, 10);
  const DesignState state = oracle::to_state(dd);
  LassoConfig cfg;
  cfg.record_objective = true;
  const LassoSolution sol = lasso_solve(state, 0.05, nullptr, cfg);
  REQUIRE(sol.objective_path.size() >= 2);
  for (std::size_t i = 1; i < sol.objective_path.size(); ++i)
    CHECK(sol.objective_path[i] <= sol.objective_path[i - 1] + 1e-12);
  CHECK(sol.objective ==
        Catch::Approx(sol.objective_path.back()).margin(1e-12));
}

TEST_CASE("coordinates with zero variance stay at zero") {
  DesignState state(3);
  Rng rng(7);
  for (int i = 0; i < 20; ++i) {
    Vec x(3);
    x << normal(rng), 0.0, normal(rng);  // middle coordinate never varies
    state.update(x, normal(rng));
  }
  const LassoSolution sol = lasso_solve(state, 0.01);
  CHECK(sol.beta[1] == 0.0);
  CHECK(sol.zero_variance_coords == 1);
}

TEST_CASE("empty designs give zero estimates and negative penalties throw") {
  DesignState state(4);
  const LassoSolution sol = lasso_solve(state, 0.3);
  CHECK(sol.beta.lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(sol.converged);
  CHECK_THROWS_AS(lasso_solve(state, -0.1), ValidationError);
  CHECK(ridge_solve(state, 1.0).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("ridge matches a Gauss-Jordan reference solve") {
  Rng rng(120);
  const oracle::DenseDesign dd = oracle::random_design(rng, 15, 5);
  const DesignState state = oracle::to_state(dd);
  const double lambda = 0.75;
  Mat reg = dd.x.transpose() * dd.x;
  reg.diagonal().array() += lambda;
  const Vec ref = oracle::gauss_jordan_inverse(reg) * (dd.x.transpose() * dd.y);
  CHECK((ridge_solve(state, lambda) - ref).lpNorm<Eigen::Infinity>() < 1e-8);
}

TEST_CASE("kkt residual is zero exactly at a subgradient-stationary point") {
  // One standardized coordinate: the lasso solution is the soft-thresholded
  // correlation, so its residual must vanish and perturbations must not.
  DesignState state(1);
  state.t = 10;
  state.gram = Mat::Constant(1, 1, 10.0);
  state.xty = Vec::Constant(1, 6.0);
  state.yty = 8.0;
  const double lambda = 0.2;
  Vec beta(1);
  beta << 6.0 / 10.0 - lambda;  // soft threshold of q/t at lambda
  CHECK(kkt_residual(state, beta, lambda) < 1e-14);
  beta[0] += 0.05;
  CHECK(kkt_residual(state, beta, lambda) > 1e-3);
}
