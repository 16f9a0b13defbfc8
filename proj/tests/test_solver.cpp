#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "helpers.hpp"
#include "magnet/error.hpp"
#include "magnet/solver.hpp"
#include "oracles.hpp"

using namespace magnet;
using Eigen::MatrixXd;

namespace {

double max_abs(const MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

CovEstimate instance(const AttributeLayout& layout, std::uint64_t seed, int n = 80, double density = 0.4) {
  return testing::random_cov(testing::random_precision(layout, density, seed), n, seed + 1000);
}

// Lambda that leaves a nonempty but sparse graph.
double mid_lambda(const BlockSymMatrix& s, double frac = 0.4) { return frac * max_offdiag_block_norm(s); }

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("prox_block examples") {
  MatrixXd m(1, 2);
  m << 0.3, 0.4;
  CHECK(prox_block(m, 1.0, 0.6).isZero(0.0));
  CHECK(prox_block(m, 1.0, 0.0) == m);
  const MatrixXd half = prox_block(MatrixXd::Identity(2, 2), 1.0, std::sqrt(2.0) / 2.0);
  CHECK(max_abs(half - 0.5 * MatrixXd::Identity(2, 2)) < 1e-15);
}

TEST_CASE("estimate on S = I has the analytic solution") {
  const auto s = BlockSymMatrix::identity(AttributeLayout::uniform(2, 1));
  SolverConfig cfg;
  cfg.lambda = 0.5;
  const auto rep = estimate(s, cfg);
  CHECK(rep.converged);
  CHECK(max_abs(rep.omega_hat.dense() - (2.0 / 3.0) * MatrixXd::Identity(2, 2)) < 1e-6);
  CHECK(rep.omega_hat.dense()(0, 1) == 0.0);
}

TEST_CASE("node_update leaves the optimum fixed") {
  // k = 2 with S = I: Omega = w I with 2 - 2/w + lambda sqrt(2) = 0.
  const double lambda = 0.3;
  const double w = 2.0 / (2.0 + lambda * std::sqrt(2.0));
  const auto layout = AttributeLayout::uniform(3, 2);
  const auto s = BlockSymMatrix::identity(layout);
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.initial_omega = w * MatrixXd::Identity(6, 6);
  BlockCoordinateDescent bcd(s, cfg);
  for (int a = 0; a < 3; ++a) bcd.node_update(a);
  CHECK(max_abs(bcd.omega() - w * MatrixXd::Identity(6, 6)) < 1e-12);

  // From diag(S), off-diagonal blocks stay exactly zero.
  SolverConfig cold;
  cold.lambda = 0.5;
  BlockCoordinateDescent bcd2(BlockSymMatrix::identity(AttributeLayout::uniform(2, 1)), cold);
  bcd2.node_update(0);
  bcd2.node_update(1);
  CHECK(bcd2.omega()(0, 1) == 0.0);
  CHECK(bcd2.omega()(1, 0) == 0.0);
}

TEST_CASE("a forced large step is halved and still descends") {
  const auto layout = AttributeLayout({2, 2, 1});
  const auto c = instance(layout, 7);
  SolverConfig cfg;
  cfg.lambda = mid_lambda(c.s);
  cfg.initial_step = 1e4;
  BlockCoordinateDescent bcd(c.s, cfg);
  const double before = bcd.current_objective();
  const auto out = bcd.node_update(0);
  CHECK(out.halvings > 0);
  CHECK(out.objective <= before + 1e-12);
  CHECK(bcd.step(0) < 1e4);
}

TEST_CASE("a step floor above the feasible range aborts") {
  const auto layout = AttributeLayout::uniform(3, 2);
  const auto c = instance(layout, 8);
  SolverConfig cfg;
  cfg.lambda = mid_lambda(c.s, 0.1);
  cfg.initial_step = 1e6;
  cfg.min_step = 5e5;
  BlockCoordinateDescent bcd(c.s, cfg);
  CHECK_THROWS_AS(bcd.node_update(0), NumericalError);
}

TEST_CASE("cov_update matches dense inversion") {
  std::mt19937_64 gen(42);
  const auto layout = AttributeLayout::uniform(3, 2);
  for (int rep = 0; rep < 20; ++rep) {
    const MatrixXd om = testing::random_spd(6, gen, 0.5);
    const MatrixXd sig = oracle::inverse(om);
    const int a = rep % 3;
    CHECK(max_abs(cov_update(om, sig, layout, a) - sig) < 1e-12);

    // Perturb the row and column of node a, keeping it PD.
    MatrixXd next = om;
    const MatrixXd e = 0.1 * testing::random_matrix(2, 6, gen);
    next.middleRows(2 * a, 2) += e;
    next.middleCols(2 * a, 2) += e.transpose();
    next.block(2 * a, 2 * a, 2, 2) -= e.middleCols(2 * a, 2);
    next.block(2 * a, 2 * a, 2, 2).diagonal().array() += 1.0;
    next = 0.5 * (next + next.transpose()).eval();
    REQUIRE(next.llt().info() == Eigen::Success);
    CHECK(max_abs(cov_update(next, sig, layout, a) - oracle::inverse(next)) < 1e-8);
  }
}

TEST_CASE("cov_update of a diagonal precision is reciprocal") {
  const auto layout = AttributeLayout({1, 2, 1});
  Eigen::VectorXd d0(4), d1(4);
  d0 << 2, 1, 1, 4;
  d1 << 2, 5, 0.5, 4;
  const MatrixXd prev = d0.cwiseInverse().asDiagonal();
  const MatrixXd out = cov_update(MatrixXd(d1.asDiagonal()), prev, layout, 1);
  CHECK(max_abs(out - MatrixXd(d1.cwiseInverse().asDiagonal())) < 1e-12);
}

TEST_CASE("make_dual_feasible projection arithmetic") {
  const auto layout = AttributeLayout::uniform(2, 2);
  const double lambda = 0.1;
  const auto s = BlockSymMatrix::identity(layout);
  // Already feasible.
  MatrixXd sig = MatrixXd::Identity(4, 4);
  sig(0, 2) = sig(2, 0) = 0.05;
  auto dp = make_dual_feasible(sig, oracle::inverse(sig), s, lambda);
  CHECK(dp.available);
  CHECK_FALSE(dp.fallback_used);
  CHECK(dp.sigma == sig);
  // One violating off block at distance 2 lambda is pulled to distance lambda.
  MatrixXd viol = MatrixXd::Identity(4, 4);
  viol.block(0, 2, 2, 2) = MatrixXd::Constant(2, 2, 2 * lambda / 2.0);
  viol.block(2, 0, 2, 2) = viol.block(0, 2, 2, 2).transpose();
  dp = make_dual_feasible(viol, oracle::inverse(viol), s, lambda);
  CHECK(dp.available);
  CHECK(std::abs(dp.sigma.block(0, 2, 2, 2).norm() - lambda) < 1e-14);
  CHECK(max_abs(dp.sigma.block(0, 2, 2, 2) - 0.5 * viol.block(0, 2, 2, 2)) < 1e-14);
  CHECK(max_abs(dp.sigma - dp.sigma.transpose()) == 0.0);
}

TEST_CASE("indefinite S exercises the dual fallback and the solver still terminates") {
  const auto layout = AttributeLayout::uniform(2, 1);
  MatrixXd sd(2, 2);
  sd << 1, 1.1, 1.1, 1;
  const BlockSymMatrix s(layout, sd);
  const double lambda = 0.06;
  const auto dp = make_dual_feasible(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), s, lambda);
  CHECK(dp.fallback_used);
  SolverConfig cfg;
  cfg.lambda = lambda;
  cfg.max_sweeps = 2000;
  SolverReport rep;
  CHECK_NOTHROW(rep = estimate(s, cfg));
  CHECK(rep.sweeps <= cfg.max_sweeps);
  CHECK(rep.omega_hat.dense().llt().info() == Eigen::Success);
}

TEST_CASE("duality_gap examples") {
  const auto layout = AttributeLayout({2, 1, 2});
  const auto c = instance(layout, 21);
  const double lambda = mid_lambda(c.s);

  // A small gap alone only pins the iterate to about its square root, so the
  // reference point is also certified by its KKT residual.
  SolverConfig tight;
  tight.lambda = lambda;
  tight.epsilon = 1e-10;
  tight.kkt_tolerance = 1e-9;
  const auto rep = estimate(c.s, tight);
  REQUIRE(rep.converged);
  const auto dp = make_dual_feasible(rep.sigma_hat.dense(), rep.omega_hat.dense(), c.s, lambda);
  REQUIRE(dp.available);
  const double g = duality_gap(rep.omega_hat, BlockSymMatrix(layout, dp.sigma), c.s, lambda);
  CHECK(g >= -1e-10);
  CHECK(g <= 1e-6);

  // Initial point: block-diagonal inverse of diag(S).
  MatrixXd om0 = MatrixXd::Zero(5, 5);
  for (int a = 0; a < 3; ++a) {
    const int o = layout.offset(a), k = layout.attr_count(a);
    om0.block(o, o, k, k) = oracle::inverse(c.s.block(a, a));
  }
  const auto dp0 = make_dual_feasible(oracle::inverse(om0), om0, c.s, lambda);
  REQUIRE(dp0.available);
  CHECK(duality_gap(BlockSymMatrix(layout, om0), BlockSymMatrix(layout, dp0.sigma), c.s, lambda) > 0.0);

  // Infeasible dual point.
  CHECK_THROWS_AS(duality_gap(rep.omega_hat, BlockSymMatrix(layout, MatrixXd::Identity(5, 5) * 50.0),
                              c.s, lambda),
                  InputError);
}

TEST_CASE("large lambda gives the diagonal-block solution quickly") {
  const auto layout = AttributeLayout::uniform(4, 2);
  const auto c = instance(layout, 5);
  SolverConfig cfg;
  cfg.lambda = 1.5 * max_offdiag_block_norm(c.s);
  const auto rep = estimate(c.s, cfg);
  CHECK(rep.converged);
  CHECK(rep.sweeps <= 25);
  CHECK(max_offdiag_block_norm(rep.omega_hat) == 0.0);
  CHECK(rep.final_gap <= cfg.epsilon);
  SolverConfig tight = cfg;
  tight.kkt_tolerance = 1e-9;
  const auto exact = estimate(c.s, tight);
  CHECK(exact.converged);
  CHECK(kkt_residual(exact.omega_hat, c.s, cfg.lambda) <= 1e-8);
  CHECK(max_offdiag_block_norm(exact.omega_hat) == 0.0);
}

TEST_CASE("gap at the oracle optimum vanishes") {
  const auto layout = AttributeLayout::uniform(4, 1);
  const auto c = instance(layout, 33, 25, 0.6);
  const double lambda = mid_lambda(c.s, 0.3);
  const MatrixXd star = oracle::glasso(c.s.dense(), lambda);
  const auto dp = make_dual_feasible(oracle::inverse(star), star, c.s, lambda);
  REQUIRE(dp.available);
  const double g = duality_gap(BlockSymMatrix(layout, star), BlockSymMatrix(layout, dp.sigma), c.s, lambda);
  CHECK(g >= -1e-10);
  CHECK(g <= 1e-6);
}

TEST_CASE("a KKT target drives the residual below it") {
  const auto layout = AttributeLayout({3, 2, 2, 1});
  const auto c = instance(layout, 44);
  SolverConfig cfg;
  cfg.lambda = mid_lambda(c.s);
  cfg.kkt_tolerance = 1e-7;
  const auto rep = estimate(c.s, cfg);
  CHECK(rep.converged);
  CHECK(kkt_residual(rep.omega_hat, c.s, cfg.lambda) <= 1e-7);
}

TEST_CASE("kkt_residual examples") {
  const auto layout = AttributeLayout::uniform(3, 1);
  MatrixXd sd(3, 3);
  sd << 1, 0.6, 0.3, 0.6, 1, 0.5, 0.3, 0.5, 1;
  const BlockSymMatrix s(layout, sd);
  const double lambda = 0.1;
  MatrixXd om0 = sd.diagonal().cwiseInverse().asDiagonal();
  CHECK(kkt_residual(BlockSymMatrix(layout, om0), s, lambda) > 0.0);
  const MatrixXd star = oracle::glasso(sd, lambda);
  CHECK(kkt_residual(BlockSymMatrix(layout, star), s, lambda) <= 1e-5);
}

TEST_CASE("k = 1 agrees with the scalar graphical lasso oracle") {
  for (int rep = 0; rep < 6; ++rep) {
    const int p = 5 + rep % 3;
    const auto layout = AttributeLayout::uniform(p, 1);
    const auto c = instance(layout, 300 + rep, 40, 0.5);
    SolverConfig cfg;
    cfg.lambda = mid_lambda(c.s, 0.3);
    cfg.epsilon = 1e-10;
    const auto fit = estimate(c.s, cfg);
    const MatrixXd want = oracle::glasso(c.s.dense(), cfg.lambda);
    CHECK(max_abs(fit.omega_hat.dense() - want) < 1e-4);
    for (int a = 0; a < p; ++a)
      for (int b = a + 1; b < p; ++b)
        CHECK((fit.omega_hat.dense()(a, b) == 0.0) == (std::abs(want(a, b)) < 1e-9));
  }
}

TEST_CASE("objective trace never increases and iterates stay PD") {
  int violations = 0, pd_failures = 0, runs = 0;
  for (int seed = 0; seed < 50; ++seed) {
    const auto layout = testing::random_layout(4 + seed % 4, 3, seed);
    const auto c = instance(layout, 500 + seed, 30 + seed);
    for (const auto policy : {StepPolicy::kAdaptive, StepPolicy::kPersistent}) {
      SolverConfig cfg;
      cfg.lambda = mid_lambda(c.s, 0.2 + 0.01 * seed);
      cfg.step_policy = policy;
      cfg.max_sweeps = 40;
      const auto rep = estimate(c.s, cfg);
      ++runs;
      for (std::size_t i = 1; i < rep.objective_trace.size(); ++i)
        violations += rep.objective_trace[i] > rep.objective_trace[i - 1] + 1e-12;

      BlockCoordinateDescent bcd(c.s, cfg);
      for (int sweep = 0; sweep < 5; ++sweep)
        for (int a = 0; a < layout.node_count(); ++a) {
          bcd.node_update(a);
          pd_failures += bcd.omega().llt().info() != Eigen::Success;
        }
    }
  }
  CHECK(runs == 100);
  CHECK(violations == 0);
  CHECK(pd_failures == 0);
}

TEST_CASE("report invariants and eigenvalue sandwich") {
  for (int seed = 0; seed < 15; ++seed) {
    const auto layout = testing::random_layout(5 + seed % 3, 3, 70 + seed);
    const auto c = instance(layout, 900 + seed, 60);
    SolverConfig cfg;
    cfg.lambda = mid_lambda(c.s, 0.15 + 0.05 * (seed % 5));
    const auto rep = estimate(c.s, cfg);
    REQUIRE(rep.converged);
    CHECK(rep.final_gap >= -1e-10);
    CHECK(rep.final_gap <= cfg.epsilon);
    for (double g : rep.sweep_gaps)
      if (std::isfinite(g)) CHECK(g >= -1e-10);
    CHECK(max_abs(rep.omega_hat.dense() * rep.sigma_hat.dense() - MatrixXd::Identity(layout.total_dim(), layout.total_dim())) <= 1e-6);
    const Eigen::SelfAdjointEigenSolver<MatrixXd> eo(rep.omega_hat.dense());
    const Eigen::SelfAdjointEigenSolver<MatrixXd> es(c.s.dense());
    const double p = layout.node_count();
    CHECK(eo.eigenvalues().minCoeff() >= 1.0 / (es.eigenvalues().maxCoeff() + cfg.lambda * p) - 1e-8);
    CHECK(eo.eigenvalues().maxCoeff() <= layout.total_dim() / cfg.lambda + 1e-8);
  }
}

TEST_CASE("different PD starting points reach the same minimizer") {
  std::mt19937_64 gen(77);
  for (int rep = 0; rep < 5; ++rep) {
    const auto layout = testing::random_layout(5, 3, 40 + rep);
    const auto c = instance(layout, 600 + rep);
    SolverConfig a, b;
    a.lambda = b.lambda = mid_lambda(c.s);
    a.epsilon = b.epsilon = 1e-10;
    a.initial_omega = testing::random_spd(layout.total_dim(), gen, 0.5);
    b.initial_omega = testing::random_spd(layout.total_dim(), gen, 0.5);
    const auto ra = estimate(c.s, a), rb = estimate(c.s, b);
    REQUIRE(ra.converged);
    REQUIRE(rb.converged);
    CHECK(max_abs(ra.omega_hat.dense() - rb.omega_hat.dense()) < 1e-5);
  }
}

TEST_CASE("sparse synthetic instances need few sweeps") {
  std::vector<int> sweeps;
  for (int seed = 0; seed < 5; ++seed) {
    const auto layout = AttributeLayout::uniform(20, 3);
    const auto c = instance(layout, 1200 + seed, 1000, 0.08);
    SolverConfig cfg;
    cfg.lambda = mid_lambda(c.s, 0.3);
    const auto rep = estimate(c.s, cfg);
    CHECK(rep.converged);
    sweeps.push_back(rep.sweeps);
  }
  CHECK(*std::max_element(sweeps.begin(), sweeps.end()) <= 25);
}

TEST_CASE("config validation") {
  const auto s = BlockSymMatrix::identity(AttributeLayout::uniform(2, 1));
  SolverConfig cfg;
  CHECK_THROWS_AS(estimate(s, cfg), InputError);
  cfg.lambda = 0.1;
  cfg.min_step = 2.0;
  CHECK_THROWS_AS(estimate(s, cfg), InputError);
  cfg.min_step = 1e-10;
  cfg.epsilon = 0;
  CHECK_THROWS_AS(estimate(s, cfg), InputError);
  MatrixXd bad = MatrixXd::Identity(2, 2);
  bad(1, 1) = 0.0;
  cfg.epsilon = 1e-3;
  CHECK_THROWS_AS(estimate(BlockSymMatrix(AttributeLayout::uniform(2, 1), bad), cfg), NumericalError);
}

}  // TEST_SUITE
