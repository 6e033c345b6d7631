#include <gtest/gtest.h>

#include <cmath>

#include "mlbn/qp.hpp"
#include "mlbn/stats.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace mlbn;
using namespace mlbn::qp;
using mlbn::support::Gen;

namespace {

std::vector<double> random_sample(Gen& g, std::size_t n) {
  std::vector<double> y(n);
  const double base = g.uniform(-3, 3);
  for (double& v : y) v = base + (g.coin(0.3) ? 0.0 : std::abs(g.normal(0, g.uniform(0.1, 3))));
  return y;
}

std::vector<double> shifted(std::span<const double> y) {
  const double lo = *std::min_element(y.begin(), y.end());
  std::vector<double> s(y.begin(), y.end());
  for (double& v : s) v -= lo;
  return s;
}

// Exhaustive active-set oracle for small strictly convex QPs: solve the
// equality-constrained KKT system for every subset of constraints and keep the
// best primal- and dual-feasible point.
Eigen::VectorXd brute_force_qp(const QpCanonical& p) {
  const auto n = p.D.rows(), m = p.A.cols();
  double best = std::numeric_limits<double>::infinity();
  Eigen::VectorXd arg;
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    std::vector<Eigen::Index> act;
    for (Eigen::Index c = 0; c < m; ++c)
      if (mask & (1u << c)) act.push_back(c);
    const auto k = static_cast<Eigen::Index>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p.D;
    rhs.head(n) = p.d;
    for (Eigen::Index a = 0; a < k; ++a) {
      kkt.block(0, n + a, n, 1) = -p.A.col(act[a]);
      kkt.block(n + a, 0, 1, n) = p.A.col(act[a]).transpose();
      rhs[n + a] = p.b0[act[a]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (!lu.isInvertible()) continue;
    const Eigen::VectorXd sol = lu.solve(rhs);
    const Eigen::VectorXd b = sol.head(n);
    if ((sol.tail(k).array() < -1e-9).any()) continue;
    if (((p.A.transpose() * b - p.b0).array() < -1e-9).any()) continue;
    const double f = p.objective(b);
    if (f < best - 1e-12) {
      best = f;
      arg = b;
    }
  }
  return arg;
}

QpCanonical random_convex_qp(Gen& g, Eigen::Index n, Eigen::Index m) {
  QpCanonical p;
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) r(a, b) = g.normal();
  p.D = r * r.transpose() + 0.5 * Eigen::MatrixXd::Identity(n, n);
  p.d.resize(n);
  for (Eigen::Index a = 0; a < n; ++a) p.d[a] = g.normal(0, 3);
  p.A.resize(n, m);
  p.b0.resize(m);
  // Feasible by construction: x0 satisfies every constraint.
  Eigen::VectorXd x0(n);
  for (Eigen::Index a = 0; a < n; ++a) x0[a] = g.normal();
  for (Eigen::Index c = 0; c < m; ++c) {
    for (Eigen::Index a = 0; a < n; ++a) p.A(a, c) = g.normal();
    p.b0[c] = p.A.col(c).dot(x0) - g.uniform(0, 1);
  }
  return p;
}

}  // namespace

TEST(Pair1d, WorkedExample) {
  const std::vector<double> y = {0, 0, 10, 10};
  EXPECT_DOUBLE_EQ(solve_pair_1d(y, 0.5, 0.5).omega_prime, 1.0);
  EXPECT_DOUBLE_EQ(solve_pair_1d(y, 0.9, 0.1).omega_prime, 9.0);
  const auto sol = solve_pair_1d(y, 0.5, 0.5);
  EXPECT_EQ(sol.active_count, 2u);
  EXPECT_EQ(sol.deltas, (std::vector<double>{0, 0, 9, 9}));
  EXPECT_DOUBLE_EQ(sol.objective, 0.5 * 18 + 0.5);
}

TEST(Pair1d, ShiftMakesTheEstimateTranslationEquivariant) {
  const std::vector<double> y = {3.0, 5.0, 4.0};
  std::vector<double> z = y;
  for (double& v : z) v -= 7.25;
  const auto a = solve_pair_1d(y, 0.3, 0.7), b = solve_pair_1d(z, 0.3, 0.7);
  EXPECT_EQ(a.omega_prime, b.omega_prime);
  EXPECT_EQ(a.omega_hat - 7.25, b.omega_hat);
  EXPECT_EQ(a.shift, 3.0);
}

TEST(Pair1d, SinglePointIsItsOwnEstimate) {
  const auto sol = solve_pair_1d(std::vector<double>{2.5}, 0.99, 0.01);
  EXPECT_EQ(sol.omega_hat, 2.5);
  EXPECT_EQ(sol.omega_prime, 0.0);
}

TEST(Pair1d, RejectsBadWeightsAndData) {
  const std::vector<double> y = {1, 2};
  EXPECT_THROW(solve_pair_1d(y, 0.5, 0.4), std::invalid_argument);
  EXPECT_THROW(solve_pair_1d(y, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(solve_pair_1d(y, -0.1, 1.1), std::invalid_argument);
  EXPECT_THROW(solve_pair_1d(std::vector<double>{}, 0.5, 0.5), std::invalid_argument);
  EXPECT_THROW(solve_pair_1d(std::vector<double>{1, std::nan("")}, 0.5, 0.5), std::invalid_argument);
  EXPECT_NO_THROW(solve_pair_1d(y, 0.0, 1.0));
}

TEST(Pair1d, MatchesGridSearch) {
  Gen g(51);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = random_sample(g, g.index(1, 200));
    const double k1 = g.uniform(0.01, 0.99);
    const auto sol = solve_pair_1d(y, k1, 1 - k1);
    const auto s = shifted(y);
    const double grid = support::hinge_grid_min(s, k1, 1 - k1);
    EXPECT_NEAR(sol.omega_prime, grid, 2e-4);
    EXPECT_LE(sol.objective, support::hinge_objective(s, k1, 1 - k1, grid) + 1e-9);
    EXPECT_LE(kkt_report(sol, y).max(), 1e-8);
  }
}

TEST(Pair1d, LoweringK1OverK2NeverRaisesOmega) {
  Gen g(52);
  for (int trial = 0; trial < 100; ++trial) {
    const auto y = random_sample(g, g.index(1, 100));
    double prev = std::numeric_limits<double>::infinity();
    for (const auto& step : default_schedule(1e-4, 0.5)) {
      const double w = solve_pair_1d(y, step.k1, step.k2).omega_prime;
      EXPECT_LE(w, prev);
      prev = w;
    }
  }
}

TEST(Generic, MatchesExhaustiveActiveSetOracle) {
  Gen g(53);
  for (int trial = 0; trial < 60; ++trial) {
    const auto p = random_convex_qp(g, static_cast<Eigen::Index>(g.index(1, 4)), static_cast<Eigen::Index>(g.index(0, 6)));
    const auto sol = solve_qp_generic(p);
    const auto oracle = brute_force_qp(p);
    ASSERT_EQ(oracle.size(), sol.b.size());
    EXPECT_LE((sol.b - oracle).lpNorm<Eigen::Infinity>(), 1e-8);
    EXPECT_LE(generic_kkt(p, sol).max(), 1e-8);
  }
}

TEST(Generic, DetectsInfeasibility) {
  QpCanonical p;
  p.D = Eigen::MatrixXd::Identity(1, 1);
  p.d = Eigen::VectorXd::Zero(1);
  p.A = Eigen::MatrixXd(1, 2);
  p.A << 1.0, -1.0;
  p.b0 = Eigen::VectorXd(2);
  p.b0 << 1.0, 0.0;
  EXPECT_THROW(solve_qp_generic(p), infeasible_error);
}

TEST(Generic, ValidatesShapes) {
  QpCanonical p;
  p.D = Eigen::MatrixXd::Identity(2, 2);
  p.d = Eigen::VectorXd::Zero(3);
  p.A = Eigen::MatrixXd::Zero(2, 1);
  p.b0 = Eigen::VectorXd::Zero(1);
  EXPECT_THROW(p.validate(), std::invalid_argument);
  p.d = Eigen::VectorXd::Zero(2);
  p.D(0, 1) = 1.0;
  EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Generic, AgreesWithPair1dOnPairInstances) {
  Gen g(54);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y = random_sample(g, g.index(1, 40));
    const double k1 = g.uniform(0.05, 0.95);
    const auto s = shifted(y);
    const auto inst = pair_instance(s, k1, 1 - k1);
    const auto gen = solve_qp_generic(inst);
    const auto one = solve_pair_1d(y, k1, 1 - k1);
    EXPECT_NEAR(gen.b[0], one.omega_prime, 1e-8);
    EXPECT_LE(generic_kkt(inst, gen).max(), 1e-8);
    const auto conv = from_generic(y, k1, 1 - k1, gen);
    EXPECT_NEAR(conv.omega_hat, one.omega_hat, 1e-8);
  }
}

TEST(PairInstance, Layout) {
  const std::vector<double> s = {0.0, 2.0};
  const auto p = pair_instance(s, 0.3, 0.7);
  EXPECT_EQ(p.D.rows(), 3);
  EXPECT_EQ(p.A.cols(), 4);
  EXPECT_DOUBLE_EQ(p.D(0, 0), 1.4);
  EXPECT_EQ(p.D(1, 1), kSlackRegularization);
  EXPECT_EQ(p.d[0], 0.0);
  EXPECT_EQ(p.d[1], -0.3);
  EXPECT_EQ(p.b0[1], 2.0);
  EXPECT_THROW(pair_instance(s, 0.3, 0.7, 0.0), std::invalid_argument);
}

TEST(Schedule, GeometricTowardK2) {
  const auto sched = default_schedule();
  ASSERT_GT(sched.size(), 10u);
  EXPECT_DOUBLE_EQ(sched.front().k1, 0.5);
  for (std::size_t s = 1; s < sched.size(); ++s) {
    EXPECT_NEAR(sched[s].k1 + sched[s].k2, 1.0, 1e-15);
    EXPECT_LT(sched[s].k1, sched[s - 1].k1);
  }
  EXPECT_NEAR(sched.back().k1 / sched.back().k2, 1e-7, 1e-20);
  EXPECT_THROW(default_schedule(0.0), std::invalid_argument);
  EXPECT_THROW(default_schedule(1e-3, 1.0), std::invalid_argument);
}

TEST(DefaultThreshold, OnePercentOfIqr) {
  std::vector<double> y(101);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = 5.0 + static_cast<double>(k);
  EXPECT_DOUBLE_EQ(default_threshold(y), 0.01 * stats::iqr(y));
  EXPECT_EQ(default_threshold(std::vector<double>{1.0, 1.0}), 1e-12);
  EXPECT_DOUBLE_EQ(default_threshold(std::vector<double>{0, 0, 0, 0, 0, 4}), 0.04);
}

TEST(AutoTune, StopsAtTheFirstStepUnderThreshold) {
  Gen g(55);
  const auto y = random_sample(g, 200);
  const double t = default_threshold(y);
  const auto res = auto_tune(y, t, default_schedule());
  EXPECT_EQ(res.solution.status, TuneStatus::ok);
  EXPECT_LE(res.solution.omega_prime, t);
  for (std::size_t s = 0; s + 1 < res.trajectory.size(); ++s) EXPECT_GT(res.trajectory[s].omega_prime, t);
  EXPECT_EQ(res.trajectory.back().omega_prime, res.solution.omega_prime);
}

TEST(AutoTune, ExhaustedScheduleNeedsManualTuning) {
  const std::vector<double> y = {0, 0, 10, 10};
  const auto res = auto_tune(y, 1e-6, {{0.9, 0.1}, {0.5, 0.5}});
  EXPECT_EQ(res.solution.status, TuneStatus::needs_manual_tuning);
  EXPECT_DOUBLE_EQ(res.solution.omega_prime, 1.0);
  EXPECT_EQ(to_string(res.solution.status), "needs_manual_tuning");
  const auto empty = auto_tune(y, 1e-6, {});
  EXPECT_EQ(empty.solution.status, TuneStatus::needs_manual_tuning);
  EXPECT_THROW(auto_tune(y, 0.0, {}), std::invalid_argument);
}

TEST(Kkt, DetectsAPerturbedSolution) {
  const std::vector<double> y = {0, 1, 2, 3, 4};
  auto sol = solve_pair_1d(y, 0.5, 0.5);
  EXPECT_LE(kkt_report(sol, y).max(), 1e-12);
  sol.omega_prime += 0.3;
  EXPECT_GT(kkt_report(sol, y).stationarity, 0.1);
  sol.deltas[4] = -1;
  EXPECT_GT(kkt_report(sol, y).negative_slack, 0.5);
}
