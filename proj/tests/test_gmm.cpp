#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <numeric>

#include "mlbn/error.hpp"
#include "mlbn/gmm.hpp"
#include "mlbn/presets.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/stats.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace mlbn;
using namespace mlbn::gmm;
using mlbn::support::Gen;

namespace {

InitialMixture random_init(Gen& g, std::span<const double> y, std::size_t k) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  InitialMixture init;
  for (std::size_t m = 0; m < k; ++m) {
    init.weights.push_back(g.uniform(0.2, 1.0));
    init.means.push_back(g.uniform(*lo, *hi));
    init.variances.push_back(g.uniform(0.05, 2.0));
  }
  const double s = std::accumulate(init.weights.begin(), init.weights.end(), 0.0);
  for (double& w : init.weights) w /= s;
  return init;
}

DifferenceSample wrap(std::vector<double> y) { return {0, 1, std::move(y)}; }

}  // namespace

TEST(QuantileInit, SpreadsMeansOverQuantiles) {
  std::vector<double> y(101);
  std::iota(y.begin(), y.end(), 0.0);
  const auto init = quantile_init(y, 4);
  ASSERT_EQ(init.means.size(), 4u);
  EXPECT_DOUBLE_EQ(init.means[0], 12.5);
  EXPECT_DOUBLE_EQ(init.means[3], 87.5);
  for (double w : init.weights) EXPECT_EQ(w, 0.25);
  EXPECT_DOUBLE_EQ(init.variances[0], stats::variance(y) / 16);
  EXPECT_THROW(quantile_init(y, 0), std::invalid_argument);
  EXPECT_THROW(quantile_init(std::vector<double>{}, 2), estimation_error);
}

TEST(LogLikelihood, MatchesTermByTermOracle) {
  Gen g(41);
  for (int trial = 0; trial < 50; ++trial) {
    const auto y = g.mixture(g.index(5, 200), g.index(1, 3));
    const std::size_t k = g.index(1, 4);
    auto init = random_init(g, y, k);
    EXPECT_NEAR(log_likelihood(y, init.weights, init.means, init.variances),
                support::mixture_loglik(y, init.weights, init.means, init.variances), 1e-9 * y.size());
  }
}

TEST(Em, LogLikelihoodNeverDecreases) {
  Gen g(42);
  EmOptions opts;
  opts.keep_trace = true;
  for (int trial = 0; trial < 200; ++trial) {
    const auto y = g.mixture(g.index(20, 300), g.index(1, 4));
    const auto fit = em_fit(y, random_init(g, y, g.index(1, 4)), opts);
    for (std::size_t t = 1; t < fit.loglik_trace.size(); ++t)
      ASSERT_GE(fit.loglik_trace[t], fit.loglik_trace[t - 1] - 1e-9) << "trial " << trial << " step " << t;
  }
}

TEST(Em, ResponsibilitiesArePosteriors) {
  Gen g(43);
  EmOptions opts;
  opts.keep_responsibilities = true;
  for (int trial = 0; trial < 30; ++trial) {
    const auto y = g.mixture(g.index(20, 300), g.index(1, 3));
    const auto fit = em_fit(y, quantile_init(y, g.index(1, 3)), opts);
    ASSERT_EQ(fit.responsibilities.size(), y.size() * fit.k);
    for (std::size_t r = 0; r < y.size(); ++r) {
      double sum = 0.0, norm = 0.0;
      for (std::size_t m = 0; m < fit.k; ++m) {
        sum += fit.responsibilities[r * fit.k + m];
        norm += fit.weights[m] * support::normal_pdf(y[r], fit.means[m], fit.variances[m]);
      }
      EXPECT_NEAR(sum, 1.0, 1e-10);
      for (std::size_t m = 0; m < fit.k; ++m) {
        const double post = fit.weights[m] * support::normal_pdf(y[r], fit.means[m], fit.variances[m]) / norm;
        EXPECT_NEAR(fit.responsibilities[r * fit.k + m], post, 1e-9);
      }
    }
  }
}

TEST(Em, ConvergedFitIsAnMStepFixedPoint) {
  Gen g(44);
  EmOptions opts;
  opts.keep_responsibilities = true;
  opts.tolerance = 1e-12;
  opts.max_iterations = 5000;
  const auto y = g.mixture(400, 2);
  const auto fit = em_fit(y, quantile_init(y, 2), opts);
  ASSERT_TRUE(fit.converged);
  for (std::size_t m = 0; m < fit.k; ++m) {
    double nk = 0.0, sy = 0.0;
    for (std::size_t r = 0; r < y.size(); ++r) {
      nk += fit.responsibilities[r * fit.k + m];
      sy += fit.responsibilities[r * fit.k + m] * y[r];
    }
    EXPECT_NEAR(fit.weights[m], nk / y.size(), 1e-5);
    EXPECT_NEAR(fit.means[m], sy / nk, 1e-4);
  }
}

TEST(Em, SeparatedMixtureIsRecovered) {
  Gen g(45);
  std::vector<double> y;
  for (int r = 0; r < 600; ++r) y.push_back(g.normal(-3.0, 0.5));
  for (int r = 0; r < 400; ++r) y.push_back(g.normal(2.0, 1.0));
  const auto fit = select_k(y, 4, 1);
  ASSERT_EQ(fit.k, 2u);
  EXPECT_NEAR(fit.means[0], -3.0, 4 * 0.5 / std::sqrt(600.0));
  EXPECT_NEAR(fit.means[1], 2.0, 4 * 1.0 / std::sqrt(400.0));
  EXPECT_NEAR(fit.weights[0], 0.6, 0.05);
  EXPECT_EQ(fit.candidate_bic.size(), 4u);
  EXPECT_EQ(fit.bic, *std::min_element(fit.candidate_bic.begin(), fit.candidate_bic.end()));
  EXPECT_TRUE(std::is_sorted(fit.means.begin(), fit.means.end()));
}

TEST(Em, BicUsesUnequalVarianceParameterCount) {
  Gen g(46);
  const auto y = g.mixture(300, 2);
  const auto fit = em_fit(y, quantile_init(y, 3));
  EXPECT_NEAR(fit.bic, -2 * fit.loglik + (3.0 * fit.k - 1) * std::log(300.0), 1e-9);
  EmOptions eq;
  eq.equal_variance = true;
  const auto tied = em_fit(y, quantile_init(y, 3), eq);
  for (double v : tied.variances) EXPECT_DOUBLE_EQ(v, tied.variances.front());
  EXPECT_EQ(tied.free_parameters(), 2 * tied.k);
}

TEST(Em, VariancesStayAboveTheFloor) {
  std::vector<double> y(200, 1.0);
  for (int r = 0; r < 200; ++r) y.push_back(5.0 + 0.01 * r);
  const auto fit = em_fit(y, quantile_init(y, 3));
  const double range = 5.0 + 0.01 * 199 - 1.0;
  for (double v : fit.variances) EXPECT_GE(v, 1e-8 * range * range * (1 - 1e-12));
}

TEST(Em, ShiftEquivariance) {
  Gen g(47);
  for (int trial = 0; trial < 30; ++trial) {
    auto y = g.mixture(g.index(50, 400), g.index(1, 3));
    const double c = g.uniform(-20, 20);
    std::vector<double> z(y);
    for (double& v : z) v += c;
    const auto a = select_k(y, 3, trial, 4);
    const auto b = select_k(z, 3, trial, 4);
    ASSERT_EQ(a.k, b.k);
    for (std::size_t m = 0; m < a.k; ++m) {
      EXPECT_NEAR(b.means[m], a.means[m] + c, 1e-9);
      EXPECT_NEAR(b.weights[m], a.weights[m], 1e-8);
      EXPECT_NEAR(b.variances[m], a.variances[m], 1e-8 * (1 + a.variances[m]));
    }
    EXPECT_NEAR(b.bic, a.bic, 1e-6);
    EXPECT_NEAR(smallest_peak(b).estimate, smallest_peak(a).estimate + c, 1e-9);
  }
}

TEST(Em, RejectsBadInput) {
  EXPECT_THROW(em_fit(std::vector<double>{}, quantile_init(std::vector<double>{1.0}, 1)), estimation_error);
  EXPECT_THROW(em_fit(std::vector<double>{1.0, std::nan("")}, 1, 0), estimation_error);
  EXPECT_THROW(em_fit(std::vector<double>{1.0, 2.0}, InitialMixture{{1.0}, {}, {}}), std::invalid_argument);
  EXPECT_THROW(select_k(std::vector<double>{1.0, 2.0}, 0, 0), std::invalid_argument);
}

TEST(Em, CancelFlagAborts) {
  Gen g(48);
  const auto y = g.mixture(500, 3);
  std::atomic<bool> stop{true};
  EmOptions opts;
  opts.cancel = &stop;
  EXPECT_THROW(em_fit(y, 3, 0, 2, opts), estimation_error);
}

TEST(SelectK, SkipsKBeyondDistinctValues) {
  const std::vector<double> y = {0.0, 0.0, 1.0, 1.0, 1.0};
  const auto fit = select_k(y, 4, 0);
  EXPECT_TRUE(std::isinf(fit.candidate_bic[2]));
  EXPECT_TRUE(std::isinf(fit.candidate_bic[3]));
  EXPECT_LE(fit.k, 2u);
}

TEST(SmallestPeak, HonoursTheWeightFloor) {
  MixtureFit fit;
  fit.k = 3;
  fit.weights = {0.005, 0.495, 0.5};
  fit.means = {-4.0, 1.0, 3.0};
  fit.variances = {1, 1, 1};
  fit.converged = true;
  const auto rep = smallest_peak(fit, 0.01);
  EXPECT_EQ(rep.estimate, 1.0);
  EXPECT_EQ(rep.component_weight, 0.495);
  EXPECT_EQ(rep.flags, std::vector<std::string>{"lighter_component_below_floor"});
  EXPECT_EQ(smallest_peak(fit, 0.001).estimate, -4.0);
  EXPECT_THROW(smallest_peak(fit, 0.6), estimation_error);
  fit.converged = false;
  EXPECT_EQ(smallest_peak(fit, 0.001).flags, std::vector<std::string>{"em_not_converged"});
}

TEST(MinEstimator, ReturnsTheMinimum) {
  const auto rep = min_estimator(wrap({3.0, -1.0, 2.0}));
  EXPECT_EQ(rep.estimate, -1.0);
  EXPECT_EQ(rep.method, Method::min);
  EXPECT_THROW(min_estimator(wrap({})), estimation_error);
}

TEST(RequireContinuous, RefusesTiedMinimaUpToRounding) {
  EXPECT_THROW(require_continuous(std::vector<double>{1.5, 1.5, 2.0}), estimation_error);
  EXPECT_THROW(require_continuous(std::vector<double>{1.5, 1.5 + 4e-16, 2.0}), estimation_error);
  EXPECT_NO_THROW(require_continuous(std::vector<double>{1.5, 1.5 + 1e-6, 2.0}));
  const auto s = simulate(presets::gmm_example(), {}, NoiseSpec::none(4), 500, 1);
  EXPECT_THROW(estimate_gmm(differences(s, 1, 3)), estimation_error);
}

TEST(EstimateGmm, FlagsKAtKMax) {
  Gen g(49);
  const auto y = g.mixture(500, 3);
  GmmOptions opts;
  opts.k_max = 1;
  EXPECT_TRUE(estimate_gmm(wrap(y), opts).report.flags.empty());
  opts.k_max = 2;
  const auto est = estimate_gmm(wrap(y), opts);
  if (est.fit.k == 2) EXPECT_EQ(est.report.flags.front(), "k_at_k_max");
}

TEST(KMaxFromGraph, CountsCommonAncestorsPlusOne) {
  const auto dag = presets::gmm_example();
  EXPECT_EQ(k_max_from_graph(dag, 1, 3), 2u);
  EXPECT_EQ(k_max_from_graph(dag, 0, 1), 1u);
  EXPECT_EQ(k_max_from_graph(presets::four_node(1, 1.5, 1, 2, 0.5), 2, 3), 4u);
}

TEST(EstimateGmm, SelectedKCoversDistinctAtoms) {
  // Pair (3,4) of the four-node graph has atoms at 0.5 and 1.0.
  const auto dag = presets::four_node(1.0, 1.5, 1.0, 2.0, 0.5);
  std::size_t covered = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = simulate(dag, {}, NoiseSpec::uniform(4, 0.1), 5000, seed);
    GmmOptions opts;
    opts.k_max = 4;
    opts.restarts = 2;
    opts.seed = seed;
    covered += estimate_gmm(differences(s, 2, 3), opts).fit.k >= 2;
  }
  EXPECT_GE(covered, 8u);
}

TEST(VarianceCheck, MeanInsideCltBand) {
  const auto dag = presets::gmm_example();
  GmmOptions opts;
  opts.k_max = 2;
  const auto vc = estimator_variance_check(dag, {}, NoiseSpec::uniform(4, 0.1), 1, 3, 20, 2000, 7, opts);
  ASSERT_EQ(vc.estimates.size(), 20u);
  EXPECT_EQ(vc.truth, 1.5);
  EXPECT_DOUBLE_EQ(vc.expected_variance, 0.02);
  EXPECT_LE(std::abs(vc.mean - 1.5), 3 * std::sqrt(vc.expected_variance / 20));
  EXPECT_EQ(vc.renoised.size(), 20u);
  EXPECT_THROW(estimator_variance_check(dag, {}, NoiseSpec::none(4), 1, 3, 2, 100, 1), std::invalid_argument);
  EXPECT_THROW(estimator_variance_check(dag, {}, NoiseSpec::uniform(4, 0.1), 0, 1, 2, 100, 1), std::invalid_argument);
}
