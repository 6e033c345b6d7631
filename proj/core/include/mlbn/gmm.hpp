#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlbn/dag.hpp"
#include "mlbn/simulate.hpp"

namespace mlbn::gmm {

/// Fitted univariate Gaussian mixture.
struct MixtureFit {
  std::size_t k = 0;
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
  double loglik = 0.0;
  double bic = 0.0;
  std::size_t sample_size = 0;
  std::size_t iterations = 0;
  bool converged = false;
  bool equal_variance = false;
  /// Components removed after collapsing onto the variance floor.
  std::size_t pruned = 0;
  /// Log-likelihood after every E-step of the kept restart (when requested).
  std::vector<double> loglik_trace;
  /// N×K, row-major (when requested).
  std::vector<double> responsibilities;
  /// BIC of the best fit for K = 1..k_max (select_k only).
  std::vector<double> candidate_bic;

  std::size_t free_parameters() const;
};

struct EmOptions {
  /// Stop when |Δloglik| < tolerance·N.
  double tolerance = 1e-8;
  std::size_t max_iterations = 500;
  /// Variance floor = floor_scale·(sample range)^2.
  double variance_floor_scale = 1e-8;
  /// A component at the variance floor with weight below this is pruned.
  double collapse_weight = 0.01;
  bool equal_variance = false;
  bool keep_trace = false;
  bool keep_responsibilities = false;
  /// Polled between iterations; a set flag aborts with estimation_error.
  const std::atomic<bool>* cancel = nullptr;
};

/// Starting point for one EM run.
struct InitialMixture {
  std::vector<double> weights;
  std::vector<double> means;
  std::vector<double> variances;
};

/// Quantile-spread start: means at the (k + 1/2)/K quantiles of y, a common
/// variance var(y)/K^2, uniform weights.
InitialMixture quantile_init(std::span<const double> y, std::size_t k);

/// One EM run from a given start.
MixtureFit em_fit(std::span<const double> y, const InitialMixture& init, const EmOptions& options = {});

/// Best of `restarts` runs: the quantile start plus jittered copies drawn from `seed`.
MixtureFit em_fit(std::span<const double> y, std::size_t k, std::uint64_t seed, std::size_t restarts = 8,
                  const EmOptions& options = {});

/// Log-likelihood of y under fixed mixture parameters.
double log_likelihood(std::span<const double> y, std::span<const double> weights, std::span<const double> means,
                      std::span<const double> variances);

/// Mixture with minimal BIC over K = 1..k_max.
MixtureFit select_k(std::span<const double> y, std::size_t k_max, std::uint64_t seed, std::size_t restarts = 8,
                    const EmOptions& options = {});

/// k_max suggested by the graph: |common extended ancestors of i and j| + 1.
std::size_t k_max_from_graph(const WeightedDag& dag, std::size_t i, std::size_t j);

enum class Method { min, gmm, qp };
std::string to_string(Method m);

struct EstimateReport {
  std::size_t i = 0;
  std::size_t j = 0;
  Method method = Method::min;
  double estimate = 0.0;
  std::optional<std::size_t> chosen_k;
  std::optional<double> component_weight;
  std::optional<double> component_variance;
  std::optional<double> occupancy_fraction;
  std::vector<std::string> flags;
};

/// ω̂ = min_ν Y^ν; exact for noise-free data once the atom has been observed.
EstimateReport min_estimator(const DifferenceSample& y);

inline constexpr double kDefaultWeightFloor = 0.01;

/// ω̂ = smallest mean among components with weight >= weight_floor.
/// Throws estimation_error when no component clears the floor.
EstimateReport smallest_peak(const MixtureFit& fit, double weight_floor = kDefaultWeightFloor);

/// Values this close to the minimum (relative to 1 + max|y|) count as ties.
inline constexpr double kTieTolerance = 1e-12;
/// Throws estimation_error when y looks noise-free (the minimum is attained more
/// than once, up to rounding): Dirac atoms are not identified by a Gaussian mixture.
void require_continuous(std::span<const double> y);

struct GmmOptions {
  std::size_t k_max = 5;
  double weight_floor = kDefaultWeightFloor;
  std::uint64_t seed = 0;
  std::size_t restarts = 8;
  EmOptions em;
};

struct GmmEstimate {
  MixtureFit fit;
  EstimateReport report;
};

/// require_continuous + select_k + smallest_peak.
GmmEstimate estimate_gmm(const DifferenceSample& y, const GmmOptions& options = {});

struct VarianceCheck {
  std::size_t trials = 0;
  double truth = 0.0;
  /// σ_i^2 + σ_j^2
  double expected_variance = 0.0;
  /// Smallest-peak estimates across trials.
  std::vector<double> estimates;
  double mean = 0.0;
  double variance = 0.0;
  /// Mean fitted variance of the winning component.
  double mean_component_variance = 0.0;
  /// min_ν Y^ν of the noise-free replay plus ε_j - ε_i of the winning row.
  std::vector<double> renoised;
  double renoised_mean = 0.0;
  double renoised_variance = 0.0;
};

/// Runs `trials` independent seeded simulate→estimate cycles for the pair (i, j).
/// Requires i to be an ancestor of j and σ_i, σ_j > 0 (throws otherwise).
VarianceCheck estimator_variance_check(const WeightedDag& dag, const InnovationSpec& innovation,
                                       const NoiseSpec& noise, std::size_t i, std::size_t j, std::size_t trials,
                                       std::size_t n_samples, std::uint64_t seed, const GmmOptions& options = {},
                                       NoiseFeed feed = NoiseFeed::noisy);

}  // namespace mlbn::gmm
