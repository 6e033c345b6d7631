#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mlbn/dag.hpp"

namespace mlbn::bench {

enum class Scenario { recovery, inactivation, stability, instability };
std::string to_string(Scenario s);
/// Throws std::invalid_argument for unknown names.
Scenario scenario_from_string(const std::string& name);

/// Largest σ the estimators are documented for; larger values run with a warning.
inline constexpr double kSigmaMax = 0.25;

struct ExperimentConfig {
  Scenario scenario = Scenario::recovery;
  /// Preset name; ignored when `graph` is set.
  std::string preset = "gmm-example";
  std::optional<WeightedDag> graph;
  std::size_t n_samples = 2000;
  double sigma = 0.0;
  std::vector<std::uint64_t> seeds = {1};
  /// Any of "min", "gmm", "qp".
  std::vector<std::string> methods = {"min"};
  /// inactivation: target path fractions; instability: target path counts;
  /// stability: sample sizes.
  std::vector<double> grid;
  /// 0 derives k_max from the graph.
  std::size_t k_max = 0;
  double weight_floor = 0.01;
  std::size_t restarts = 8;
  /// QP threshold t in units of the noise level σ.
  double qp_threshold_sigmas = 3.0;
  /// Stability band: median |ω̂| and IQR of ω̂ over the seeds.
  double stable_median = 0.1;
  double stable_iqr = 0.1;
  std::size_t bisection_steps = 10;
  bool full_scale = false;
  unsigned workers = 0;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate() const;
  /// Human-readable warnings (e.g. σ above the documented range).
  std::vector<std::string> warnings() const;
  WeightedDag resolved_graph() const;
};

/// Desk-scale defaults (full sample sizes divided by 10) or full-scale ones.
ExperimentConfig default_config(Scenario s, bool full_scale = false);

/// Competitor weight c giving target fraction p = 1 / (2 + e^c) of maxima
/// through the target edge of presets::competing_parents (noise ignored).
double competitor_for_fraction(double p);

// --- exact recovery ---------------------------------------------------------

struct RecoveryRow {
  std::uint64_t seed;
  std::size_t i;
  std::size_t j;
  double truth;
  double estimate;
  bool exact;
  bool masked;
  /// ω*(i,j): what the minimum converges to when the edge is masked.
  double closure;
};

struct RecoveryResult {
  std::vector<RecoveryRow> rows;
  /// Exact matches among facet-defining edges.
  double exact_fraction = 0.0;
};

RecoveryResult run_exact_recovery(const ExperimentConfig& cfg);

// --- structural inactivation sweep -------------------------------------------

struct SweepRow {
  double grid_point;
  double competitor;
  std::uint64_t seed;
  std::size_t path_obs;
  double path_fraction;
  bool flagged;
  std::optional<double> gmm_estimate;
  std::optional<double> qp_estimate;
  std::string gmm_status;
};

struct SweepSummary {
  double grid_point;
  double median_path_obs;
  double mean_abs_gmm_error;
  double smoothed_gmm_error;
  double median_abs_qp_error;
  std::size_t gmm_failures;
};

struct SweepResult {
  double truth = 0.0;
  std::vector<SweepRow> rows;
  /// One entry per grid point, ordered by median path observations.
  std::vector<SweepSummary> summary;
};

SweepResult run_inactivation_sweep(const ExperimentConfig& cfg);

// --- stability thresholds -----------------------------------------------------

struct StabilityRow {
  std::size_t n_samples;
  double path_fraction;
  double path_obs;
  double omega_hat;
  bool bracketed;
};

struct StabilityProbe {
  double path_fraction;
  double median_path_obs;
  double median_abs_estimate;
  double iqr_estimate;
  double median_estimate;
  bool stable;
};

/// Evaluates the stability criterion at one target path fraction.
StabilityProbe probe_stability(const ExperimentConfig& cfg, std::size_t n_samples, double path_fraction);

std::vector<StabilityRow> run_stability_table(const ExperimentConfig& cfg);

// --- instability trace ---------------------------------------------------------

struct TraceRow {
  double target_obs;
  std::uint64_t seed;
  std::size_t path_obs;
  double frequency;
  double estimate;
};

std::vector<TraceRow> run_instability_trace(const ExperimentConfig& cfg);

/// Runs cfg.scenario and writes <scenario>.csv plus manifest.json into dir.
/// Returns the manifest path.
std::filesystem::path run_and_write(const ExperimentConfig& cfg, const std::filesystem::path& dir);

}  // namespace mlbn::bench
