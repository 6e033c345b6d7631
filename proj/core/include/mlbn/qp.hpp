#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mlbn::qp {

/// min -dᵀb + ½ bᵀDb  subject to  Aᵀb >= b0.
struct QpCanonical {
  Eigen::MatrixXd D;
  Eigen::VectorXd d;
  /// One column per constraint.
  Eigen::MatrixXd A;
  Eigen::VectorXd b0;

  /// Throws std::invalid_argument on inconsistent dimensions or asymmetric D.
  void validate() const;
  double objective(const Eigen::VectorXd& b) const;
};

class infeasible_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class nonconvergence_error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct GenericSolution {
  Eigen::VectorXd b;
  /// Lagrange multipliers, one per constraint (zero off the active set).
  Eigen::VectorXd multipliers;
  std::vector<std::size_t> active_set;
  double objective = 0.0;
  std::size_t iterations = 0;
};

struct GenericKkt {
  double stationarity = 0.0;
  double primal_violation = 0.0;
  double dual_violation = 0.0;
  double complementarity = 0.0;

  double max() const;
};

/// Goldfarb-Idnani dual active-set method. D must be positive definite.
/// Throws infeasible_error or nonconvergence_error.
GenericSolution solve_qp_generic(const QpCanonical& problem, std::size_t max_iterations = 0);

/// Residuals of the KKT conditions at a generic solution, each scaled by
/// 1 + the magnitude of the terms it compares.
GenericKkt generic_kkt(const QpCanonical& problem, const GenericSolution& sol);

/// Regularization placed on the slack block of the per-pair instance.
inline constexpr double kSlackRegularization = 1e-10;

/// Per-pair hyperplane fit in canonical form over b = (ω', δ_1..δ_N):
///   D = diag(2K2, reg, ..., reg), d = (0, -K1, ..., -K1),
///   constraints ω' + δ_ν >= Y'_ν and δ_ν >= 0.
QpCanonical pair_instance(std::span<const double> shifted, double k1, double k2,
                          double regularization = kSlackRegularization);

enum class TuneStatus { ok, needs_manual_tuning };
std::string to_string(TuneStatus s);

struct QpSolution {
  /// ω' + shift
  double omega_hat = 0.0;
  double omega_prime = 0.0;
  /// min_ν Y^ν subtracted before solving.
  double shift = 0.0;
  std::vector<double> deltas;
  double k1 = 0.0;
  double k2 = 0.0;
  double objective = 0.0;
  /// Data constraints that are tight (Y'_ν >= ω').
  std::size_t active_count = 0;
  TuneStatus status = TuneStatus::ok;
};

/// Exact minimizer of g(ω') = K1·Σ max(0, Y'_ν - ω') + K2·ω'^2 on Y' = y - min(y).
/// Requires K1, K2 >= 0, K1 + K2 = 1 (±1e-9) and K2 > 0.
QpSolution solve_pair_1d(std::span<const double> y, double k1, double k2);

/// g evaluated on already shifted data.
double pair_objective(std::span<const double> shifted, double k1, double k2, double omega_prime);

/// Builds the QpSolution for the exact 1-D problem from a generic solution of pair_instance().
QpSolution from_generic(std::span<const double> y, double k1, double k2, const GenericSolution& sol);

struct TuningStep {
  double k1;
  double k2;
};

/// Geometric schedule in K1/K2 from 1 down to min_ratio, `factor` per step.
std::vector<TuningStep> default_schedule(double min_ratio = 1e-7, double factor = 0.8);

/// 0.01·IQR(Y') (falls back to 0.01·range, then 1e-12, for degenerate data).
double default_threshold(std::span<const double> y);

struct TrajectoryPoint {
  double k1;
  double k2;
  double omega_prime;
};

struct AutoTuneResult {
  QpSolution solution;
  std::vector<TrajectoryPoint> trajectory;
  double threshold = 0.0;
};

/// Replays the tuning loop: solve at each schedule step until ω' <= t.
/// An exhausted (or empty) schedule returns the best solution flagged
/// needs_manual_tuning.
AutoTuneResult auto_tune(std::span<const double> y, double t, const std::vector<TuningStep>& schedule);

struct KktReport {
  double primal_violation = 0.0;
  double negative_slack = 0.0;
  double complementarity = 0.0;
  /// Distance of 2K2ω' from the subgradient interval K1·[#{Y' > ω'}, #{Y' >= ω'}].
  double stationarity = 0.0;
  std::size_t ties = 0;

  double max() const;
};

/// Values within tie_tolerance of ω' count as ties.
KktReport kkt_report(const QpSolution& sol, std::span<const double> y, double tie_tolerance = 1e-12);

}  // namespace mlbn::qp
