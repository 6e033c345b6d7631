#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "mlbn/qp.hpp"
#include "mlbn/stats.hpp"

namespace mlbn::qp {
namespace {

void check_weights(double k1, double k2) {
  if (!(k1 >= 0.0 && k2 > 0.0) || std::abs(k1 + k2 - 1.0) > 1e-9) {
    throw std::invalid_argument("qp: need K1 >= 0, K2 > 0 and K1 + K2 = 1");
  }
}

std::vector<double> shifted_copy(std::span<const double> y, double& shift) {
  if (y.empty()) throw std::invalid_argument("qp: empty sample");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("qp: non-finite observation");
  shift = *std::min_element(y.begin(), y.end());
  std::vector<double> s(y.begin(), y.end());
  for (double& v : s) v -= shift;
  return s;
}

QpSolution assemble(std::vector<double> shifted, double shift, double k1, double k2, double omega_prime) {
  QpSolution sol;
  sol.omega_prime = omega_prime;
  sol.shift = shift;
  sol.omega_hat = omega_prime + shift;
  sol.k1 = k1;
  sol.k2 = k2;
  sol.objective = pair_objective(shifted, k1, k2, omega_prime);
  sol.deltas.resize(shifted.size());
  for (std::size_t v = 0; v < shifted.size(); ++v) {
    sol.deltas[v] = std::max(0.0, shifted[v] - omega_prime);
    if (shifted[v] >= omega_prime) ++sol.active_count;
  }
  return sol;
}

}  // namespace

std::string to_string(TuneStatus s) { return s == TuneStatus::ok ? "ok" : "needs_manual_tuning"; }

double pair_objective(std::span<const double> shifted, double k1, double k2, double omega_prime) {
  double hinge = 0.0;
  for (double v : shifted) hinge += std::max(0.0, v - omega_prime);
  return k1 * hinge + k2 * omega_prime * omega_prime;
}

QpSolution solve_pair_1d(std::span<const double> y, double k1, double k2) {
  check_weights(k1, k2);
  double shift = 0.0;
  std::vector<double> s = shifted_copy(y, shift);
  std::vector<double> desc = s;
  std::sort(desc.begin(), desc.end(), std::greater<>());

  // h(ω) = 2K2ω − K1·#{Y' > ω} is nondecreasing; walk the breakpoints from the
  // top until 0 lies in its value on an open interval or its jump at a breakpoint.
  const std::size_t n = desc.size();
  std::size_t above = 0;  // #{Y' > ω} on the current open interval
  double upper = std::numeric_limits<double>::infinity();
  double omega = 0.0;
  bool found = false;
  for (std::size_t idx = 0; idx < n && !found;) {
    const double u = desc[idx];
    std::size_t at = idx;
    while (at < n && desc[at] == u) ++at;
    const double cand = k1 * static_cast<double>(above) / (2.0 * k2);
    if (cand > u && cand < upper) {
      omega = cand;
      found = true;
      break;
    }
    // Subgradient at the breakpoint u: 2K2u − K1·[#{Y' >= u}, #{Y' > u}].
    if (2.0 * k2 * u - k1 * static_cast<double>(at) <= 0.0 && 2.0 * k2 * u - k1 * static_cast<double>(above) >= 0.0) {
      omega = u;
      found = true;
      break;
    }
    above = at;
    upper = u;
    idx = at;
  }
  if (!found) {
    // Below every point h(ω) = 2K2ω − K1·N, which vanishes only at ω = K1·N/(2K2) >= 0 = min Y'.
    omega = desc.back();
  }
  return assemble(std::move(s), shift, k1, k2, omega);
}

QpCanonical pair_instance(std::span<const double> shifted, double k1, double k2, double regularization) {
  check_weights(k1, k2);
  if (!(regularization > 0.0)) throw std::invalid_argument("qp: slack regularization must be positive");
  const auto n = static_cast<Eigen::Index>(shifted.size());
  QpCanonical p;
  p.D = Eigen::MatrixXd::Zero(n + 1, n + 1);
  p.D(0, 0) = 2.0 * k2;
  p.d = Eigen::VectorXd::Constant(n + 1, -k1);
  p.d[0] = 0.0;
  p.A = Eigen::MatrixXd::Zero(n + 1, 2 * n);
  p.b0 = Eigen::VectorXd::Zero(2 * n);
  for (Eigen::Index v = 0; v < n; ++v) {
    p.D(v + 1, v + 1) = regularization;
    p.A(0, v) = 1.0;
    p.A(v + 1, v) = 1.0;
    p.b0[v] = shifted[static_cast<std::size_t>(v)];
    p.A(v + 1, n + v) = 1.0;
  }
  return p;
}

QpSolution from_generic(std::span<const double> y, double k1, double k2, const GenericSolution& sol) {
  check_weights(k1, k2);
  double shift = 0.0;
  std::vector<double> s = shifted_copy(y, shift);
  if (static_cast<std::size_t>(sol.b.size()) != s.size() + 1) {
    throw std::invalid_argument("qp: generic solution does not match the sample");
  }
  QpSolution out = assemble(std::move(s), shift, k1, k2, sol.b[0]);
  for (std::size_t v = 0; v < out.deltas.size(); ++v) out.deltas[v] = sol.b[static_cast<Eigen::Index>(v + 1)];
  return out;
}

std::vector<TuningStep> default_schedule(double min_ratio, double factor) {
  if (!(min_ratio > 0.0 && min_ratio <= 1.0) || !(factor > 0.0 && factor < 1.0)) {
    throw std::invalid_argument("qp: schedule needs 0 < min_ratio <= 1 and 0 < factor < 1");
  }
  std::vector<TuningStep> out;
  for (double r = 1.0;; r *= factor) {
    const double ratio = std::max(r, min_ratio);
    out.push_back({ratio / (1.0 + ratio), 1.0 / (1.0 + ratio)});
    if (ratio == min_ratio) break;
  }
  return out;
}

double default_threshold(std::span<const double> y) {
  double shift = 0.0;
  const std::vector<double> s = shifted_copy(y, shift);
  const double spread = stats::iqr(s);
  if (spread > 0.0) return 0.01 * spread;
  const double range = *std::max_element(s.begin(), s.end());
  if (range > 0.0) return 0.01 * range;
  return 1e-12;
}

AutoTuneResult auto_tune(std::span<const double> y, double t, const std::vector<TuningStep>& schedule) {
  if (!(t > 0.0)) throw std::invalid_argument("qp: tuning threshold must be positive");
  AutoTuneResult out;
  out.threshold = t;
  std::optional<QpSolution> best;
  for (const TuningStep& step : schedule) {
    QpSolution sol = solve_pair_1d(y, step.k1, step.k2);
    out.trajectory.push_back({step.k1, step.k2, sol.omega_prime});
    if (sol.omega_prime <= t) {
      out.solution = std::move(sol);
      return out;
    }
    if (!best || sol.omega_prime < best->omega_prime) best = std::move(sol);
  }
  if (!best) {
    best = solve_pair_1d(y, 0.5, 0.5);
    out.trajectory.push_back({0.5, 0.5, best->omega_prime});
  }
  out.solution = std::move(*best);
  out.solution.status = TuneStatus::needs_manual_tuning;
  return out;
}

double KktReport::max() const {
  return std::max({primal_violation, negative_slack, complementarity, stationarity});
}

KktReport kkt_report(const QpSolution& sol, std::span<const double> y, double tie_tolerance) {
  if (sol.deltas.size() != y.size()) throw std::invalid_argument("qp: solution does not match the sample");
  KktReport k;
  std::size_t strictly_above = 0, at_or_above = 0;
  for (std::size_t v = 0; v < y.size(); ++v) {
    const double yp = y[v] - sol.shift;
    const double delta = sol.deltas[v];
    const double data_slack = sol.omega_prime + delta - yp;
    k.primal_violation = std::max(k.primal_violation, std::max(0.0, -data_slack));
    k.negative_slack = std::max(k.negative_slack, std::max(0.0, -delta));
    k.complementarity = std::max(k.complementarity, std::abs(std::min(delta, data_slack)));
    if (std::abs(yp - sol.omega_prime) <= tie_tolerance) ++k.ties;
    if (yp > sol.omega_prime + tie_tolerance) ++strictly_above;
    if (yp >= sol.omega_prime - tie_tolerance) ++at_or_above;
  }
  const double g = 2.0 * sol.k2 * sol.omega_prime;
  const double lo = sol.k1 * static_cast<double>(strictly_above);
  const double hi = sol.k1 * static_cast<double>(at_or_above);
  k.stationarity = g < lo ? lo - g : (g > hi ? g - hi : 0.0);
  return k;
}

}  // namespace mlbn::qp
