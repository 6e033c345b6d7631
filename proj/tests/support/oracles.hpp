#pragma once

// Slow, obviously-correct reference implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <vector>

#include "mlbn/dag.hpp"

namespace mlbn::support {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Heaviest i⇝j path by enumerating every path; 0 for i == j, -inf when none.
inline double max_path(const WeightedDag& dag, std::size_t i, std::size_t j) {
  if (i == j) return 0.0;
  double best = kNegInf;
  for (std::size_t c : dag.children(i)) {
    const double rest = max_path(dag, c, j);
    if (rest != kNegInf) best = std::max(best, *dag.weight(i, c) + rest);
  }
  return best;
}

/// Same, skipping the direct edge i→j.
inline double max_path_avoiding_edge(const WeightedDag& dag, std::size_t i, std::size_t j) {
  double best = kNegInf;
  for (std::size_t c : dag.children(i)) {
    if (c == j) continue;
    const double rest = max_path(dag, c, j);
    if (rest != kNegInf) best = std::max(best, *dag.weight(i, c) + rest);
  }
  return best;
}

/// I ⊕ A ⊕ A^2 ⊕ ... ⊕ A^(n-1) with plain doubles.
inline std::vector<double> closure_by_powers(const std::vector<double>& a, std::size_t n) {
  std::vector<double> acc(n * n, kNegInf), power(n * n, kNegInf);
  for (std::size_t i = 0; i < n; ++i) acc[i * n + i] = power[i * n + i] = 0.0;
  for (std::size_t step = 1; step < n; ++step) {
    std::vector<double> next(n * n, kNegInf);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) {
          const double x = power[i * n + k], y = a[k * n + j];
          if (x != kNegInf && y != kNegInf) next[i * n + j] = std::max(next[i * n + j], x + y);
        }
    power = next;
    for (std::size_t c = 0; c < n * n; ++c) acc[c] = std::max(acc[c], power[c]);
  }
  return acc;
}

/// g(w) = K1 Σ max(0, y' - w) + K2 w² on shifted data.
inline double hinge_objective(std::span<const double> shifted, double k1, double k2, double w) {
  double s = 0.0;
  for (double v : shifted) s += std::max(0.0, v - w);
  return k1 * s + k2 * w * w;
}

/// Minimizer of hinge_objective over [0, max y'] by a coarse grid followed by
/// two rounds of local refinement.
inline double hinge_grid_min(std::span<const double> shifted, double k1, double k2) {
  double lo = 0.0, hi = *std::max_element(shifted.begin(), shifted.end());
  double best = 0.0;
  for (int round = 0; round < 3; ++round) {
    const int steps = 4000;
    const double h = (hi - lo) / steps;
    double best_val = std::numeric_limits<double>::infinity();
    for (int s = 0; s <= steps; ++s) {
      const double w = lo + h * s;
      const double v = hinge_objective(shifted, k1, k2, w);
      if (v < best_val) {
        best_val = v;
        best = w;
      }
    }
    lo = std::max(0.0, best - 2 * h);
    hi = best + 2 * h;
  }
  return best;
}

inline double normal_pdf(double x, double m, double var) {
  return std::exp(-0.5 * (x - m) * (x - m) / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

/// Mixture log-likelihood evaluated term by term.
inline double mixture_loglik(std::span<const double> y, std::span<const double> w, std::span<const double> m,
                             std::span<const double> v) {
  double ll = 0.0;
  for (double x : y) {
    double p = 0.0;
    for (std::size_t c = 0; c < w.size(); ++c) p += w[c] * normal_pdf(x, m[c], v[c]);
    ll += std::log(p);
  }
  return ll;
}

/// Standard Fréchet(ξ) CDF, location α and scale β: exp(-((z-α)/β)^-ξ).
inline double frechet_cdf_oracle(double z, double alpha, double beta, double xi) {
  if (z <= alpha) return 0.0;
  return std::exp(-std::pow((z - alpha) / beta, -xi));
}

}  // namespace mlbn::support
