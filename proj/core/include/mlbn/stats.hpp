#pragma once

#include <span>
#include <vector>

namespace mlbn::stats {

double mean(std::span<const double> x);
/// Biased (1/N) variance.
double variance(std::span<const double> x);
/// Unbiased (1/(N-1)) variance; 0 for N < 2.
double sample_variance(std::span<const double> x);
/// Linear-interpolation quantile (type 7) of unsorted data, q in [0,1].
double quantile(std::span<const double> x, double q);
double median(std::span<const double> x);
double iqr(std::span<const double> x);
/// Kolmogorov-Smirnov distance between the empirical CDF of x and cdf.
template <class Cdf>
double ks_distance(std::vector<double> x, Cdf cdf);

}  // namespace mlbn::stats

#include <algorithm>
#include <cmath>

template <class Cdf>
double mlbn::stats::ks_distance(std::vector<double> x, Cdf cdf) {
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double f = cdf(x[k]);
    d = std::max({d, std::abs(f - static_cast<double>(k) / n), std::abs(static_cast<double>(k + 1) / n - f)});
  }
  return d;
}
