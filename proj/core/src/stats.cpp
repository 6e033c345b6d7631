#include "mlbn/stats.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace mlbn::stats {

double mean(std::span<const double> x) {
  if (x.empty()) throw std::invalid_argument("mean of an empty sample");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
  if (x.size() < 2) return 0.0;
  return variance(x) * static_cast<double>(x.size()) / static_cast<double>(x.size() - 1);
}

double quantile(std::span<const double> x, double q) {
  if (x.empty()) throw std::invalid_argument("quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw std::invalid_argument("quantile level outside [0, 1]");
  std::vector<double> s(x.begin(), x.end());
  std::sort(s.begin(), s.end());
  const double h = q * static_cast<double>(s.size() - 1);
  const auto lo = static_cast<std::size_t>(h);
  const auto hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

double median(std::span<const double> x) { return quantile(x, 0.5); }

double iqr(std::span<const double> x) { return quantile(x, 0.75) - quantile(x, 0.25); }

}  // namespace mlbn::stats
