#include "mlbn/gmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "mlbn/error.hpp"
#include "mlbn/network.hpp"
#include "mlbn/random.hpp"
#include "mlbn/stats.hpp"

namespace mlbn::gmm {
namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;
constexpr std::uint64_t kRestartStream = 0x6a69747465722d31ULL;
constexpr std::uint64_t kTrialStream = 0x747269616c2d3031ULL;

// exp for arguments <= 0. Below the cutoff the result is under 1e-304, far
// beneath the rounding of the leading term (exp(0) = 1), and glibc's underflow
// path is very slow.
inline double safe_exp(double x) { return x < -700.0 ? 0.0 : std::exp(x); }

struct Params {
  std::vector<double> w, mu, var;
  std::size_t size() const { return w.size(); }
};

double variance_floor(std::span<const double> y, double scale) {
  const auto [lo, hi] = std::minmax_element(y.begin(), y.end());
  const double range = *hi - *lo;
  return std::max(scale * range * range, std::numeric_limits<double>::min());
}

// E-step: fills resp (N×K) and returns the log-likelihood.
double e_step(std::span<const double> y, const Params& p, std::vector<double>& resp) {
  const std::size_t n = y.size(), k = p.size();
  std::vector<double> c(k), inv(k);
  for (std::size_t m = 0; m < k; ++m) {
    c[m] = std::log(p.w[m]) - 0.5 * (kLog2Pi + std::log(p.var[m]));
    inv[m] = 0.5 / p.var[m];
  }
  resp.resize(n * k);
  double ll = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    double* row = resp.data() + r * k;
    double top = -std::numeric_limits<double>::infinity();
    for (std::size_t m = 0; m < k; ++m) {
      const double d = y[r] - p.mu[m];
      row[m] = c[m] - d * d * inv[m];
      top = std::max(top, row[m]);
    }
    double s = 0.0;
    for (std::size_t m = 0; m < k; ++m) s += (row[m] = safe_exp(row[m] - top));
    for (std::size_t m = 0; m < k; ++m) row[m] /= s;
    ll += top + std::log(s);
  }
  return ll;
}

// One EM sweep: returns the log-likelihood at p and writes the M-step update
// into next. Sufficient statistics are accumulated in the same pass.
double em_pass(std::span<const double> y, const Params& p, Params& next, double floor, bool equal_variance) {
  const std::size_t n = y.size(), k = p.size();
  std::vector<double> c(k), inv(k), term(k), nk(k, 0.0), sy(k, 0.0), syy(k, 0.0);
  for (std::size_t m = 0; m < k; ++m) {
    c[m] = std::log(p.w[m]) - 0.5 * (kLog2Pi + std::log(p.var[m]));
    inv[m] = 0.5 / p.var[m];
  }
  // Σ log s_r is accumulated as a running product of the normalizers
  // (each in [1, K]), flushed through one log every kChunk rows.
  constexpr std::size_t kChunk = 64;
  double ll = 0.0, prod = 1.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double v = y[r];
    double top = -std::numeric_limits<double>::infinity();
    std::size_t lead = 0;
    for (std::size_t m = 0; m < k; ++m) {
      const double d = v - p.mu[m];
      term[m] = c[m] - d * d * inv[m];
      if (term[m] > top) {
        top = term[m];
        lead = m;
      }
    }
    double s = 0.0;
    for (std::size_t m = 0; m < k; ++m) s += (term[m] = m == lead ? 1.0 : safe_exp(term[m] - top));
    const double scale = 1.0 / s;
    for (std::size_t m = 0; m < k; ++m) {
      const double g = term[m] * scale;
      nk[m] += g;
      sy[m] += g * v;
      syy[m] += g * v * v;
    }
    ll += top;
    prod *= s;
    if ((r + 1) % kChunk == 0) {
      ll += std::log(prod);
      prod = 1.0;
    }
  }
  ll += std::log(prod);
  next = p;
  double pooled = 0.0;
  for (std::size_t m = 0; m < k; ++m) {
    next.w[m] = nk[m] / static_cast<double>(n);
    if (!(nk[m] > 0.0)) {
      next.var[m] = floor;
      continue;
    }
    next.mu[m] = sy[m] / nk[m];
    const double ss = std::max(0.0, syy[m] - nk[m] * next.mu[m] * next.mu[m]);
    pooled += ss;
    next.var[m] = std::max(ss / nk[m], floor);
  }
  if (equal_variance) std::fill(next.var.begin(), next.var.end(), std::max(pooled / static_cast<double>(n), floor));
  return ll;
}

// Drops empty components and components that collapsed onto the floor with
// negligible weight. Returns the number removed.
std::size_t prune(Params& p, double floor, double collapse_weight) {
  Params kept;
  for (std::size_t m = 0; m < p.size(); ++m) {
    const bool empty = !(p.w[m] > 0.0);
    const bool collapsed = p.var[m] <= floor * (1.0 + 1e-9) && p.w[m] < collapse_weight;
    if (empty || collapsed) continue;
    kept.w.push_back(p.w[m]);
    kept.mu.push_back(p.mu[m]);
    kept.var.push_back(p.var[m]);
  }
  if (kept.size() == 0) {
    const auto m = static_cast<std::size_t>(std::max_element(p.w.begin(), p.w.end()) - p.w.begin());
    kept = Params{{1.0}, {p.mu[m]}, {p.var[m]}};
  }
  const std::size_t removed = p.size() - kept.size();
  if (removed) {
    double s = 0.0;
    for (double w : kept.w) s += w;
    for (double& w : kept.w) w /= s;
    p = std::move(kept);
  }
  return removed;
}

void sort_components(MixtureFit& fit) {
  std::vector<std::size_t> idx(fit.k);
  for (std::size_t m = 0; m < fit.k; ++m) idx[m] = m;
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return fit.means[a] < fit.means[b]; });
  auto permute = [&](std::vector<double>& v) {
    std::vector<double> out(fit.k);
    for (std::size_t m = 0; m < fit.k; ++m) out[m] = v[idx[m]];
    v = std::move(out);
  };
  permute(fit.weights);
  permute(fit.means);
  permute(fit.variances);
  if (!fit.responsibilities.empty()) {
    std::vector<double> out(fit.responsibilities.size());
    for (std::size_t r = 0; r < fit.sample_size; ++r)
      for (std::size_t m = 0; m < fit.k; ++m) out[r * fit.k + m] = fit.responsibilities[r * fit.k + idx[m]];
    fit.responsibilities = std::move(out);
  }
}

void check_data(std::span<const double> y) {
  if (y.empty()) throw estimation_error("mixture fit needs at least one observation");
  for (double v : y)
    if (!std::isfinite(v)) throw estimation_error("mixture fit needs finite observations");
}

}  // namespace

std::size_t MixtureFit::free_parameters() const { return equal_variance ? 2 * k : 3 * k - 1; }

InitialMixture quantile_init(std::span<const double> y, std::size_t k) {
  if (k == 0) throw std::invalid_argument("quantile_init: K must be >= 1");
  check_data(y);
  InitialMixture init;
  const double v = std::max(stats::variance(y) / static_cast<double>(k * k), std::numeric_limits<double>::min());
  for (std::size_t m = 0; m < k; ++m) {
    init.weights.push_back(1.0 / static_cast<double>(k));
    init.means.push_back(stats::quantile(y, (static_cast<double>(m) + 0.5) / static_cast<double>(k)));
    init.variances.push_back(v);
  }
  return init;
}

MixtureFit em_fit(std::span<const double> y, const InitialMixture& init, const EmOptions& options) {
  check_data(y);
  const std::size_t k0 = init.weights.size();
  if (k0 == 0 || init.means.size() != k0 || init.variances.size() != k0) {
    throw std::invalid_argument("em_fit: inconsistent initial mixture");
  }
  const double floor = variance_floor(y, options.variance_floor_scale);
  Params p{init.weights, init.means, init.variances};
  for (double& v : p.var) v = std::max(v, floor);
  if (options.equal_variance) {
    const double v = *std::max_element(p.var.begin(), p.var.end());
    std::fill(p.var.begin(), p.var.end(), v);
  }

  MixtureFit fit;
  fit.sample_size = y.size();
  fit.equal_variance = options.equal_variance;
  fit.pruned = prune(p, floor, 0.0);

  // Work on centered data so the second-moment accumulation stays accurate.
  const double center = stats::mean(y);
  std::vector<double> yc(y.begin(), y.end());
  for (double& v : yc) v -= center;
  for (double& mu : p.mu) mu -= center;

  Params next;
  double prev = -std::numeric_limits<double>::infinity();
  const double tol = options.tolerance * static_cast<double>(y.size());
  for (;;) {
    if (options.cancel && options.cancel->load(std::memory_order_relaxed)) {
      throw estimation_error("mixture fit cancelled");
    }
    const double ll = em_pass(yc, p, next, floor, options.equal_variance);
    if (options.keep_trace) fit.loglik_trace.push_back(ll);
    fit.loglik = ll;
    if (std::abs(ll - prev) < tol) {
      // Converged; a collapsed sliver is removed and EM resumes on the rest.
      const std::size_t removed = prune(p, floor, options.collapse_weight);
      if (removed == 0) {
        fit.converged = true;
        break;
      }
      fit.pruned += removed;
      if (options.keep_trace) fit.loglik_trace.clear();
      prev = -std::numeric_limits<double>::infinity();
      continue;
    }
    if (fit.iterations >= options.max_iterations) break;
    prev = ll;
    p = std::move(next);
    ++fit.iterations;
    const std::size_t removed = prune(p, floor, 0.0);
    if (removed) {
      fit.pruned += removed;
      if (options.keep_trace) fit.loglik_trace.clear();
      prev = -std::numeric_limits<double>::infinity();
    }
  }

  std::vector<double> resp;
  if (options.keep_responsibilities) e_step(yc, p, resp);
  for (double& mu : p.mu) mu += center;
  fit.k = p.size();
  fit.weights = std::move(p.w);
  fit.means = std::move(p.mu);
  fit.variances = std::move(p.var);
  if (options.keep_responsibilities) fit.responsibilities = std::move(resp);
  fit.bic = -2.0 * fit.loglik +
            static_cast<double>(fit.free_parameters()) * std::log(static_cast<double>(fit.sample_size));
  sort_components(fit);
  return fit;
}

MixtureFit em_fit(std::span<const double> y, std::size_t k, std::uint64_t seed, std::size_t restarts,
                  const EmOptions& options) {
  const InitialMixture base = quantile_init(y, k);
  const double jitter = std::sqrt(stats::variance(y)) / static_cast<double>(k);
  std::optional<MixtureFit> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(restarts, 1); ++r) {
    InitialMixture init = base;
    if (r > 0 && jitter > 0.0) {
      Rng rng(derive_seed(seed, kRestartStream, k, r));
      std::normal_distribution<double> gauss(0.0, jitter);
      for (double& mu : init.means) mu += gauss(rng);
    }
    MixtureFit fit = em_fit(y, init, options);
    if (!best || fit.loglik > best->loglik) best = std::move(fit);
  }
  return std::move(*best);
}

double log_likelihood(std::span<const double> y, std::span<const double> weights, std::span<const double> means,
                      std::span<const double> variances) {
  Params p{{weights.begin(), weights.end()}, {means.begin(), means.end()}, {variances.begin(), variances.end()}};
  std::vector<double> resp;
  return e_step(y, p, resp);
}

MixtureFit select_k(std::span<const double> y, std::size_t k_max, std::uint64_t seed, std::size_t restarts,
                    const EmOptions& options) {
  if (k_max == 0) throw std::invalid_argument("select_k: k_max must be >= 1");
  check_data(y);
  std::vector<double> sorted(y.begin(), y.end());
  std::sort(sorted.begin(), sorted.end());
  const auto distinct = static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());

  std::optional<MixtureFit> best;
  std::vector<double> bics;
  for (std::size_t k = 1; k <= k_max; ++k) {
    if (k > distinct) {
      bics.push_back(std::numeric_limits<double>::infinity());
      continue;
    }
    MixtureFit fit = em_fit(y, k, seed, restarts, options);
    bics.push_back(fit.bic);
    if (!best || fit.bic < best->bic) best = std::move(fit);
  }
  best->candidate_bic = std::move(bics);
  return std::move(*best);
}

std::size_t k_max_from_graph(const WeightedDag& dag, std::size_t i, std::size_t j) {
  return common_ancestors(dag, i, j).size() + 1;
}

std::string to_string(Method m) {
  switch (m) {
    case Method::min: return "min";
    case Method::gmm: return "gmm";
    case Method::qp: return "qp";
  }
  return "?";
}

EstimateReport min_estimator(const DifferenceSample& y) {
  if (y.values.empty()) throw estimation_error("min estimator needs at least one observation");
  EstimateReport rep;
  rep.i = y.i;
  rep.j = y.j;
  rep.method = Method::min;
  rep.estimate = *std::min_element(y.values.begin(), y.values.end());
  return rep;
}

EstimateReport smallest_peak(const MixtureFit& fit, double weight_floor) {
  std::optional<std::size_t> pick;
  for (std::size_t m = 0; m < fit.k; ++m) {
    if (fit.weights[m] < weight_floor) continue;
    if (!pick || fit.means[m] < fit.means[*pick]) pick = m;
  }
  if (!pick) throw estimation_error("no mixture component clears the weight floor");
  EstimateReport rep;
  rep.method = Method::gmm;
  rep.estimate = fit.means[*pick];
  rep.chosen_k = fit.k;
  rep.component_weight = fit.weights[*pick];
  rep.component_variance = fit.variances[*pick];
  for (std::size_t m = 0; m < fit.k; ++m) {
    if (fit.weights[m] < weight_floor && fit.means[m] < fit.means[*pick]) {
      rep.flags.push_back("lighter_component_below_floor");
      break;
    }
  }
  if (!fit.converged) rep.flags.push_back("em_not_converged");
  return rep;
}

void require_continuous(std::span<const double> y) {
  check_data(y);
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it;
  const double tol = kTieTolerance * (1.0 + std::max(std::abs(lo), std::abs(*hi_it)));
  if (std::count_if(y.begin(), y.end(), [&](double v) { return v - lo <= tol; }) > 1) {
    throw estimation_error("the minimum is attained more than once; the data look noise-free, use the min estimator");
  }
}

GmmEstimate estimate_gmm(const DifferenceSample& y, const GmmOptions& options) {
  require_continuous(y.values);
  GmmEstimate out;
  out.fit = select_k(y.values, options.k_max, options.seed, options.restarts, options.em);
  out.report = smallest_peak(out.fit, options.weight_floor);
  out.report.i = y.i;
  out.report.j = y.j;
  if (out.fit.k == options.k_max && options.k_max > 1) out.report.flags.push_back("k_at_k_max");
  return out;
}

VarianceCheck estimator_variance_check(const WeightedDag& dag, const InnovationSpec& innovation,
                                       const NoiseSpec& noise, std::size_t i, std::size_t j, std::size_t trials,
                                       std::size_t n_samples, std::uint64_t seed, const GmmOptions& options,
                                       NoiseFeed feed) {
  const auto anc = ancestors(dag, j);
  if (!std::binary_search(anc.begin(), anc.end(), i)) {
    throw std::invalid_argument("estimator_variance_check: i must be an ancestor of j");
  }
  noise.validate(dag.size());
  if (!(noise.sigmas[i] > 0.0 && noise.sigmas[j] > 0.0)) {
    throw std::invalid_argument("estimator_variance_check: needs positive noise at i and j");
  }
  if (trials < 2) throw std::invalid_argument("estimator_variance_check: needs at least two trials");

  const auto ks = tropical::kleene_star(dag.weight_matrix());
  VarianceCheck out;
  out.trials = trials;
  out.truth = ks.closure(i, j).value();
  out.expected_variance = noise.sigmas[i] * noise.sigmas[i] + noise.sigmas[j] * noise.sigmas[j];
  double comp_var = 0.0;
  for (std::size_t t = 0; t < trials; ++t) {
    const std::uint64_t s = derive_seed(seed, kTrialStream, t);
    const SimulationOptions sim{feed, 1};
    const SampleSet noisy = simulate(dag, innovation, noise, n_samples, s, sim);
    GmmOptions opts = options;
    opts.seed = derive_seed(options.seed, kTrialStream, t);
    const auto est = estimate_gmm(differences(noisy, i, j), opts);
    out.estimates.push_back(est.report.estimate);
    comp_var += *est.report.component_variance;

    const SampleSet clean = simulate(dag, innovation, NoiseSpec::none(dag.size()), n_samples, s, sim);
    const auto y0 = differences(clean, i, j).values;
    const auto winner = static_cast<std::size_t>(std::min_element(y0.begin(), y0.end()) - y0.begin());
    const auto eps = replay_noise(noisy);
    out.renoised.push_back(y0[winner] + eps[winner * dag.size() + j] - eps[winner * dag.size() + i]);
  }
  out.mean = stats::mean(out.estimates);
  out.variance = stats::sample_variance(out.estimates);
  out.mean_component_variance = comp_var / static_cast<double>(trials);
  out.renoised_mean = stats::mean(out.renoised);
  out.renoised_variance = stats::sample_variance(out.renoised);
  return out;
}

}  // namespace mlbn::gmm
