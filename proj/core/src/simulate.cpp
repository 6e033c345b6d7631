#include "mlbn/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "mlbn/error.hpp"
#include "parallel.hpp"

namespace mlbn {
namespace {

enum Stream : std::uint64_t { kInnovationStream = 1, kNoiseStream = 2 };

}  // namespace

void InnovationSpec::validate() const {
  if (!(beta > 0.0) || !std::isfinite(beta)) throw std::invalid_argument("Frechet scale beta must be > 0");
  if (!(xi > 0.0) || !std::isfinite(xi)) throw std::invalid_argument("Frechet shape xi must be > 0");
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("Frechet location alpha must be >= 0 so that log Z stays finite");
  }
}

double frechet_quantile(const InnovationSpec& spec, double u) {
  if (!(u > 0.0 && u < 1.0)) throw std::invalid_argument("frechet_quantile: u must lie in (0,1)");
  return spec.alpha + spec.beta * std::pow(-std::log(u), -1.0 / spec.xi);
}

double frechet_cdf(const InnovationSpec& spec, double z) {
  if (z <= spec.alpha) return 0.0;
  return std::exp(-std::pow((z - spec.alpha) / spec.beta, -spec.xi));
}

double sample_frechet(const InnovationSpec& spec, Rng& rng) { return frechet_quantile(spec, open_uniform(rng)); }

NoiseSpec NoiseSpec::uniform(std::size_t n, double sigma) { return NoiseSpec{std::vector<double>(n, sigma)}; }

bool NoiseSpec::is_noise_free() const {
  return std::all_of(sigmas.begin(), sigmas.end(), [](double s) { return s == 0.0; });
}

void NoiseSpec::validate(std::size_t n) const {
  if (sigmas.size() != n) {
    throw std::invalid_argument("noise spec has " + std::to_string(sigmas.size()) + " sigmas for " +
                                std::to_string(n) + " vertices");
  }
  for (double s : sigmas)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("noise sigmas must be finite and >= 0");
}

SampleSet::SampleSet(std::size_t rows, std::size_t cols, std::vector<double> log_x,
                     std::optional<std::vector<std::uint8_t>> provenance, std::optional<SampleMeta> meta)
    : rows_(rows), cols_(cols), log_x_(std::move(log_x)), provenance_(std::move(provenance)), meta_(std::move(meta)) {
  if (log_x_.size() != rows_ * cols_) throw std::invalid_argument("sample table size does not match N x n");
  if (provenance_ && provenance_->size() != rows_ * cols_) {
    throw std::invalid_argument("provenance table size does not match N x n");
  }
  for (double v : log_x_)
    if (!std::isfinite(v)) throw data_error("sample table contains a non-finite value");
}

std::uint8_t SampleSet::provenance(std::size_t row, std::size_t v) const {
  if (!provenance_) throw data_error("sample set has no provenance channel");
  return (*provenance_)[row * cols_ + v];
}

SampleSet simulate(const WeightedDag& dag, const InnovationSpec& innovation, const NoiseSpec& noise,
                   std::size_t n_samples, std::uint64_t seed, const SimulationOptions& options) {
  innovation.validate();
  const std::size_t n = dag.size();
  noise.validate(n);
  if (n_samples == 0) throw std::invalid_argument("simulate: N must be >= 1");
  if (n > kMaxProvenanceVertices) throw std::invalid_argument("simulate: at most 255 vertices are supported");

  std::vector<double> log_x(n_samples * n);
  std::vector<std::uint8_t> prov(n_samples * n);
  const std::size_t blocks = (n_samples + kBlockRows - 1) / kBlockRows;

  detail::parallel_for(blocks, options.workers, [&](std::size_t b) {
    const std::size_t r0 = b * kBlockRows;
    const std::size_t r1 = std::min(n_samples, r0 + kBlockRows);
    const std::size_t rows = r1 - r0;
    // Pre-noise values of this block, vertex-major.
    std::vector<double> clean(rows * n);
    for (std::size_t j : dag.topo_order()) {
      Rng innov_rng(derive_seed(seed, kInnovationStream, j, b));
      Rng noise_rng(derive_seed(seed, kNoiseStream, j, b));
      std::normal_distribution<double> gauss(0.0, 1.0);
      const auto parents = dag.parents(j);
      for (std::size_t r = 0; r < rows; ++r) {
        const double log_z = std::log(sample_frechet(innovation, innov_rng));
        const double eps = noise.sigmas[j] * gauss(noise_rng);
        // Terms in ascending vertex order with strict '>' so ties go to the lowest index.
        double best = -std::numeric_limits<double>::infinity();
        std::uint8_t arg = kProvenanceSelf;
        bool self_done = false;
        auto consider = [&](double term, std::uint8_t who) {
          if (term > best) {
            best = term;
            arg = who;
          }
        };
        for (const Parent& p : parents) {
          if (!self_done && j < p.vertex) {
            consider(log_z, kProvenanceSelf);
            self_done = true;
          }
          const double parent_value = options.feed == NoiseFeed::noisy ? log_x[(r0 + r) * n + p.vertex]
                                                                       : clean[p.vertex * rows + r];
          consider(p.omega + parent_value, static_cast<std::uint8_t>(p.vertex));
        }
        if (!self_done) consider(log_z, kProvenanceSelf);
        clean[j * rows + r] = best;
        log_x[(r0 + r) * n + j] = best + eps;
        prov[(r0 + r) * n + j] = arg;
      }
    }
  });

  SampleMeta meta{seed, innovation, noise, options.feed, dag.hash(), kBlockRows};
  return SampleSet(n_samples, n, std::move(log_x), std::move(prov), std::move(meta));
}

std::vector<double> replay_noise(const SampleSet& samples) {
  if (!samples.meta()) throw data_error("replay_noise: sample set has no generation metadata");
  const SampleMeta& meta = *samples.meta();
  const std::size_t n = samples.cols();
  const std::size_t block_rows = meta.block_rows ? meta.block_rows : kBlockRows;
  meta.noise.validate(n);
  std::vector<double> eps(samples.rows() * n);
  for (std::size_t r0 = 0, b = 0; r0 < samples.rows(); r0 += block_rows, ++b) {
    const std::size_t r1 = std::min(samples.rows(), r0 + block_rows);
    for (std::size_t j = 0; j < n; ++j) {
      Rng noise_rng(derive_seed(meta.seed, kNoiseStream, j, b));
      std::normal_distribution<double> gauss(0.0, 1.0);
      for (std::size_t r = r0; r < r1; ++r) eps[r * n + j] = meta.noise.sigmas[j] * gauss(noise_rng);
    }
  }
  return eps;
}

void check_graph(const SampleSet& samples, const WeightedDag& dag) {
  if (samples.cols() != dag.size()) throw data_error("sample set and graph have different vertex counts");
  if (samples.meta() && samples.meta()->graph_hash != 0 && samples.meta()->graph_hash != dag.hash()) {
    throw data_error("sample set was generated on a different graph (graph hash " + dag.hash_hex() +
                     " does not match the sidecar)");
  }
}

DifferenceSample differences(const SampleSet& samples, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("differences: i and j must differ");
  if (i >= samples.cols() || j >= samples.cols()) throw std::out_of_range("differences: vertex out of range");
  DifferenceSample out{i, j, std::vector<double>(samples.rows())};
  for (std::size_t r = 0; r < samples.rows(); ++r) out.values[r] = samples.log_x(r, j) - samples.log_x(r, i);
  return out;
}

}  // namespace mlbn
