#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "mlbn/dag.hpp"
#include "mlbn/random.hpp"

namespace mlbn {

/// Fréchet(α, β, ξ) innovation law. α >= 0 keeps log Z finite.
struct InnovationSpec {
  double alpha = 0.0;
  double beta = 1.0;
  double xi = 1.0;

  /// Throws std::invalid_argument when β <= 0, ξ <= 0 or α < 0.
  void validate() const;
  friend bool operator==(const InnovationSpec&, const InnovationSpec&) = default;
};

/// Inverse CDF: α + β·(-ln u)^(-1/ξ), u in (0,1).
double frechet_quantile(const InnovationSpec& spec, double u);
double frechet_cdf(const InnovationSpec& spec, double z);
double sample_frechet(const InnovationSpec& spec, Rng& rng);

/// Per-vertex standard deviations of ε_j = log E_j.
struct NoiseSpec {
  std::vector<double> sigmas;

  static NoiseSpec uniform(std::size_t n, double sigma);
  static NoiseSpec none(std::size_t n) { return uniform(n, 0.0); }
  bool is_noise_free() const;
  void validate(std::size_t n) const;
  friend bool operator==(const NoiseSpec&, const NoiseSpec&) = default;
};

/// Which value of a parent enters a child's structural equation.
enum class NoiseFeed {
  /// The parent's observed (noisy) log value; the literal recursion.
  noisy,
  /// The parent's pre-noise value; noise acts as observation error only.
  pre_noise,
};

/// Provenance code for "the vertex's own innovation attained the max".
inline constexpr std::uint8_t kProvenanceSelf = 0xFF;
/// Provenance is one byte per cell, so vertex ids must stay below the sentinel.
inline constexpr std::size_t kMaxProvenanceVertices = kProvenanceSelf;

struct SampleMeta {
  std::uint64_t seed = 0;
  InnovationSpec innovation;
  NoiseSpec noise;
  NoiseFeed feed = NoiseFeed::noisy;
  std::uint64_t graph_hash = 0;
  /// Rows generated per independent block of substreams.
  std::size_t block_rows = 0;

  friend bool operator==(const SampleMeta&, const SampleMeta&) = default;
};

/// N×n table of log-space observations with optional provenance and metadata.
class SampleSet {
public:
  SampleSet() = default;
  SampleSet(std::size_t rows, std::size_t cols, std::vector<double> log_x,
            std::optional<std::vector<std::uint8_t>> provenance = std::nullopt,
            std::optional<SampleMeta> meta = std::nullopt);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double log_x(std::size_t row, std::size_t v) const { return log_x_[row * cols_ + v]; }
  std::span<const double> row(std::size_t r) const { return {log_x_.data() + r * cols_, cols_}; }
  const std::vector<double>& values() const noexcept { return log_x_; }

  bool has_provenance() const noexcept { return provenance_.has_value(); }
  /// Parent vertex (0-based) whose term attained the pre-noise max, or kProvenanceSelf.
  std::uint8_t provenance(std::size_t row, std::size_t v) const;
  const std::optional<std::vector<std::uint8_t>>& provenance_table() const noexcept { return provenance_; }

  const std::optional<SampleMeta>& meta() const noexcept { return meta_; }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> log_x_;
  std::optional<std::vector<std::uint8_t>> provenance_;
  std::optional<SampleMeta> meta_;
};

struct SimulationOptions {
  NoiseFeed feed = NoiseFeed::noisy;
  /// 0 picks std::thread::hardware_concurrency().
  unsigned workers = 0;
};

inline constexpr std::size_t kBlockRows = 4096;

/// Forward simulation in topological order:
///   log X_j = max(max_{i∈pa(j)} ω_ij + log X_i, log Z_j) + ε_j.
/// Rows are produced in blocks of kBlockRows; each (block, vertex) owns an
/// innovation substream and a noise substream derived from `seed`, so the
/// output is bitwise reproducible and independent of the worker count.
SampleSet simulate(const WeightedDag& dag, const InnovationSpec& innovation, const NoiseSpec& noise,
                   std::size_t n_samples, std::uint64_t seed, const SimulationOptions& options = {});

/// Regenerates the ε table (N×n) of a simulated set from its metadata.
std::vector<double> replay_noise(const SampleSet& samples);

/// Throws data_error when the set carries metadata for a different graph.
void check_graph(const SampleSet& samples, const WeightedDag& dag);

struct DifferenceSample {
  std::size_t i;
  std::size_t j;
  std::vector<double> values;
};

/// Y_ij = log X_j - log X_i row by row. Throws std::invalid_argument when i == j.
DifferenceSample differences(const SampleSet& samples, std::size_t i, std::size_t j);

}  // namespace mlbn
