#pragma once

#include <cstddef>
#include <vector>

#include "mlbn/dag.hpp"
#include "mlbn/tropical.hpp"

namespace mlbn {

class SampleSet;

/// All u with a path u⇝v, sorted. Throws std::out_of_range for bad v.
std::vector<std::size_t> ancestors(const WeightedDag& dag, std::size_t v);

/// ancestors(v) ∪ {v}, sorted.
std::vector<std::size_t> extended_ancestors(const WeightedDag& dag, std::size_t v);

/// Common extended ancestors of i and j, sorted.
std::vector<std::size_t> common_ancestors(const WeightedDag& dag, std::size_t i, std::size_t j);

struct Atom {
  double location;
  /// Common ancestors k producing this location; multiplicity is ancestors.size().
  std::vector<std::size_t> ancestors;

  std::size_t multiplicity() const noexcept { return ancestors.size(); }
};

/// Point masses of Y_ij = log X_j - log X_i in the noise-free model.
struct AtomSet {
  std::size_t i;
  std::size_t j;
  /// Distinct locations, ascending.
  std::vector<Atom> atoms;

  std::size_t total_multiplicity() const;
};

/// Locations closer than this (relative to 1 + |location|) are merged.
inline constexpr double kAtomMergeTolerance = 1e-9;

/// Atoms at ω*(k,j) - ω*(k,i) for every common extended ancestor k.
/// Throws std::invalid_argument when i == j.
AtomSet atom_set(const WeightedDag& dag, const tropical::KleeneStar& ks, std::size_t i, std::size_t j);

struct EdgeOccupancy {
  std::size_t i;
  std::size_t j;
  std::size_t count;
  std::size_t sample_size;
  double fraction;
};

/// Per edge i→j, the fraction of samples whose pre-noise max at j was attained
/// by ω_ij + log X_i. Requires the simulator's provenance channel
/// (throws data_error otherwise) and a sample set generated on this graph.
std::vector<EdgeOccupancy> edge_occupancy(const WeightedDag& dag, const SampleSet& samples);

/// Fraction of samples at vertex j whose max was attained by its own innovation.
double innovation_fraction(const SampleSet& samples, std::size_t j);

inline constexpr double kInactivationThreshold = 0.05;

/// true where the edge is approaching structural inactivation (fraction < threshold).
std::vector<bool> inactivation_flags(const std::vector<EdgeOccupancy>& occ,
                                     double threshold = kInactivationThreshold);

}  // namespace mlbn
