#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mlbn/tropical.hpp"

namespace mlbn {

/// Directed edge i→j carrying a log-scale weight ω_ij. Vertices are 0-based.
struct Edge {
  std::size_t i;
  std::size_t j;
  double omega;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Parent {
  std::size_t vertex;
  double omega;
};

/// Weighted DAG of a max-linear Bayesian network. Immutable after construction.
///
/// The constructor validates the edge list (range, self-loops, duplicates,
/// finite weights, acyclicity) and throws std::invalid_argument otherwise.
class WeightedDag {
public:
  WeightedDag() = default;
  WeightedDag(std::size_t n, std::vector<Edge> edges);

  std::size_t size() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  /// Parents of j sorted by vertex index.
  std::span<const Parent> parents(std::size_t j) const;
  std::span<const std::size_t> children(std::size_t i) const;
  const std::vector<std::size_t>& topo_order() const noexcept { return topo_; }

  std::optional<double> weight(std::size_t i, std::size_t j) const;
  bool has_edge(std::size_t i, std::size_t j) const { return weight(i, j).has_value(); }

  /// ω as a max-plus matrix: 0 diagonal, ω_ij on edges, -inf elsewhere.
  tropical::Matrix weight_matrix() const;

  /// Same vertex set and edge list with one weight replaced.
  WeightedDag with_weight(std::size_t i, std::size_t j, double omega) const;

  /// Stable 64-bit FNV-1a hash of n and the (sorted) edge list, weights bitwise.
  std::uint64_t hash() const;
  std::string hash_hex() const;

private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Parent>> parents_;
  std::vector<std::vector<std::size_t>> children_;
  std::vector<std::size_t> topo_;
};

}  // namespace mlbn
