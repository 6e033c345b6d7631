#include "mlbn/dag.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <string>

namespace mlbn {

WeightedDag::WeightedDag(std::size_t n, std::vector<Edge> edges)
    : n_(n), edges_(std::move(edges)), parents_(n), children_(n) {
  if (n == 0) throw std::invalid_argument("graph needs at least one vertex");
  for (const Edge& e : edges_) {
    if (e.i >= n || e.j >= n) {
      throw std::invalid_argument("edge " + std::to_string(e.i + 1) + "->" + std::to_string(e.j + 1) +
                                  " out of range");
    }
    if (e.i == e.j) throw std::invalid_argument("self-loop at vertex " + std::to_string(e.i + 1));
    if (!std::isfinite(e.omega)) throw std::invalid_argument("edge weights must be finite");
    parents_[e.j].push_back({e.i, e.omega});
    children_[e.i].push_back(e.j);
  }
  for (std::size_t j = 0; j < n; ++j) {
    auto& p = parents_[j];
    std::sort(p.begin(), p.end(), [](const Parent& a, const Parent& b) { return a.vertex < b.vertex; });
    for (std::size_t k = 1; k < p.size(); ++k) {
      if (p[k].vertex == p[k - 1].vertex) {
        throw std::invalid_argument("duplicate edge " + std::to_string(p[k].vertex + 1) + "->" +
                                    std::to_string(j + 1));
      }
    }
    std::sort(children_[j].begin(), children_[j].end());
  }

  // Kahn's algorithm, smallest ready vertex first so the order is canonical.
  std::vector<std::size_t> indegree(n);
  for (std::size_t j = 0; j < n; ++j) indegree[j] = parents_[j].size();
  std::vector<std::size_t> ready;
  for (std::size_t v = 0; v < n; ++v)
    if (indegree[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    auto it = std::min_element(ready.begin(), ready.end());
    const std::size_t v = *it;
    ready.erase(it);
    topo_.push_back(v);
    for (std::size_t c : children_[v])
      if (--indegree[c] == 0) ready.push_back(c);
  }
  if (topo_.size() != n) throw std::invalid_argument("graph has a directed cycle");
}

std::span<const Parent> WeightedDag::parents(std::size_t j) const { return parents_.at(j); }

std::span<const std::size_t> WeightedDag::children(std::size_t i) const { return children_.at(i); }

std::optional<double> WeightedDag::weight(std::size_t i, std::size_t j) const {
  for (const Parent& p : parents_.at(j))
    if (p.vertex == i) return p.omega;
  return std::nullopt;
}

tropical::Matrix WeightedDag::weight_matrix() const {
  tropical::Matrix m = tropical::Matrix::identity(n_);
  for (const Edge& e : edges_) m(e.i, e.j) = tropical::Value(e.omega);
  return m;
}

WeightedDag WeightedDag::with_weight(std::size_t i, std::size_t j, double omega) const {
  std::vector<Edge> edges = edges_;
  auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.i == i && e.j == j; });
  if (it == edges.end()) throw std::invalid_argument("with_weight: no such edge");
  it->omega = omega;
  return WeightedDag(n_, std::move(edges));
}

std::uint64_t WeightedDag::hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&h](std::uint64_t x) {
    for (int b = 0; b < 8; ++b) {
      h ^= (x >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ULL;
    }
  };
  std::vector<Edge> sorted = edges_;
  std::sort(sorted.begin(), sorted.end(),
            [](const Edge& a, const Edge& b) { return a.i != b.i ? a.i < b.i : a.j < b.j; });
  feed(n_);
  for (const Edge& e : sorted) {
    feed(e.i);
    feed(e.j);
    feed(std::bit_cast<std::uint64_t>(e.omega));
  }
  return h;
}

std::string WeightedDag::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

}  // namespace mlbn
