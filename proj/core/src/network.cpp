#include "mlbn/network.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "mlbn/error.hpp"
#include "mlbn/simulate.hpp"

namespace mlbn {

std::vector<std::size_t> ancestors(const WeightedDag& dag, std::size_t v) {
  if (v >= dag.size()) throw std::out_of_range("vertex " + std::to_string(v + 1) + " out of range");
  std::vector<bool> seen(dag.size(), false);
  std::vector<std::size_t> stack{v};
  while (!stack.empty()) {
    const std::size_t u = stack.back();
    stack.pop_back();
    for (const Parent& p : dag.parents(u)) {
      if (!seen[p.vertex]) {
        seen[p.vertex] = true;
        stack.push_back(p.vertex);
      }
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t u = 0; u < dag.size(); ++u)
    if (seen[u]) out.push_back(u);
  return out;
}

std::vector<std::size_t> extended_ancestors(const WeightedDag& dag, std::size_t v) {
  auto out = ancestors(dag, v);
  out.insert(std::upper_bound(out.begin(), out.end(), v), v);
  return out;
}

std::vector<std::size_t> common_ancestors(const WeightedDag& dag, std::size_t i, std::size_t j) {
  const auto ai = extended_ancestors(dag, i);
  const auto aj = extended_ancestors(dag, j);
  std::vector<std::size_t> out;
  std::set_intersection(ai.begin(), ai.end(), aj.begin(), aj.end(), std::back_inserter(out));
  return out;
}

std::size_t AtomSet::total_multiplicity() const {
  std::size_t total = 0;
  for (const Atom& a : atoms) total += a.multiplicity();
  return total;
}

AtomSet atom_set(const WeightedDag& dag, const tropical::KleeneStar& ks, std::size_t i, std::size_t j) {
  if (i == j) throw std::invalid_argument("atom_set: i and j must differ");
  if (ks.closure.size() != dag.size()) throw std::invalid_argument("atom_set: Kleene star does not match graph");
  AtomSet out{i, j, {}};
  for (std::size_t k : common_ancestors(dag, i, j)) {
    const double loc = ks.closure(k, j).value() - ks.closure(k, i).value();
    out.atoms.push_back({loc, {k}});
  }
  std::sort(out.atoms.begin(), out.atoms.end(),
            [](const Atom& a, const Atom& b) { return a.location < b.location; });
  std::vector<Atom> merged;
  for (Atom& a : out.atoms) {
    if (!merged.empty() &&
        std::abs(a.location - merged.back().location) <= kAtomMergeTolerance * (1.0 + std::abs(a.location))) {
      merged.back().ancestors.push_back(a.ancestors.front());
      std::sort(merged.back().ancestors.begin(), merged.back().ancestors.end());
    } else {
      merged.push_back(std::move(a));
    }
  }
  out.atoms = std::move(merged);
  return out;
}

std::vector<EdgeOccupancy> edge_occupancy(const WeightedDag& dag, const SampleSet& samples) {
  if (!samples.has_provenance()) {
    throw data_error("edge occupancy needs the provenance channel; load the sample sidecar or re-simulate");
  }
  if (samples.cols() != dag.size()) throw data_error("sample set and graph have different vertex counts");
  check_graph(samples, dag);
  std::vector<EdgeOccupancy> out;
  const std::size_t n = samples.rows();
  for (const Edge& e : dag.edges()) {
    std::size_t count = 0;
    for (std::size_t r = 0; r < n; ++r)
      if (samples.provenance(r, e.j) == e.i) ++count;
    out.push_back({e.i, e.j, count, n, n ? static_cast<double>(count) / static_cast<double>(n) : 0.0});
  }
  return out;
}

double innovation_fraction(const SampleSet& samples, std::size_t j) {
  if (!samples.has_provenance()) throw data_error("innovation fraction needs the provenance channel");
  std::size_t count = 0;
  for (std::size_t r = 0; r < samples.rows(); ++r)
    if (samples.provenance(r, j) == kProvenanceSelf) ++count;
  return samples.rows() ? static_cast<double>(count) / static_cast<double>(samples.rows()) : 0.0;
}

std::vector<bool> inactivation_flags(const std::vector<EdgeOccupancy>& occ, double threshold) {
  std::vector<bool> out;
  out.reserve(occ.size());
  for (const auto& o : occ) out.push_back(o.fraction < threshold);
  return out;
}

}  // namespace mlbn
