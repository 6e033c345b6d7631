#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "mlbn/dag.hpp"
#include "mlbn/error.hpp"
#include "mlbn/network.hpp"
#include "mlbn/presets.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/tropical.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace mlbn;
using mlbn::support::Gen;

namespace {

std::set<std::size_t> ancestors_oracle(const WeightedDag& dag, std::size_t v) {
  std::set<std::size_t> out;
  for (std::size_t u = 0; u < dag.size(); ++u)
    if (u != v && support::max_path(dag, u, v) != support::kNegInf) out.insert(u);
  return out;
}

}  // namespace

TEST(WeightedDag, RejectsBadEdgeLists) {
  EXPECT_THROW(WeightedDag(0, {}), std::invalid_argument);
  EXPECT_THROW(WeightedDag(2, {{0, 2, 1.0}}), std::invalid_argument);
  EXPECT_THROW(WeightedDag(2, {{1, 1, 1.0}}), std::invalid_argument);
  EXPECT_THROW(WeightedDag(2, {{0, 1, 1.0}, {0, 1, 2.0}}), std::invalid_argument);
  EXPECT_THROW(WeightedDag(2, {{0, 1, std::nan("")}}), std::invalid_argument);
  EXPECT_THROW(WeightedDag(3, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 0, 1.0}}), std::invalid_argument);
}

TEST(WeightedDag, TopoOrderPutsEveryEdgeForward) {
  Gen g(21);
  for (int trial = 0; trial < 100; ++trial) {
    const auto dag = g.dag(g.index(1, 12), 0.4);
    std::vector<std::size_t> pos(dag.size());
    const auto& order = dag.topo_order();
    ASSERT_EQ(order.size(), dag.size());
    for (std::size_t k = 0; k < order.size(); ++k) pos[order[k]] = k;
    for (const Edge& e : dag.edges()) EXPECT_LT(pos[e.i], pos[e.j]);
  }
}

TEST(WeightedDag, ParentsAndChildrenAgreeWithEdges) {
  const auto dag = presets::ten_node();
  std::size_t count = 0;
  for (std::size_t j = 0; j < dag.size(); ++j) {
    const auto pa = dag.parents(j);
    EXPECT_TRUE(std::is_sorted(pa.begin(), pa.end(), [](auto& a, auto& b) { return a.vertex < b.vertex; }));
    for (const Parent& p : pa) {
      EXPECT_EQ(dag.weight(p.vertex, j), p.omega);
      const auto ch = dag.children(p.vertex);
      EXPECT_NE(std::find(ch.begin(), ch.end(), j), ch.end());
    }
    count += pa.size();
  }
  EXPECT_EQ(count, dag.edges().size());
  EXPECT_FALSE(dag.has_edge(3, 1));
}

TEST(WeightedDag, HashDependsOnWeightsNotEdgeOrder) {
  const WeightedDag a(3, {{0, 1, 1.0}, {1, 2, 2.0}});
  const WeightedDag b(3, {{1, 2, 2.0}, {0, 1, 1.0}});
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_NE(a.hash(), a.with_weight(0, 1, 1.0000001).hash());
  EXPECT_EQ(a.hash_hex().size(), 16u);
  EXPECT_THROW(a.with_weight(0, 2, 1.0), std::invalid_argument);
}

TEST(WeightedDag, WeightMatrixLayout) {
  const auto m = presets::gmm_example().weight_matrix();
  EXPECT_EQ(m(0, 0), tropical::Value::zero());
  EXPECT_EQ(m(1, 3).value(), 1.5);
  EXPECT_TRUE(m(3, 1).is_neg_inf());
}

TEST(Presets, ByNameCoversEveryName) {
  for (const auto& name : presets::names()) EXPECT_NO_THROW(presets::by_name(name)) << name;
  EXPECT_THROW(presets::by_name("nope"), std::invalid_argument);
  const auto g = presets::gmm_example();
  EXPECT_EQ(g.weight(0, 3), 3.0);
  EXPECT_EQ(g.weight(1, 3), 1.5);
  EXPECT_EQ(g.weight(2, 3), 2.0);
  EXPECT_EQ(presets::ten_node_tuning().weight(1, 2), -0.5);
}

TEST(Ancestors, MatchReachabilityOracle) {
  Gen g(22);
  for (int trial = 0; trial < 60; ++trial) {
    const auto dag = g.dag(g.index(1, 9), 0.35);
    for (std::size_t v = 0; v < dag.size(); ++v) {
      const auto a = ancestors(dag, v);
      EXPECT_EQ(std::set<std::size_t>(a.begin(), a.end()), ancestors_oracle(dag, v));
      EXPECT_TRUE(std::is_sorted(a.begin(), a.end()));
      const auto ext = extended_ancestors(dag, v);
      EXPECT_EQ(ext.size(), a.size() + 1);
    }
  }
  EXPECT_THROW(ancestors(presets::gmm_example(), 4), std::out_of_range);
}

TEST(Atoms, GmmExamplePairs) {
  const auto dag = presets::gmm_example();
  const auto ks = tropical::kleene_star(dag.weight_matrix());
  const auto a = atom_set(dag, ks, 1, 3);
  ASSERT_EQ(a.atoms.size(), 1u);
  EXPECT_EQ(a.atoms[0].location, 1.5);
  EXPECT_EQ(a.atoms[0].ancestors, std::vector<std::size_t>{1});
  EXPECT_TRUE(atom_set(dag, ks, 0, 1).atoms.empty());
  EXPECT_THROW(atom_set(dag, ks, 2, 2), std::invalid_argument);
}

TEST(Atoms, LocationsFromClosureOracle) {
  Gen g(23);
  for (int trial = 0; trial < 60; ++trial) {
    const auto dag = g.dag(g.index(2, 8), 0.5);
    const auto ks = tropical::kleene_star(dag.weight_matrix());
    const std::size_t i = g.index(0, dag.size() - 1);
    std::size_t j = g.index(0, dag.size() - 2);
    if (j >= i) ++j;
    const auto set = atom_set(dag, ks, i, j);
    std::size_t total = 0;
    for (std::size_t k = 0; k < dag.size(); ++k) {
      const double to_i = support::max_path(dag, k, i), to_j = support::max_path(dag, k, j);
      if (to_i == support::kNegInf || to_j == support::kNegInf) continue;
      ++total;
      const double loc = to_j - to_i;
      const bool found = std::any_of(set.atoms.begin(), set.atoms.end(), [&](const Atom& a) {
        return std::abs(a.location - loc) <= 1e-9 * (1 + std::abs(loc)) &&
               std::find(a.ancestors.begin(), a.ancestors.end(), k) != a.ancestors.end();
      });
      EXPECT_TRUE(found) << "ancestor " << k;
    }
    EXPECT_EQ(set.total_multiplicity(), total);
    for (std::size_t a = 1; a < set.atoms.size(); ++a) EXPECT_LT(set.atoms[a - 1].location, set.atoms[a].location);
  }
}

TEST(Occupancy, CountsProvenanceAndFlagsRareEdges) {
  const auto dag = presets::competing_parents(0.0, 3.0);
  const auto s = simulate(dag, {}, NoiseSpec::none(3), 5000, 3);
  const auto occ = edge_occupancy(dag, s);
  ASSERT_EQ(occ.size(), 2u);
  double total = innovation_fraction(s, 2);
  for (const auto& o : occ) {
    EXPECT_EQ(o.sample_size, 5000u);
    total += o.fraction;
  }
  EXPECT_NEAR(total, 1.0, 1e-12);
  // Z1, Z2, Z3 iid standard Fréchet: P(path 1→3 wins) = 1 / (1 + e^3 + 1).
  const double p = 1.0 / (2.0 + std::exp(3.0));
  const auto& target = occ[0].i == 0 ? occ[0] : occ[1];
  EXPECT_NEAR(target.fraction, p, 4 * std::sqrt(p * (1 - p) / 5000));
  const auto flags = inactivation_flags(occ);
  EXPECT_TRUE(flags[occ[0].i == 0 ? 0 : 1]);
}

TEST(Occupancy, NeedsProvenanceAndMatchingGraph) {
  const auto dag = presets::gmm_example();
  const auto s = simulate(dag, {}, NoiseSpec::none(4), 10, 1);
  const SampleSet bare(s.rows(), s.cols(), s.values());
  EXPECT_THROW(edge_occupancy(dag, bare), data_error);
  EXPECT_THROW(edge_occupancy(presets::four_node(1, 1, 1, 1, 1), s), data_error);
  EXPECT_THROW(edge_occupancy(dag.with_weight(0, 3, 2.0), s), data_error);
}
