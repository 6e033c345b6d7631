#include "mlbn/presets.hpp"

#include <stdexcept>

namespace mlbn::presets {
namespace {

// 1-based edge list to a 0-based graph.
WeightedDag from_one_based(std::size_t n, std::vector<Edge> edges) {
  for (Edge& e : edges) {
    e.i -= 1;
    e.j -= 1;
  }
  return WeightedDag(n, std::move(edges));
}

}  // namespace

WeightedDag four_node(double w12, double w13, double w23, double w24, double w34) {
  return from_one_based(4, {{1, 2, w12}, {1, 3, w13}, {2, 3, w23}, {2, 4, w24}, {3, 4, w34}});
}

WeightedDag gmm_example() { return from_one_based(4, {{1, 4, 3.0}, {2, 4, 1.5}, {3, 4, 2.0}}); }

WeightedDag triangle(double w12, double w23, double w13) {
  return from_one_based(3, {{1, 2, w12}, {2, 3, w23}, {1, 3, w13}});
}

std::vector<Edge> ten_node_weights() {
  // ω_13 = 4 and ω_23 = 2 match the documented marginal boundaries, ω_67 = -1
  // the inactivation example; the remaining weights are configuration choices.
  return {
      {1, 2, 1.0},  {1, 3, 4.0}, {2, 3, 2.0}, {2, 4, 1.0}, {3, 4, 0.5}, {7, 3, 1.0},
      {7, 8, 0.5},  {8, 4, 1.0}, {5, 7, 0.5}, {6, 7, -1.0}, {7, 9, 1.0},
  };
}

WeightedDag ten_node() { return from_one_based(10, ten_node_weights()); }

WeightedDag ten_node_tuning() {
  auto edges = ten_node_weights();
  for (Edge& e : edges)
    if (e.i == 2 && e.j == 3) e.omega = -0.5;
  return from_one_based(10, std::move(edges));
}

WeightedDag competing_parents(double target, double competitor) {
  return from_one_based(3, {{1, 3, target}, {2, 3, competitor}});
}

std::vector<std::string> names() {
  return {"gmm-example", "four-node", "ten-node", "ten-node-tuning", "triangle-masked", "competing-parents"};
}

WeightedDag by_name(std::string_view name) {
  if (name == "gmm-example") return gmm_example();
  if (name == "four-node") return four_node(1.0, 1.5, 1.0, 2.0, 0.5);
  if (name == "ten-node") return ten_node();
  if (name == "ten-node-tuning") return ten_node_tuning();
  if (name == "triangle-masked") return triangle(1.0, 1.0, 1.5);
  if (name == "competing-parents") return competing_parents(0.0, 3.0);
  throw std::invalid_argument("unknown preset '" + std::string(name) + "'");
}

}  // namespace mlbn::presets
