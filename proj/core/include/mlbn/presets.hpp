#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "mlbn/dag.hpp"

namespace mlbn::presets {

/// Four-node graph with edges 1→2, 1→3, 2→3, 2→4, 3→4 (1-based).
WeightedDag four_node(double w12, double w13, double w23, double w24, double w34);

/// Star 1→4, 2→4, 3→4 with ω = 3, 1.5, 2.
WeightedDag gmm_example();

/// Triangle 1→2, 2→3, 1→3.
WeightedDag triangle(double w12, double w23, double w13);

/// Ten-node network: double triangle {1,2,3,4}, diamond {7,3,8,4}, Y-structure
/// {5,6,7,9} and the isolated vertex 10. Only a few weights are documented;
/// the rest are configuration defaults (see ten_node_weights()).
WeightedDag ten_node();

/// Ten-node network with ω_23 = -0.5, the scenario of the hyperplane tuning walkthrough.
WeightedDag ten_node_tuning();

/// Default 1-based edge list of the ten-node network.
std::vector<Edge> ten_node_weights();

/// Source i (1) and competitor k (2) feeding j (3): ω_13 = target, ω_23 = competitor.
/// Sweeping the competitor controls how often the max at 3 is attained through 1.
WeightedDag competing_parents(double target, double competitor);

/// Names accepted by by_name().
std::vector<std::string> names();

/// Throws std::invalid_argument for unknown names.
WeightedDag by_name(std::string_view name);

}  // namespace mlbn::presets
