#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json.hpp>

#include "mlbn/dag.hpp"
#include "mlbn/experiment.hpp"
#include "mlbn/gmm.hpp"
#include "mlbn/network.hpp"
#include "mlbn/qp.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/tropical.hpp"

namespace mlbn::io {

using nlohmann::json;

/// {"n": int, "entries": [[...]]} with the string "-inf" for -inf.
json matrix_to_json(const tropical::Matrix& m);
/// Throws data_error on malformed input.
tropical::Matrix matrix_from_json(const json& j);

/// {"n": int, "edges": [{"i": int, "j": int, "omega": float}]}, vertices 1-based.
json graph_to_json(const WeightedDag& dag);
WeightedDag graph_from_json(const json& j);

WeightedDag read_graph(const std::filesystem::path& path);
tropical::Matrix read_matrix(const std::filesystem::path& path);
json read_json(const std::filesystem::path& path);
void write_json(const json& j, const std::filesystem::path& path);

// Outputs use 1-based vertex ids throughout.
json to_json(const AtomSet& atoms);
json to_json(const std::vector<EdgeOccupancy>& occ, double threshold);
json to_json(const std::vector<tropical::EdgeClass>& classes);
json to_json(const tropical::PolytropeFacets& facets);
json to_json(const gmm::MixtureFit& fit);
json to_json(const gmm::EstimateReport& report);
json to_json(const qp::QpSolution& sol, bool include_deltas = false);
json to_json(const qp::KktReport& kkt);
json to_json(const qp::AutoTuneResult& tuned, bool include_deltas = false);
json to_json(const InnovationSpec& spec);
json to_json(const SampleMeta& meta);
SampleMeta meta_from_json(const json& j);

bench::ExperimentConfig config_from_json(const json& j, bench::Scenario scenario);
json to_json(const bench::ExperimentConfig& cfg);

}  // namespace mlbn::io
