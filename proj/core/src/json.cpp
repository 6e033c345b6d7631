#include "mlbn/json.hpp"

#include <cmath>
#include <fstream>

#include "mlbn/error.hpp"

namespace mlbn::io {
namespace {

json value_to_json(tropical::Value v) { return v.is_neg_inf() ? json("-inf") : json(v.value()); }

tropical::Value value_from_json(const json& j) {
  if (j.is_string()) {
    if (j.get<std::string>() == "-inf") return tropical::Value::neg_inf();
    throw data_error("matrix entry must be a number or \"-inf\", found \"" + j.get<std::string>() + "\"");
  }
  if (!j.is_number()) throw data_error("matrix entry must be a number or \"-inf\"");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw data_error("matrix entry must be finite or \"-inf\"");
  return tropical::Value(v);
}

// Optional<double> -> number or null.
json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Non-finite doubles serialize as strings so the document stays valid JSON.
json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

std::size_t vertex_from_json(const json& j, std::size_t n, const char* what) {
  if (!j.is_number_integer()) throw data_error(std::string(what) + " must be an integer vertex id");
  const auto v = j.get<long long>();
  if (v < 1 || static_cast<std::size_t>(v) > n) {
    throw data_error(std::string(what) + " = " + std::to_string(v) + " is outside 1.." + std::to_string(n));
  }
  return static_cast<std::size_t>(v - 1);
}

std::string feed_name(NoiseFeed f) { return f == NoiseFeed::noisy ? "noisy" : "pre_noise"; }

}  // namespace

json matrix_to_json(const tropical::Matrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    json row = json::array();
    for (std::size_t j = 0; j < m.size(); ++j) row.push_back(value_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return {{"n", m.size()}, {"entries", std::move(rows)}};
}

tropical::Matrix matrix_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("entries")) {
    throw data_error("matrix JSON needs the fields \"n\" and \"entries\"");
  }
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 1) throw data_error("matrix \"n\" must be a positive integer");
  const auto n = j["n"].get<std::size_t>();
  const json& rows = j["entries"];
  if (!rows.is_array() || rows.size() != n) throw data_error("matrix \"entries\" must have n rows");
  tropical::Matrix m(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (!rows[r].is_array() || rows[r].size() != n) {
      throw data_error("matrix row " + std::to_string(r + 1) + " must have n entries");
    }
    for (std::size_t c = 0; c < n; ++c) m(r, c) = value_from_json(rows[r][c]);
  }
  return m;
}

json graph_to_json(const WeightedDag& dag) {
  json edges = json::array();
  for (const Edge& e : dag.edges()) edges.push_back({{"i", e.i + 1}, {"j", e.j + 1}, {"omega", e.omega}});
  return {{"n", dag.size()}, {"edges", std::move(edges)}};
}

WeightedDag graph_from_json(const json& j) {
  if (!j.is_object() || !j.contains("n") || !j.contains("edges")) {
    throw data_error("graph JSON needs the fields \"n\" and \"edges\"");
  }
  if (!j["n"].is_number_integer() || j["n"].get<long long>() < 1) throw data_error("graph \"n\" must be a positive integer");
  const auto n = j["n"].get<std::size_t>();
  if (!j["edges"].is_array()) throw data_error("graph \"edges\" must be an array");
  std::vector<Edge> edges;
  for (const json& e : j["edges"]) {
    if (!e.is_object() || !e.contains("i") || !e.contains("j") || !e.contains("omega")) {
      throw data_error("each edge needs \"i\", \"j\" and \"omega\"");
    }
    if (!e["omega"].is_number() || !std::isfinite(e["omega"].get<double>())) {
      throw data_error("edge weight \"omega\" must be a finite number");
    }
    edges.push_back({vertex_from_json(e["i"], n, "edge i"), vertex_from_json(e["j"], n, "edge j"),
                     e["omega"].get<double>()});
  }
  try {
    return WeightedDag(n, std::move(edges));
  } catch (const std::invalid_argument& e) {
    throw data_error(std::string("invalid graph: ") + e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw data_error("malformed JSON in '" + path.string() + "': " + e.what());
  }
}

void write_json(const json& j, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot open '" + path.string() + "' for writing");
  out << j.dump(2) << '\n';
  if (!out) throw data_error("write failed for '" + path.string() + "'");
}

WeightedDag read_graph(const std::filesystem::path& path) { return graph_from_json(read_json(path)); }

tropical::Matrix read_matrix(const std::filesystem::path& path) { return matrix_from_json(read_json(path)); }

json to_json(const AtomSet& atoms) {
  json list = json::array();
  for (const Atom& a : atoms.atoms) {
    json anc = json::array();
    for (std::size_t k : a.ancestors) anc.push_back(k + 1);
    list.push_back({{"location", a.location}, {"ancestors", std::move(anc)}, {"multiplicity", a.multiplicity()}});
  }
  return {{"i", atoms.i + 1},
          {"j", atoms.j + 1},
          {"atoms", std::move(list)},
          {"total_multiplicity", atoms.total_multiplicity()}};
}

json to_json(const std::vector<EdgeOccupancy>& occ, double threshold) {
  const auto flags = inactivation_flags(occ, threshold);
  json edges = json::array();
  for (std::size_t e = 0; e < occ.size(); ++e) {
    edges.push_back({{"i", occ[e].i + 1},
                     {"j", occ[e].j + 1},
                     {"count", occ[e].count},
                     {"sample_size", occ[e].sample_size},
                     {"fraction", occ[e].fraction},
                     {"approaching_inactivation", static_cast<bool>(flags[e])}});
  }
  return {{"threshold", threshold}, {"edges", std::move(edges)}};
}

json to_json(const std::vector<tropical::EdgeClass>& classes) {
  json out = json::array();
  for (const auto& c : classes) {
    out.push_back({{"i", c.i + 1},
                   {"j", c.j + 1},
                   {"omega", c.weight},
                   {"best_alternative", value_to_json(c.best_alternative)},
                   {"role", tropical::to_string(c.role)}});
  }
  return out;
}

json to_json(const tropical::PolytropeFacets& facets) {
  json list = json::array();
  for (const auto& c : facets.constraints) {
    list.push_back({{"i", c.i + 1}, {"j", c.j + 1}, {"bound", c.bound}, {"facet_defining", c.facet_defining}});
  }
  return {{"n", facets.n}, {"constraints", std::move(list)}};
}

json to_json(const gmm::MixtureFit& fit) {
  json j = {{"k", fit.k},
            {"weights", fit.weights},
            {"means", fit.means},
            {"variances", fit.variances},
            {"loglik", num(fit.loglik)},
            {"bic", num(fit.bic)},
            {"sample_size", fit.sample_size},
            {"iterations", fit.iterations},
            {"converged", fit.converged},
            {"equal_variance", fit.equal_variance},
            {"pruned", fit.pruned}};
  if (!fit.candidate_bic.empty()) {
    json c = json::array();
    for (double b : fit.candidate_bic) c.push_back(num(b));
    j["candidate_bic"] = std::move(c);
  }
  return j;
}

json to_json(const gmm::EstimateReport& r) {
  return {{"i", r.i + 1},
          {"j", r.j + 1},
          {"method", gmm::to_string(r.method)},
          {"estimate", r.estimate},
          {"chosen_k", r.chosen_k ? json(*r.chosen_k) : json(nullptr)},
          {"component_weight", opt(r.component_weight)},
          {"component_variance", opt(r.component_variance)},
          {"occupancy_fraction", opt(r.occupancy_fraction)},
          {"flags", r.flags}};
}

json to_json(const qp::QpSolution& sol, bool include_deltas) {
  json j = {{"omega_hat", sol.omega_hat}, {"omega_prime", sol.omega_prime}, {"shift", sol.shift},
            {"K1", sol.k1},               {"K2", sol.k2},                   {"objective", sol.objective},
            {"active_count", sol.active_count}, {"status", qp::to_string(sol.status)}};
  if (include_deltas) j["deltas"] = sol.deltas;
  return j;
}

json to_json(const qp::KktReport& k) {
  return {{"primal_violation", k.primal_violation},
          {"negative_slack", k.negative_slack},
          {"complementarity", k.complementarity},
          {"stationarity", k.stationarity},
          {"ties", k.ties},
          {"max", k.max()}};
}

json to_json(const qp::AutoTuneResult& tuned, bool include_deltas) {
  json traj = json::array();
  for (const auto& p : tuned.trajectory) traj.push_back({{"K1", p.k1}, {"K2", p.k2}, {"omega_prime", p.omega_prime}});
  return {{"solution", to_json(tuned.solution, include_deltas)}, {"threshold", tuned.threshold}, {"trajectory", traj}};
}

json to_json(const InnovationSpec& spec) { return {{"alpha", spec.alpha}, {"beta", spec.beta}, {"xi", spec.xi}}; }

json to_json(const SampleMeta& meta) {
  return {{"seed", meta.seed},
          {"innovation", to_json(meta.innovation)},
          {"sigmas", meta.noise.sigmas},
          {"feed", feed_name(meta.feed)},
          {"graph_hash", meta.graph_hash},
          {"block_rows", meta.block_rows}};
}

SampleMeta meta_from_json(const json& j) {
  try {
    SampleMeta m;
    m.seed = j.at("seed").get<std::uint64_t>();
    const json& inn = j.at("innovation");
    m.innovation = {inn.at("alpha").get<double>(), inn.at("beta").get<double>(), inn.at("xi").get<double>()};
    m.noise.sigmas = j.at("sigmas").get<std::vector<double>>();
    const auto feed = j.at("feed").get<std::string>();
    if (feed == "noisy") m.feed = NoiseFeed::noisy;
    else if (feed == "pre_noise") m.feed = NoiseFeed::pre_noise;
    else throw data_error("unknown noise feed '" + feed + "'");
    m.graph_hash = j.at("graph_hash").get<std::uint64_t>();
    m.block_rows = j.at("block_rows").get<std::size_t>();
    return m;
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed sample metadata: ") + e.what());
  }
}

bench::ExperimentConfig config_from_json(const json& j, bench::Scenario scenario) {
  if (!j.is_object()) throw data_error("experiment config must be a JSON object");
  const bool full = j.value("full_scale", false);
  bench::ExperimentConfig c = bench::default_config(scenario, full);
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "scenario") {
        if (bench::scenario_from_string(v.get<std::string>()) != scenario) {
          throw data_error("config scenario '" + v.get<std::string>() + "' does not match --scenario");
        }
      } else if (key == "preset") c.preset = v.get<std::string>();
      else if (key == "graph") c.graph = graph_from_json(v);
      else if (key == "n" || key == "n_samples") c.n_samples = v.get<std::size_t>();
      else if (key == "sigma") c.sigma = v.get<double>();
      else if (key == "seeds") c.seeds = v.get<std::vector<std::uint64_t>>();
      else if (key == "methods") c.methods = v.get<std::vector<std::string>>();
      else if (key == "grid") c.grid = v.get<std::vector<double>>();
      else if (key == "k_max") c.k_max = v.get<std::size_t>();
      else if (key == "weight_floor") c.weight_floor = v.get<double>();
      else if (key == "restarts") c.restarts = v.get<std::size_t>();
      else if (key == "qp_threshold_sigmas") c.qp_threshold_sigmas = v.get<double>();
      else if (key == "stable_median") c.stable_median = v.get<double>();
      else if (key == "stable_iqr") c.stable_iqr = v.get<double>();
      else if (key == "bisection_steps") c.bisection_steps = v.get<std::size_t>();
      else if (key == "full_scale") c.full_scale = v.get<bool>();
      else if (key == "workers") c.workers = v.get<unsigned>();
      else throw data_error("unknown experiment config key '" + key + "'");
    }
    c.validate();
  } catch (const json::exception& e) {
    throw data_error(std::string("malformed experiment config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw data_error(e.what());
  }
  return c;
}

json to_json(const bench::ExperimentConfig& c) {
  json j = {{"scenario", bench::to_string(c.scenario)},
            {"n_samples", c.n_samples},
            {"sigma", c.sigma},
            {"seeds", c.seeds},
            {"methods", c.methods},
            {"grid", c.grid},
            {"k_max", c.k_max},
            {"weight_floor", c.weight_floor},
            {"restarts", c.restarts},
            {"qp_threshold_sigmas", c.qp_threshold_sigmas},
            {"stable_median", c.stable_median},
            {"stable_iqr", c.stable_iqr},
            {"bisection_steps", c.bisection_steps},
            {"full_scale", c.full_scale}};
  if (c.graph) j["graph"] = graph_to_json(*c.graph);
  else j["preset"] = c.preset;
  return j;
}

}  // namespace mlbn::io
