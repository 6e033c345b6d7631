#include "mlbn/app/cli.hpp"

#include <CLI11.hpp>

#include <charconv>
#include <optional>
#include <string>

#include "mlbn/app/server.hpp"
#include "mlbn/app/session.hpp"
#include "mlbn/error.hpp"
#include "mlbn/experiment.hpp"
#include "mlbn/gmm.hpp"
#include "mlbn/json.hpp"
#include "mlbn/network.hpp"
#include "mlbn/presets.hpp"
#include "mlbn/qp.hpp"
#include "mlbn/sample_io.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/tropical.hpp"

#ifndef MLBN_WEB_DIR
#define MLBN_WEB_DIR ""
#endif

namespace mlbn::app {
namespace {

struct GraphSource {
  std::string file;
  std::string preset;

  void attach(CLI::App* cmd, bool required) {
    auto* g = cmd->add_option("--graph", file, "graph JSON file")->check(CLI::ExistingFile);
    auto* p = cmd->add_option("--preset", preset, "built-in graph name");
    g->excludes(p);
    if (required) {
      auto* group = cmd->add_option_group("graph");
      group->add_option(g);
      group->add_option(p);
      group->require_option(1);
    }
  }
  bool given() const { return !file.empty() || !preset.empty(); }
  WeightedDag load() const { return preset.empty() ? io::read_graph(file) : presets::by_name(preset); }
};

std::pair<std::size_t, std::size_t> parse_pair(const std::string& text, std::size_t n) {
  const auto comma = text.find(',');
  long long a = 0, b = 0;
  auto read = [](std::string_view s, long long& v) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc{} && ptr == s.data() + s.size() && !s.empty();
  };
  const std::string_view sv(text);
  if (comma == std::string::npos || !read(sv.substr(0, comma), a) || !read(sv.substr(comma + 1), b)) {
    throw std::invalid_argument("--pair expects i,j (1-based), got '" + text + "'");
  }
  if (a < 1 || b < 1 || a > static_cast<long long>(n) || b > static_cast<long long>(n) || a == b) {
    throw std::invalid_argument("--pair " + text + " is not a pair of distinct vertices in 1.." + std::to_string(n));
  }
  return {static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)};
}

void print(std::ostream& out, const json& j) { out << j.dump(2) << '\n'; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Max-linear Bayesian network toolkit", "mlbn"};
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "simulate samples to CSV (+ .meta.json sidecar)");
  GraphSource gen_graph;
  gen_graph.attach(generate, true);
  std::size_t gen_n = 0;
  std::uint64_t gen_seed = 0;
  double gen_sigma = 0.0;
  InnovationSpec gen_innov;
  std::string gen_feed = "noisy", gen_out;
  generate->add_option("--n", gen_n, "number of samples")->required()->check(CLI::PositiveNumber);
  generate->add_option("--seed", gen_seed, "master seed");
  generate->add_option("--sigma", gen_sigma, "noise sd, same for every vertex")->check(CLI::NonNegativeNumber);
  generate->add_option("--alpha", gen_innov.alpha, "Frechet location");
  generate->add_option("--beta", gen_innov.beta, "Frechet scale");
  generate->add_option("--xi", gen_innov.xi, "Frechet shape");
  generate->add_option("--feed", gen_feed, "value fed to children")->check(CLI::IsMember({"noisy", "pre_noise"}));
  generate->add_option("--out", gen_out, "output CSV")->required();

  // kleene
  auto* kleene = app.add_subcommand("kleene", "Kleene star of a graph or max-plus matrix");
  GraphSource kl_graph;
  kl_graph.attach(kleene, false);
  std::string kl_matrix;
  bool kl_facets = false;
  kleene->add_option("--matrix", kl_matrix, "matrix JSON file")->check(CLI::ExistingFile);
  kleene->add_flag("--facets", kl_facets, "print polytrope constraints instead");

  // atoms
  auto* atoms = app.add_subcommand("atoms", "atom locations of Y_ij");
  GraphSource at_graph;
  at_graph.attach(atoms, true);
  std::string at_pair;
  atoms->add_option("--pair", at_pair, "i,j (1-based)")->required();

  // occupancy
  auto* occupancy = app.add_subcommand("occupancy", "per-edge path occupancy of a simulated sample");
  GraphSource oc_graph;
  oc_graph.attach(occupancy, true);
  std::string oc_samples;
  double oc_threshold = kInactivationThreshold;
  occupancy->add_option("--samples", oc_samples, "sample CSV")->required()->check(CLI::ExistingFile);
  occupancy->add_option("--threshold", oc_threshold, "inactivation flag threshold")->check(CLI::Range(0.0, 1.0));

  // estimate
  auto* estimate = app.add_subcommand("estimate", "estimate one edge weight");
  std::string es_method, es_samples, es_pair;
  GraphSource es_graph;
  es_graph.attach(estimate, false);
  std::optional<std::size_t> es_kmax;
  double es_floor = gmm::kDefaultWeightFloor;
  std::uint64_t es_seed = 0;
  std::size_t es_restarts = 8;
  std::optional<double> es_k1, es_k2, es_t;
  bool es_auto = false, es_deltas = false;
  estimate->add_option("--method", es_method, "min | gmm | qp")->required()->check(CLI::IsMember({"min", "gmm", "qp"}));
  estimate->add_option("--samples", es_samples, "sample CSV")->required()->check(CLI::ExistingFile);
  estimate->add_option("--pair", es_pair, "i,j (1-based)")->required();
  estimate->add_option("--kmax", es_kmax, "gmm: largest K (default from --graph, else 5)")->check(CLI::Range(1, 20));
  estimate->add_option("--floor", es_floor, "gmm: weight floor")->check(CLI::Range(0.0, 1.0));
  estimate->add_option("--seed", es_seed, "gmm: restart seed");
  estimate->add_option("--restarts", es_restarts, "gmm: EM restarts")->check(CLI::PositiveNumber);
  auto* k1_opt = estimate->add_option("--k1", es_k1, "qp: slack weight");
  auto* k2_opt = estimate->add_option("--k2", es_k2, "qp: quadratic weight");
  auto* auto_opt = estimate->add_flag("--auto", es_auto, "qp: run the tuning schedule");
  estimate->add_option("--t", es_t, "qp --auto: threshold on omega'")->needs(auto_opt);
  estimate->add_flag("--deltas", es_deltas, "qp: include slacks in the output");
  k1_opt->needs(k2_opt);
  k2_opt->needs(k1_opt);
  auto_opt->excludes(k1_opt);

  // experiment
  auto* experiment = app.add_subcommand("experiment", "run a benchmark scenario");
  std::string ex_scenario, ex_config, ex_out;
  bool ex_full = false;
  experiment->add_option("--scenario", ex_scenario, "recovery | inactivation | stability | instability")
      ->required()
      ->check(CLI::IsMember({"recovery", "inactivation", "stability", "instability"}));
  experiment->add_option("--config", ex_config, "config JSON (keys override the defaults)")->check(CLI::ExistingFile);
  experiment->add_option("--out", ex_out, "output directory")->required();
  experiment->add_flag("--full-scale", ex_full, "full sample sizes instead of the desk defaults");

  // serve
  auto* serve = app.add_subcommand("serve", "JSON-over-HTTP service for the tuner");
  GraphSource sv_graph;
  sv_graph.attach(serve, false);
  std::string sv_samples, sv_host = "127.0.0.1", sv_ledger, sv_static = MLBN_WEB_DIR;
  int sv_port = 8787;
  serve->add_option("--samples", sv_samples, "sample CSV")->check(CLI::ExistingFile);
  serve->add_option("--port", sv_port, "TCP port (0 picks one)")->check(CLI::Range(0, 65535));
  serve->add_option("--host", sv_host, "bind address");
  serve->add_option("--ledger", sv_ledger, "ledger JSON file, reloaded and appended to");
  serve->add_option("--static", sv_static, "directory of static assets");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  try {
    if (*generate) {
      const WeightedDag dag = gen_graph.load();
      gen_innov.validate();
      SimulationOptions opts;
      opts.feed = gen_feed == "noisy" ? NoiseFeed::noisy : NoiseFeed::pre_noise;
      const auto samples = simulate(dag, gen_innov, NoiseSpec::uniform(dag.size(), gen_sigma), gen_n, gen_seed, opts);
      save_samples(samples, gen_out);
      print(out, {{"samples", gen_out},
                  {"sidecar", sidecar_path(gen_out).string()},
                  {"rows", samples.rows()},
                  {"cols", samples.cols()},
                  {"graph_hash", dag.hash_hex()}});
    } else if (*kleene) {
      if (kl_matrix.empty() == !kl_graph.given()) throw CLI::ValidationError("give exactly one of --graph, --preset, --matrix");
      const tropical::Matrix w = kl_matrix.empty() ? kl_graph.load().weight_matrix() : io::read_matrix(kl_matrix);
      const auto ks = tropical::kleene_star(w);
      print(out, kl_facets ? io::to_json(tropical::polytrope_facets(ks)) : io::matrix_to_json(ks.closure));
    } else if (*atoms) {
      const WeightedDag dag = at_graph.load();
      const auto [i, j] = parse_pair(at_pair, dag.size());
      print(out, io::to_json(atom_set(dag, tropical::kleene_star(dag.weight_matrix()), i, j)));
    } else if (*occupancy) {
      const WeightedDag dag = oc_graph.load();
      const auto samples = load_samples(oc_samples);
      print(out, io::to_json(edge_occupancy(dag, samples), oc_threshold));
    } else if (*estimate) {
      const auto samples = load_samples(es_samples);
      std::optional<WeightedDag> dag;
      if (es_graph.given()) {
        dag = es_graph.load();
        check_graph(samples, *dag);
      }
      const auto [i, j] = parse_pair(es_pair, samples.cols());
      const auto y = differences(samples, i, j);
      if (es_method == "min") {
        print(out, io::to_json(gmm::min_estimator(y)));
      } else if (es_method == "gmm") {
        gmm::GmmOptions opts;
        opts.k_max = es_kmax ? *es_kmax : dag ? gmm::k_max_from_graph(*dag, i, j) : 5;
        opts.weight_floor = es_floor;
        opts.seed = es_seed;
        opts.restarts = es_restarts;
        const auto est = gmm::estimate_gmm(y, opts);
        json report = io::to_json(est.report);
        report["fit"] = io::to_json(est.fit);
        print(out, report);
      } else if (es_auto) {
        const double t = es_t ? *es_t : qp::default_threshold(y.values);
        print(out, io::to_json(qp::auto_tune(y.values, t, qp::default_schedule()), es_deltas));
      } else {
        if (!es_k1) throw CLI::ValidationError("qp needs --k1 and --k2, or --auto");
        const auto sol = qp::solve_pair_1d(y.values, *es_k1, *es_k2);
        json body = io::to_json(sol, es_deltas);
        body["kkt"] = io::to_json(qp::kkt_report(sol, y.values));
        print(out, body);
      }
    } else if (*experiment) {
      const auto scenario = bench::scenario_from_string(ex_scenario);
      bench::ExperimentConfig cfg = bench::default_config(scenario, ex_full);
      if (!ex_config.empty()) {
        json j = io::read_json(ex_config);
        if (ex_full && j.is_object() && !j.contains("full_scale")) j["full_scale"] = true;
        cfg = io::config_from_json(j, scenario);
      }
      for (const auto& w : cfg.warnings()) err << "warning: " << w << '\n';
      const auto manifest = bench::run_and_write(cfg, ex_out);
      print(out, io::read_json(manifest));
    } else if (*serve) {
      std::optional<WeightedDag> dag;
      std::optional<SampleSet> samples;
      if (sv_graph.given()) dag = sv_graph.load();
      if (!sv_samples.empty()) samples = load_samples(sv_samples);
      if (sv_host != "127.0.0.1" && sv_host != "localhost" && sv_host != "::1") {
        err << "warning: binding " << sv_host << "; the service has no authentication\n";
      }
      Session session(std::move(dag), std::move(samples), sv_ledger);
      std::filesystem::path web = sv_static;
      if (!web.empty() && !std::filesystem::is_directory(web)) {
        err << "warning: static directory '" << sv_static << "' not found; serving the API only\n";
        web.clear();
      }
      Server server(session, web);
      const int port = server.bind(sv_host, sv_port);
      if (port < 0) {
        err << "error: cannot bind " << sv_host << ':' << sv_port << '\n';
        return kExitData;
      }
      err << "listening on http://" << sv_host << ':' << port << '\n';
      server.listen();
    }
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const data_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const estimation_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::out_of_range& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace mlbn::app
