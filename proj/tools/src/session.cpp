#include "mlbn/app/session.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <condition_variable>

#include "mlbn/error.hpp"
#include "mlbn/gmm.hpp"
#include "mlbn/json.hpp"
#include "mlbn/network.hpp"

namespace mlbn::app {
namespace {

class bad_request : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

Response error(int status, const std::string& message) { return {status, json{{"error", message}}}; }

long long to_integer(const json& v, const std::string& name) {
  if (v.is_number_integer()) return v.get<long long>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    long long out = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    if (ec == std::errc{} && ptr == s.data() + s.size() && !s.empty()) return out;
  }
  throw bad_request("'" + name + "' must be an integer");
}

double to_number(const json& v, const std::string& name) {
  if (!v.is_number() || !std::isfinite(v.get<double>())) throw bad_request("'" + name + "' must be a finite number");
  return v.get<double>();
}

const json& field(const json& body, const std::string& name) {
  if (!body.is_object() || !body.contains(name)) throw bad_request("missing field '" + name + "'");
  return body.at(name);
}

json query_field(const Query& q, const std::string& name) {
  const auto it = q.find(name);
  if (it == q.end()) throw bad_request("missing query parameter '" + name + "'");
  return it->second;
}

json histogram(std::span<const double> y, std::size_t bins) {
  const auto [lo_it, hi_it] = std::minmax_element(y.begin(), y.end());
  const double lo = *lo_it, hi = *hi_it;
  std::vector<std::size_t> counts(bins, 0);
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  for (double v : y) {
    auto b = static_cast<std::size_t>((v - lo) / width);
    counts[std::min(b, bins - 1)] += 1;
  }
  return {{"lo", lo}, {"hi", hi}, {"width", width}, {"counts", counts}};
}

}  // namespace

struct Session::Job {
  std::string id;
  std::atomic<bool> cancel{false};
  mutable std::mutex mutex;
  std::string status = "running";
  json result;
  std::string error;
  std::condition_variable finished;
  std::jthread worker;
};

Session::Session(std::optional<WeightedDag> graph, std::optional<SampleSet> samples,
                 std::filesystem::path ledger_path)
    : graph_(std::move(graph)), samples_(std::move(samples)), ledger_path_(std::move(ledger_path)) {
  if (graph_ && samples_) check_graph(*samples_, *graph_);
  if (graph_) closure_ = tropical::kleene_star(graph_->weight_matrix());
  if (!ledger_path_.empty() && std::filesystem::exists(ledger_path_)) {
    const json saved = io::read_json(ledger_path_);
    if (!saved.contains("entries") || !saved["entries"].is_array()) {
      throw data_error("ledger file '" + ledger_path_.string() + "' has no entries array");
    }
    for (const auto& e : saved["entries"]) ledger_.push_back(e);
  }
}

Session::~Session() {
  std::lock_guard lock(jobs_mutex_);
  for (auto& [id, job] : jobs_) job->cancel = true;
  for (auto& [id, job] : jobs_)
    if (job->worker.joinable()) job->worker.join();
}

std::optional<Response> Session::require_samples() const {
  if (!samples_) return error(404, "no dataset loaded");
  return std::nullopt;
}

std::pair<std::size_t, std::size_t> Session::parse_pair(const json& i, const json& j) const {
  const std::size_t n = samples_ ? samples_->cols() : graph_->size();
  const long long a = to_integer(i, "i"), b = to_integer(j, "j");
  if (a < 1 || b < 1 || a > static_cast<long long>(n) || b > static_cast<long long>(n)) {
    throw bad_request("vertex ids must lie in 1.." + std::to_string(n));
  }
  if (a == b) throw bad_request("a pair needs two distinct vertices");
  return {static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)};
}

Response Session::graph() const {
  if (!graph_) return error(404, "no graph loaded");
  json body = io::graph_to_json(*graph_);
  body["hash"] = graph_->hash_hex();
  body["classes"] = io::to_json(tropical::classify_edges(*graph_));
  return {200, body};
}

Response Session::marginal(const Query& q) const {
  if (auto r = require_samples()) return *r;
  try {
    const auto [i, j] = parse_pair(query_field(q, "i"), query_field(q, "j"));
    const auto [k, l] = parse_pair(query_field(q, "k"), query_field(q, "l"));
    std::size_t bins = kDefaultHistogramBins;
    if (q.count("bins")) {
      const long long b = to_integer(q.at("bins"), "bins");
      if (b < 1 || b > 1000) throw bad_request("'bins' must lie in 1..1000");
      bins = static_cast<std::size_t>(b);
    }
    const auto yij = differences(*samples_, i, j).values;
    const auto ykl = differences(*samples_, k, l).values;
    const std::size_t n = yij.size();
    const std::size_t stride = (n + kMaxMarginalPoints - 1) / kMaxMarginalPoints;
    json rows = json::array(), a = json::array(), b = json::array();
    for (std::size_t r = 0; r < n; r += stride) {
      rows.push_back(r);
      a.push_back(yij[r]);
      b.push_back(ykl[r]);
    }
    return {200,
            {{"pair", {i + 1, j + 1}},
             {"companion", {k + 1, l + 1}},
             {"n_total", n},
             {"stride", stride},
             {"count", rows.size()},
             {"rows", rows},
             {"y_ij", a},
             {"y_kl", b},
             {"hist_ij", histogram(yij, bins)},
             {"hist_kl", histogram(ykl, bins)}}};
  } catch (const bad_request& e) {
    return error(400, e.what());
  }
}

Response Session::atoms(const Query& q) const {
  if (!graph_) return error(404, "no graph loaded");
  try {
    const auto [i, j] = parse_pair(query_field(q, "i"), query_field(q, "j"));
    return {200, io::to_json(atom_set(*graph_, *closure_, i, j))};
  } catch (const bad_request& e) {
    return error(400, e.what());
  }
}

Response Session::qp(const json& body) {
  if (auto r = require_samples()) return *r;
  try {
    const auto [i, j] = parse_pair(field(body, "i"), field(body, "j"));
    const double k1 = to_number(field(body, "K1"), "K1"), k2 = to_number(field(body, "K2"), "K2");
    const auto y = differences(*samples_, i, j);
    qp::QpSolution sol;
    try {
      sol = qp::solve_pair_1d(y.values, k1, k2);
    } catch (const std::invalid_argument& e) {
      throw bad_request(e.what());
    }
    json out = io::to_json(sol);
    out["pair"] = {i + 1, j + 1};
    out["kkt"] = io::to_json(qp::kkt_report(sol, y.values));
    {
      std::unique_lock lock(mutex_);
      solves_[{i, j}] = {"qp", sol.omega_hat, k1, k2};
    }
    return {200, out};
  } catch (const bad_request& e) {
    return error(400, e.what());
  }
}

json Session::run_gmm(std::size_t i, std::size_t j, std::size_t k_max, std::uint64_t seed,
                      const std::atomic<bool>* cancel) const {
  gmm::GmmOptions opts;
  opts.k_max = k_max;
  opts.seed = seed;
  opts.em.cancel = cancel;
  const auto est = gmm::estimate_gmm(differences(*samples_, i, j), opts);
  return {{"pair", {i + 1, j + 1}}, {"fit", io::to_json(est.fit)}, {"report", io::to_json(est.report)}};
}

Response Session::gmm(const json& body) {
  if (auto r = require_samples()) return *r;
  std::size_t i = 0, j = 0, k_max = 5;
  std::uint64_t seed = 0;
  bool async = false;
  try {
    std::tie(i, j) = parse_pair(field(body, "i"), field(body, "j"));
    if (body.contains("kmax")) {
      const long long k = to_integer(body["kmax"], "kmax");
      if (k < 1 || k > 20) throw bad_request("'kmax' must lie in 1..20");
      k_max = static_cast<std::size_t>(k);
    } else if (graph_) {
      k_max = gmm::k_max_from_graph(*graph_, i, j);
    }
    if (body.contains("seed")) {
      const long long s = to_integer(body["seed"], "seed");
      if (s < 0) throw bad_request("'seed' must be non-negative");
      seed = static_cast<std::uint64_t>(s);
    }
    if (body.contains("async")) {
      if (!body["async"].is_boolean()) throw bad_request("'async' must be a boolean");
      async = body["async"].get<bool>();
    }
  } catch (const bad_request& e) {
    return error(400, e.what());
  }

  if (!async) {
    try {
      json out = run_gmm(i, j, k_max, seed, nullptr);
      std::unique_lock lock(mutex_);
      solves_[{i, j}] = {"gmm", out["report"]["estimate"].get<double>(), std::nullopt, std::nullopt};
      return {200, out};
    } catch (const estimation_error& e) {
      return error(422, e.what());
    }
  }

  auto job = std::make_shared<Job>();
  {
    std::lock_guard lock(jobs_mutex_);
    job->id = "job-" + std::to_string(next_job_++);
    jobs_[job->id] = job;
  }
  job->worker = std::jthread([this, job, i, j, k_max, seed] {
    try {
      json out = run_gmm(i, j, k_max, seed, &job->cancel);
      {
        std::unique_lock lock(mutex_);
        solves_[{i, j}] = {"gmm", out["report"]["estimate"].get<double>(), std::nullopt, std::nullopt};
      }
      std::lock_guard lock(job->mutex);
      job->result = std::move(out);
      job->status = "done";
    } catch (const std::exception& e) {
      std::lock_guard lock(job->mutex);
      job->status = job->cancel ? "cancelled" : "failed";
      job->error = e.what();
    }
    job->finished.notify_all();
  });
  return {202, {{"job", job->id}, {"status", "running"}}};
}

Response Session::job(const std::string& id) const {
  std::shared_ptr<Job> entry;
  {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error(404, "unknown job '" + id + "'");
    entry = it->second;
  }
  std::lock_guard lock(entry->mutex);
  json body = {{"job", entry->id}, {"status", entry->status}};
  if (entry->status == "done") body["result"] = entry->result;
  if (!entry->error.empty()) body["error"] = entry->error;
  return {200, body};
}

Response Session::cancel_job(const std::string& id) {
  std::shared_ptr<Job> entry;
  {
    std::lock_guard lock(jobs_mutex_);
    const auto it = jobs_.find(id);
    if (it == jobs_.end()) return error(404, "unknown job '" + id + "'");
    entry = it->second;
  }
  entry->cancel = true;
  {
    std::unique_lock lock(entry->mutex);
    entry->finished.wait(lock, [&] { return entry->status != "running"; });
  }
  return job(id);
}

Response Session::accept(const json& body) {
  if (auto r = require_samples()) return *r;
  try {
    const auto [i, j] = parse_pair(field(body, "i"), field(body, "j"));
    const double omega = to_number(field(body, "omega"), "omega");
    std::unique_lock lock(mutex_);
    const auto it = solves_.find({i, j});
    if (it == solves_.end()) return error(409, "no solve recorded for this pair; run /api/qp or /api/gmm first");
    json entry = {{"seq", ledger_.size() + 1},
                  {"i", i + 1},
                  {"j", j + 1},
                  {"omega", omega},
                  {"method", it->second.method},
                  {"solver_estimate", it->second.estimate}};
    if (it->second.k1) entry["K1"] = *it->second.k1;
    if (it->second.k2) entry["K2"] = *it->second.k2;
    ledger_.push_back(entry);
    persist_ledger();
    return {200, entry};
  } catch (const bad_request& e) {
    return error(400, e.what());
  }
}

Response Session::report() const {
  if (auto r = require_samples()) return *r;
  std::shared_lock lock(mutex_);
  json dataset = {{"vertices", samples_->cols()}, {"rows", samples_->rows()}};
  if (graph_) dataset["graph_hash"] = graph_->hash_hex();
  return {200, {{"dataset", dataset}, {"count", ledger_.size()}, {"entries", ledger_}}};
}

void Session::persist_ledger() const {
  if (ledger_path_.empty()) return;
  io::write_json({{"entries", ledger_}}, ledger_path_);
}

}  // namespace mlbn::app
