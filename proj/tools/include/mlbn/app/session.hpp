#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlbn/dag.hpp"
#include "mlbn/qp.hpp"
#include "mlbn/simulate.hpp"
#include "mlbn/tropical.hpp"

namespace mlbn::app {

using nlohmann::json;

struct Response {
  int status = 200;
  json body;
};

using Query = std::map<std::string, std::string>;

/// Marginal payloads are stride-downsampled to at most this many rows.
inline constexpr std::size_t kMaxMarginalPoints = 20000;
inline constexpr std::size_t kDefaultHistogramBins = 50;

/// State behind the HTTP API: one graph, one sample set, the latest solve per
/// pair and an append-only ledger of accepted estimates. Handlers take the
/// parsed request and never touch sockets, so they are callable directly.
class Session {
public:
  Session(std::optional<WeightedDag> graph, std::optional<SampleSet> samples,
          std::filesystem::path ledger_path = {});
  ~Session();

  Session(const Session&) = delete;
  Session& operator=(const Session&) = delete;

  Response graph() const;
  Response marginal(const Query& q) const;
  Response atoms(const Query& q) const;
  Response qp(const json& body);
  /// Synchronous fit, or a polled job when the body has "async": true.
  Response gmm(const json& body);
  Response job(const std::string& id) const;
  Response cancel_job(const std::string& id);
  Response accept(const json& body);
  Response report() const;

private:
  struct Solve {
    std::string method;
    double estimate;
    std::optional<double> k1;
    std::optional<double> k2;
  };
  struct Job;

  std::optional<Response> require_samples() const;
  std::pair<std::size_t, std::size_t> parse_pair(const json& i, const json& j) const;
  json run_gmm(std::size_t i, std::size_t j, std::size_t k_max, std::uint64_t seed,
               const std::atomic<bool>* cancel) const;
  void persist_ledger() const;

  std::optional<WeightedDag> graph_;
  std::optional<SampleSet> samples_;
  std::optional<tropical::KleeneStar> closure_;
  std::filesystem::path ledger_path_;

  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::size_t, std::size_t>, Solve> solves_;
  std::vector<json> ledger_;

  mutable std::mutex jobs_mutex_;
  std::map<std::string, std::shared_ptr<Job>> jobs_;
  std::uint64_t next_job_ = 1;
};

}  // namespace mlbn::app
