#include "mlbn/app/server.hpp"

#include <httplib.h>

namespace mlbn::app {
namespace {

void send(httplib::Response& res, const Response& r) {
  res.status = r.status;
  res.set_content(r.body.dump(), "application/json");
}

Query query_of(const httplib::Request& req) {
  Query q;
  for (const auto& [k, v] : req.params) q.emplace(k, v);
  return q;
}

template <class F>
httplib::Server::Handler with_body(F f) {
  return [f](const httplib::Request& req, httplib::Response& res) {
    const json body = json::parse(req.body, nullptr, false);
    if (body.is_discarded() || !body.is_object()) {
      send(res, {400, {{"error", "request body must be a JSON object"}}});
      return;
    }
    send(res, f(body));
  };
}

}  // namespace

struct Server::Impl {
  httplib::Server http;
};

Server::Server(Session& session, std::filesystem::path static_dir) : impl_(std::make_unique<Impl>()) {
  auto& http = impl_->http;
  Session* s = &session;
  http.Get("/api/graph", [s](const httplib::Request&, httplib::Response& res) { send(res, s->graph()); });
  http.Get("/api/marginal",
           [s](const httplib::Request& req, httplib::Response& res) { send(res, s->marginal(query_of(req))); });
  http.Get("/api/atoms",
           [s](const httplib::Request& req, httplib::Response& res) { send(res, s->atoms(query_of(req))); });
  http.Post("/api/qp", with_body([s](const json& b) { return s->qp(b); }));
  http.Post("/api/gmm", with_body([s](const json& b) { return s->gmm(b); }));
  http.Post("/api/accept", with_body([s](const json& b) { return s->accept(b); }));
  http.Get("/api/report", [s](const httplib::Request&, httplib::Response& res) { send(res, s->report()); });
  http.Get(R"(/api/jobs/([A-Za-z0-9-]+))", [s](const httplib::Request& req, httplib::Response& res) {
    send(res, s->job(req.matches[1]));
  });
  http.Delete(R"(/api/jobs/([A-Za-z0-9-]+))", [s](const httplib::Request& req, httplib::Response& res) {
    send(res, s->cancel_job(req.matches[1]));
  });
  http.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    std::string what = "internal error";
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      what = e.what();
    } catch (...) {
    }
    send(res, {500, {{"error", what}}});
  });
  if (!static_dir.empty()) http.set_mount_point("/", static_dir.string());
}

Server::~Server() { stop(); }

int Server::bind(const std::string& host, int port) {
  if (port == 0) return impl_->http.bind_to_any_port(host);
  return impl_->http.bind_to_port(host, port) ? port : -1;
}

bool Server::listen() { return impl_->http.listen_after_bind(); }

void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}

void Server::wait_until_ready() const { impl_->http.wait_until_ready(); }

}  // namespace mlbn::app
