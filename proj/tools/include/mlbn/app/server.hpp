#pragma once

#include <filesystem>
#include <memory>
#include <string>

#include "mlbn/app/session.hpp"

namespace mlbn::app {

/// HTTP front end for a Session. Routes live under /api; everything else is
/// served from the static directory when one is given.
class Server {
public:
  explicit Server(Session& session, std::filesystem::path static_dir = {});
  ~Server();

  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds host:port (port 0 picks a free one) and returns the bound port, or -1.
  int bind(const std::string& host, int port);
  /// Blocks until stop().
  bool listen();
  void stop();
  void wait_until_ready() const;

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace mlbn::app
