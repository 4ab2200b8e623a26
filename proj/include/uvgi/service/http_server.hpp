#pragma once

#include <memory>
#include <string>

#include "uvgi/service/service.hpp"

namespace httplib {
class Server;
}

namespace uvgi::service {

// JSON-over-HTTP routes for DisinfectionService, with a server-sent event
// stream per run at GET /runs/{id}/events.
class HttpServer {
 public:
  explicit HttpServer(DisinfectionService& service);
  ~HttpServer();

  // Returns false when the address/port cannot be bound.
  bool bind(const std::string& host, int port);
  // Binds an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  // Serves until stop(); call after a successful bind.
  bool listen();
  void stop();
  bool running() const;

 private:
  void install_routes();

  DisinfectionService& service_;
  std::unique_ptr<httplib::Server> server_;
};

}  // namespace uvgi::service
