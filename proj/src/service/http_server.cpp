#include "uvgi/service/http_server.hpp"

#include <httplib.h>

#include <chrono>

namespace uvgi::service {

namespace {

void send_json(httplib::Response& res, const json& body, int status = 200) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message,
                const json& detail = json::object()) {
  json body{{"error", message}};
  if (!detail.empty()) body["detail"] = detail;
  send_json(res, body, status);
}

json parse_body(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw ServiceError(400, std::string("malformed JSON body: ") + e.what());
  }
}

std::optional<double> query_number(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  const std::string raw = req.get_param_value(key);
  try {
    std::size_t used = 0;
    const double v = std::stod(raw, &used);
    if (used != raw.size()) throw std::invalid_argument(raw);
    return v;
  } catch (const std::exception&) {
    throw ServiceError(400, std::string("query parameter '") + key + "' must be a number");
  }
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
  return [handler](const httplib::Request& req, httplib::Response& res) {
    try {
      handler(req, res);
    } catch (const ServiceError& e) {
      send_error(res, e.status(), e.what(), e.detail());
    } catch (const json::exception& e) {
      send_error(res, 400, e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  };
}

}  // namespace

HttpServer::HttpServer(DisinfectionService& service)
    : service_(service), server_(std::make_unique<httplib::Server>()) {
  // SO_REUSEADDR only: a second server on a busy port must fail to bind.
  server_->set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, reinterpret_cast<const char*>(&yes), sizeof(yes));
  });
  install_routes();
}

HttpServer::~HttpServer() { stop(); }

bool HttpServer::bind(const std::string& host, int port) { return server_->bind_to_port(host, port); }

int HttpServer::bind_any(const std::string& host) { return server_->bind_to_any_port(host); }

bool HttpServer::listen() { return server_->listen_after_bind(); }

void HttpServer::stop() {
  if (server_) server_->stop();
}

bool HttpServer::running() const { return server_->is_running(); }

void HttpServer::install_routes() {
  auto& s = *server_;
  auto& svc = service_;

  s.Post("/profiles", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const auto order = query_number(req, "order").value_or(15.0);
    if (order < 0 || order != std::floor(order)) throw ServiceError(400, "order must be a non-negative integer");
    send_json(res,
              svc.create_profile(req.body, static_cast<int>(order), query_number(req, "cutoff_m"),
                                 query_number(req, "calibration_height_m")),
              201);
  }));
  s.Get(R"(/profiles/([\w-]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.get_profile(req.matches[1]));
  }));

  s.Get("/scenes", guarded([&svc](const httplib::Request&, httplib::Response& res) {
    send_json(res, svc.list_scenes());
  }));
  s.Post("/scenes", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.create_scene(parse_body(req)), 201);
  }));
  s.Get(R"(/scenes/([\w-]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.get_scene(req.matches[1]));
  }));
  s.Put(R"(/scenes/([\w-]+)/region)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.set_region(req.matches[1], parse_body(req)));
  }));
  s.Put(R"(/scenes/([\w-]+)/params)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.set_params(req.matches[1], parse_body(req)));
  }));
  s.Put(R"(/scenes/([\w-]+)/profile)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.set_profile(req.matches[1], parse_body(req)));
  }));
  s.Post(R"(/scenes/([\w-]+)/plan)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.plan(req.matches[1]));
  }));
  s.Post(R"(/scenes/([\w-]+)/execute)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.execute(req.matches[1]), 202);
  }));

  s.Get(R"(/runs/([\w-]+))", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    send_json(res, svc.get_run(req.matches[1]));
  }));
  s.Get(R"(/runs/([\w-]+)/heatmap)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    res.set_content(svc.run_artifact(req.matches[1], "heatmap.json"), "application/json");
  }));
  s.Get(R"(/runs/([\w-]+)/report)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    res.set_content(svc.run_artifact(req.matches[1], "report.json"), "application/json");
  }));
  s.Get(R"(/runs/([\w-]+)/sensors\.csv)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    res.set_content(svc.run_artifact(req.matches[1], "sensors.csv"), "text/csv");
  }));
  s.Get(R"(/runs/([\w-]+)/traces\.csv)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    res.set_content(svc.run_artifact(req.matches[1], "traces.csv"), "text/csv");
  }));
  s.Get(R"(/runs/([\w-]+)/events)", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
    const std::string run_id = req.matches[1];
    svc.get_run(run_id);  // 404 before committing to a stream
    auto cursor = std::make_shared<std::size_t>(0);
    res.set_chunked_content_provider(
        "text/event-stream", [&svc, run_id, cursor](std::size_t, httplib::DataSink& sink) {
          std::vector<RunEvent> batch;
          const bool more = svc.next_events(run_id, *cursor, batch, std::chrono::milliseconds(500));
          for (const auto& ev : batch) {
            const std::string frame = "event: " + ev.name + "\ndata: " + ev.data + "\n\n";
            if (!sink.write(frame.data(), frame.size())) return false;
          }
          *cursor += batch.size();
          if (!more) sink.done();
          return true;
        });
  }));
}

}  // namespace uvgi::service
