#include <catch2/catch_amalgamated.hpp>

#include <csignal>
#include <filesystem>
#include <pthread.h>
#include <sstream>
#include <string>
#include <thread>
#include <unistd.h>
#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>

#include "cli.hpp"
#include "support/live_server.hpp"
#include "uvgi/fixture.hpp"
#include "uvgi/io.hpp"

using namespace uvgi;
using Catch::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "uvgi");
  std::ostringstream out, err;
  const int code = uvgi::cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

std::vector<double> sensor_doses(const fs::path& csv) {
  std::vector<double> doses;
  std::istringstream in(io::read_file(csv));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) doses.push_back(std::stod(line.substr(line.rfind(',') + 1)));
  return doses;
}

// An ephemeral localhost port that is free at the time of the call.
int free_port() {
  const int fd = socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  socklen_t len = sizeof(addr);
  int port = -1;
  if (bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) == 0 &&
      getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len) == 0)
    port = ntohs(addr.sin_port);
  close(fd);
  return port;
}

// Writes the reference CSV and fits it; returns the profile path.
fs::path fitted_reference(const fs::path& dir) {
  io::write_file_atomic(dir / "ref.csv", io::measurement_csv(fixture::reference_measurements()));
  const auto r = invoke({"fit", (dir / "ref.csv").string(), "-o", (dir / "profile.json").string()});
  REQUIRE(r.code == 0);
  return dir / "profile.json";
}

}  // namespace

TEST_CASE("cli fit", "[cli]") {
  const auto dir = testing::fresh_dir("cli_fit");
  const auto profile = fitted_reference(dir);
  const auto doc = json::parse(io::read_file(profile));
  CHECK(doc["fit_order"] == 15);
  const auto fitted = io::profile_from_json(doc);
  const double peak = fixture::reference_irradiance(0.0);
  CHECK(max_fit_residual(fitted, fixture::reference_measurements()) < 0.01 * peak);

  io::write_file_atomic(dir / "flat.csv", "distance_cm,irradiance_mW_cm2\n0,10\n4,10\n8,10\n");
  auto r = invoke({"fit", (dir / "flat.csv").string(), "--order", "0", "-o", (dir / "flat.json").string()});
  REQUIRE(r.code == 0);
  CHECK(io::profile_from_json(json::parse(io::read_file(dir / "flat.json"))).irradiance_at(0.03) == Approx(100.0).margin(1e-12));

  r = invoke({"fit", (dir / "missing.csv").string()});
  CHECK(r.code == uvgi::cli::kDataError);
  io::write_file_atomic(dir / "bad.csv", "distance_cm,irradiance_mW_cm2\n0,10\n1;2\n");
  r = invoke({"fit", (dir / "bad.csv").string(), "-o", (dir / "bad.json").string()});
  CHECK(r.code == uvgi::cli::kDataError);
  CHECK(r.err.find("line 3") != std::string::npos);
  CHECK(invoke({"fit"}).code == uvgi::cli::kUsageError);
  CHECK(invoke({"frobnicate"}).code == uvgi::cli::kUsageError);
}

TEST_CASE("cli plan reproduces the velocity triple", "[cli]") {
  const auto dir = testing::fresh_dir("cli_plan");
  const auto profile = fitted_reference(dir).string();
  const auto out = (dir / "plan.json").string();

  auto r = invoke({"plan", profile, "--k", "0.0867", "--rate", "90", "-o", out});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("D_req=26.56 J/m^2 v=0.570 m/s") != std::string::npos);
  CHECK(json::parse(io::read_file(out))["commanded_velocity_m_s"].get<double>() == Approx(0.57).margin(0.01));

  r = invoke({"plan", profile, "--rate", "99.9", "-o", out});
  REQUIRE(r.code == 0);
  CHECK(json::parse(io::read_file(out))["commanded_velocity_m_s"].get<double>() == Approx(0.19).margin(0.01));
  r = invoke({"plan", profile, "--rate", "99.999", "-o", out});
  REQUIRE(r.code == 0);
  CHECK(json::parse(io::read_file(out))["commanded_velocity_m_s"].get<double>() == Approx(0.11).margin(0.01));

  CHECK(invoke({"plan", profile, "--rate", "50", "-o", out}).code == uvgi::cli::kUsageError);
  CHECK(invoke({"plan", profile, "--k", "-1", "-o", out}).code == uvgi::cli::kUsageError);
  CHECK(invoke({"plan", (dir / "nope.json").string(), "-o", out}).code == uvgi::cli::kDataError);
  CHECK(invoke({"plan", profile, "--width", "0.005", "-o", out}).code == uvgi::cli::kDataError);
}

TEST_CASE("cli simulate and report", "[cli]") {
  const auto dir = testing::fresh_dir("cli_sim");
  const auto profile = fitted_reference(dir).string();
  const auto plan = (dir / "plan.json").string();
  REQUIRE(invoke({"plan", profile, "-o", plan}).code == 0);

  const auto constant = dir / "constant";
  auto r = invoke({"simulate", plan, "--profile", profile, "--motion", "constant", "-o", constant.string()});
  REQUIRE(r.code == 0);
  CHECK(json::parse(io::read_file(constant / "report.json"))["fraction_covered"] == 1.0);
  for (const char* f : {"heatmap.json", "report.json", "sensors.csv", "traces.csv", "telemetry.jsonl"})
    CHECK(fs::exists(constant / f));

  const auto trap = dir / "trap";
  REQUIRE(invoke({"simulate", plan, "--profile", profile, "-o", trap.string()}).code == 0);
  const auto doses = sensor_doses(trap / "sensors.csv");
  REQUIRE(doses.size() == 15);
  for (std::size_t mid : {6, 7, 8}) {
    CHECK(doses[0] > doses[mid]);
    CHECK(doses[14] > doses[mid]);
  }

  const auto aged = dir / "aged";
  REQUIRE(invoke({"simulate", plan, "--profile", profile, "--lamp-decay", "-o", aged.string()}).code == 0);
  const auto fresh_map = json::parse(io::read_file(trap / "heatmap.json"))["dose"].get<std::vector<double>>();
  const auto aged_map = json::parse(io::read_file(aged / "heatmap.json"))["dose"].get<std::vector<double>>();
  REQUIRE(fresh_map.size() == aged_map.size());
  for (std::size_t i = 0; i < fresh_map.size(); ++i) CHECK(aged_map[i] <= fresh_map[i]);

  // Deterministic under a fixed seed, even with sensor noise.
  const auto n1 = dir / "noise1", n2 = dir / "noise2";
  REQUIRE(invoke({"simulate", plan, "--profile", profile, "--sensor-noise", "--seed", "42", "-o", n1.string()}).code == 0);
  REQUIRE(invoke({"simulate", plan, "--profile", profile, "--sensor-noise", "--seed", "42", "-o", n2.string()}).code == 0);
  for (const char* f : {"heatmap.json", "sensors.csv", "traces.csv", "telemetry.jsonl"})
    CHECK(io::read_file(n1 / f) == io::read_file(n2 / f));

  CHECK(invoke({"simulate", plan, "--profile", profile, "--dt", "0.05", "-o", (dir / "x").string()}).code ==
        uvgi::cli::kUsageError);
  CHECK(invoke({"simulate", plan, "--profile", profile, "--motion", "jerky", "-o", (dir / "x").string()}).code ==
        uvgi::cli::kUsageError);
  CHECK(invoke({"simulate", plan, "-o", (dir / "x").string()}).code == uvgi::cli::kUsageError);

  r = invoke({"report", trap.string(), "--profile", profile, "--measurements", (dir / "ref.csv").string()});
  REQUIRE(r.code == 0);
  for (const char* f : {"sensor_bars.csv", "trace_S7.csv", "profile_curve.csv", "measured_points.csv"})
    CHECK(fs::exists(trap / "plots" / f));
  CHECK(r.out.find("BELOW") == std::string::npos);
  CHECK(invoke({"report", (dir / "nothing").string()}).code == uvgi::cli::kDataError);
}

TEST_CASE("cli serve startup errors", "[cli]") {
  const auto dir = testing::fresh_dir("cli_serve");
  io::write_file_atomic(dir / "file", "x");
  CHECK(invoke({"serve", "--port", "1", "--data-dir", (dir / "file").string()}).code == uvgi::cli::kRuntimeError);

  testing::LiveServer busy(dir / "busy");
  const auto r = invoke({"serve", "--port", std::to_string(busy.port()), "--data-dir", (dir / "data").string()});
  CHECK(r.code == uvgi::cli::kRuntimeError);
  CHECK(r.err.find("cannot bind") != std::string::npos);
}

TEST_CASE("cli serve answers until interrupted", "[cli]") {
  const auto dir = testing::fresh_dir("cli_serve_run");
  const int port = free_port();
  REQUIRE(port > 0);

  // The server's signal watcher must be the only thread accepting SIGTERM.
  sigset_t term, previous;
  sigemptyset(&term);
  sigaddset(&term, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &term, &previous);

  int code = -1;
  std::ostringstream out, err;
  std::thread serve([&] {
    code = uvgi::cli::run({"uvgi", "serve", "--port", std::to_string(port), "--data-dir", (dir / "data").string()},
                          out, err);
  });
  httplib::Client c("127.0.0.1", port);
  c.set_connection_timeout(0, 100000);
  httplib::Result res;
  for (int attempt = 0; attempt < 200 && !res; ++attempt) {
    res = c.Get("/scenes");
    if (!res) std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  CHECK(res);
  if (res) {
    CHECK(res->status == 200);
    CHECK(res->body == "[]");
  }

  kill(getpid(), SIGTERM);
  serve.join();
  pthread_sigmask(SIG_SETMASK, &previous, nullptr);
  CHECK(code == 0);
}

TEST_CASE("cli and service produce identical artifacts", "[cli][parity]") {
  const auto dir = testing::fresh_dir("cli_parity");
  const auto profile = fitted_reference(dir).string();
  const auto plan_path = (dir / "plan.json").string();
  REQUIRE(invoke({"plan", profile, "--k", "0.0867", "--rate", "90", "-o", plan_path}).code == 0);
  const auto run_dir = dir / "run";
  REQUIRE(invoke({"simulate", plan_path, "--profile", profile, "-o", run_dir.string()}).code == 0);

  testing::LiveServer server(dir / "service");
  auto c = server.client();
  auto res = c.Post("/profiles?order=15", io::read_file(dir / "ref.csv"), "text/csv");
  const std::string profile_id = json::parse(res->body)["id"];
  CHECK(json::parse(res->body)["profile"] == json::parse(io::read_file(profile)));
  res = c.Post("/scenes", json{{"width_m", 0.1}, {"length_m", 1.0}, {"profile_id", profile_id}}.dump(), "application/json");
  const std::string scene = json::parse(res->body)["id"];
  c.Put("/scenes/" + scene + "/region", R"({"vertices": [[0,0,0],[0.1,0,0],[0.1,1,0],[0,1,0]]})", "application/json");
  c.Put("/scenes/" + scene + "/params", R"({"k": 0.0867, "rate": 0.9})", "application/json");
  const auto http_plan = json::parse(c.Post("/scenes/" + scene + "/plan", "", "application/json")->body);
  const auto cli_plan = json::parse(io::read_file(plan_path));
  for (const char* key : {"commanded_velocity_m_s", "pass_spacing_m", "scale_factor", "d_min_J_m2", "d_req_J_m2"})
    CHECK(http_plan[key].get<double>() == Approx(cli_plan[key].get<double>()).epsilon(1e-9));
  CHECK(http_plan["waypoints"] == cli_plan["waypoints"]);

  const std::string run_id = json::parse(c.Post("/scenes/" + scene + "/execute", "", "application/json")->body)["run_id"];
  server.service().wait_for_run(run_id);
  const auto http_map = json::parse(c.Get("/runs/" + run_id + "/heatmap")->body);
  const auto cli_map = json::parse(io::read_file(run_dir / "heatmap.json"));
  CHECK(http_map["width"] == cli_map["width"]);
  CHECK(http_map["height"] == cli_map["height"]);
  const auto a = http_map["dose"].get<std::vector<double>>(), b = cli_map["dose"].get<std::vector<double>>();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == Approx(b[i]).epsilon(1e-9).margin(1e-12));

  const auto http_sensors = sensor_doses(server.service().store().run_dir(run_id) / "sensors.csv");
  const auto cli_sensors = sensor_doses(run_dir / "sensors.csv");
  REQUIRE(http_sensors.size() == cli_sensors.size());
  for (std::size_t i = 0; i < cli_sensors.size(); ++i)
    CHECK(http_sensors[i] == Approx(cli_sensors[i]).epsilon(1e-9));
  CHECK(json::parse(c.Get("/runs/" + run_id + "/report")->body) == json::parse(io::read_file(run_dir / "report.json")));
}
