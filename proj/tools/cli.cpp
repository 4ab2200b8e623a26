#include "cli.hpp"

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <iomanip>
#include <iostream>
#include <optional>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "uvgi/errors.hpp"
#include "uvgi/io.hpp"
#include "uvgi/pipeline.hpp"
#include "uvgi/service/http_server.hpp"
#include "uvgi/service/service.hpp"

namespace uvgi::cli {

namespace fs = std::filesystem;

namespace {

// Maps to kUsageError.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Maps to kDataError.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitArgs {
  std::string input;
  int order = fixture::kFitOrder;
  std::optional<double> cutoff;
  double height = 0.3;
  std::string output = "profile.json";
};

struct GeometryArgs {
  double width = 0.1;
  double length = 1.0;
  std::size_t n = fixture::kKernelSize;
  double d_exposed = fixture::kExposedDiameter;
};

struct PlanArgs {
  std::string profile;
  double k = fixture::kEbolaSudanK;
  double rate_percent = 90.0;
  double v_max = 1.0;
  std::optional<double> spacing;
  GeometryArgs geometry;
  std::string output = "plan.json";
};

struct SimulateArgs {
  std::string plan;
  std::string profile;
  std::string motion = "trapezoidal";
  double accel = 1.0;
  double dt = 0.001;
  bool lamp_decay = false;
  std::uint64_t seed = 0;
  bool noise = false;
  double resolution = 0.01;
  GeometryArgs geometry;
  std::string out_dir = "run";
};

struct ReportArgs {
  std::string run_dir;
  std::string profile;
  std::string measurements;
  std::size_t sensor = 7;
  std::string out_dir;
};

struct ServeArgs {
  std::string host = "127.0.0.1";
  int port = 8080;
  std::string data_dir = "uvgi-data";
};

std::string read_input(const std::string& path) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw DataError("cannot read '" + path + "': no such file");
  return io::read_file(path);
}

io::json read_json(const std::string& path) {
  try {
    return io::json::parse(read_input(path));
  } catch (const io::json::exception& e) {
    throw DataError("'" + path + "' is not valid JSON: " + e.what());
  }
}

IrradianceProfile load_profile(const std::string& path) {
  try {
    return io::profile_from_json(read_json(path));
  } catch (const ParseError& e) {
    throw DataError("'" + path + "': " + e.what());
  }
}

double rate_from_percent(double percent) {
  auto level = match_disinfection_level(percent / 100.0);
  if (!level) {
    std::ostringstream msg;
    msg << "--rate " << percent << " is not a supported level (90, 99, 99.9, 99.99, 99.999)";
    throw UsageError(msg.str());
  }
  return *level;
}

std::string fixed(double v, int digits) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

void add_geometry(CLI::App* cmd, GeometryArgs& g) {
  cmd->add_option("--width", g.width, "Region width (short axis), m")->check(CLI::PositiveNumber);
  cmd->add_option("--length", g.length, "Region length (long axis), m")->check(CLI::PositiveNumber);
  cmd->add_option("-n,--kernel-size", g.n, "Kernel mask dimension N")->check(CLI::PositiveNumber);
  cmd->add_option("--d-exposed", g.d_exposed, "Exposed-area diameter, m")->check(CLI::PositiveNumber);
}

int cmd_fit(const FitArgs& a, std::ostream& out) {
  std::vector<IrradianceMeasurement> samples;
  try {
    samples = io::parse_measurement_csv(read_input(a.input));
  } catch (const ParseError& e) {
    throw DataError(a.input + ": " + e.what());
  }
  FitOptions options;
  options.cutoff_radius = a.cutoff;
  options.calibration_height = a.height;
  IrradianceProfile profile = [&] {
    try {
      return fit_profile(samples, a.order, options);
    } catch (const FitError& e) {
      throw DataError(e.what());
    }
  }();
  io::write_file_atomic(a.output, io::dump(io::profile_to_json(profile)));

  double peak = 0.0;
  for (const auto& m : samples) peak = std::max(peak, m.irradiance);
  const double residual = max_fit_residual(profile, samples);
  out << "samples=" << samples.size() << " order=" << a.order
      << " max_residual=" << residual << " W/m^2";
  if (peak > 0.0) out << " (" << fixed(100.0 * residual / peak, 4) << "% of peak)";
  out << " cutoff=" << profile.cutoff_radius() << " m -> " << a.output << "\n";
  return kOk;
}

int cmd_plan(const PlanArgs& a, std::ostream& out) {
  const double rate = rate_from_percent(a.rate_percent);
  const IrradianceProfile profile = load_profile(a.profile);
  ScenarioParams params;
  params.k = a.k;
  params.rate = rate;
  params.v_max = a.v_max;
  params.pass_spacing = a.spacing;
  params.kernel_n = a.geometry.n;
  params.exposed_diameter = a.geometry.d_exposed;
  const RegionSpec region = rectangular_region(a.geometry.width, a.geometry.length);
  const CoveragePlan plan = make_plan(profile, region, params);
  io::write_file_atomic(a.output, io::dump(io::plan_to_json(plan)));
  out << "D_req=" << fixed(plan.d_req, 2) << " J/m^2 v=" << fixed(plan.commanded_velocity, 3)
      << " m/s (SF=" << fixed(plan.scale_factor, 4) << ", D_min=" << fixed(plan.d_min_at_vmax, 3)
      << " J/m^2, passes=" << plan.pass_count << ") -> " << a.output << "\n";
  return kOk;
}

int cmd_simulate(const SimulateArgs& a, std::ostream& out) {
  CoveragePlan plan;
  try {
    plan = io::plan_from_json(read_json(a.plan));
  } catch (const ParseError& e) {
    throw DataError(a.plan + ": " + e.what());
  }
  const IrradianceProfile profile = load_profile(a.profile);
  ScenarioParams params;
  params.motion = parse_motion_kind(a.motion);
  params.accel = a.accel;
  params.dt = a.dt;
  params.lamp_decay = a.lamp_decay;
  params.seed = a.seed;
  params.sensor_noise = a.noise;
  params.resolution = a.resolution;
  params.kernel_n = a.geometry.n;
  params.exposed_diameter = a.geometry.d_exposed;
  const double element = a.geometry.d_exposed / static_cast<double>(a.geometry.n);
  if (plan.commanded_velocity * a.dt > element) {
    throw ConfigError("--dt " + std::to_string(a.dt) + " lets the beam skip cells at " +
                      std::to_string(plan.commanded_velocity) + " m/s");
  }
  const RegionSpec region = rectangular_region(a.geometry.width, a.geometry.length);
  const auto artifacts = run_plan(profile, region, plan, params,
                                  surface_grid(region, a.geometry.width, a.geometry.length, a.resolution));
  write_run_artifacts(a.out_dir, artifacts);

  const auto& r = artifacts.report;
  out << "coverage=" << fixed(r.fraction_covered, 4) << " min=" << fixed(r.min_dose, 3)
      << " max=" << fixed(r.max_dose, 3) << " mean=" << fixed(r.mean_dose, 3)
      << " J/m^2 (D_req=" << fixed(r.d_req, 3) << ") elapsed=" << fixed(artifacts.result.elapsed, 3)
      << " s -> " << a.out_dir << "\n";
  return kOk;
}

std::vector<std::vector<std::string>> read_csv_rows(const std::string& path) {
  std::istringstream in(read_input(path));
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ls(line);
    std::string f;
    while (std::getline(ls, f, ',')) fields.push_back(f);
    rows.push_back(std::move(fields));
  }
  return rows;
}

int cmd_report(const ReportArgs& a, std::ostream& out) {
  const fs::path dir(a.run_dir);
  const io::json report = read_json((dir / "report.json").string());
  const double d_req = report.at("d_req_J_m2").get<double>();
  out << "coverage=" << fixed(report.at("fraction_covered").get<double>(), 4)
      << " cells=" << report.at("covered_cells").get<std::size_t>() << "/"
      << report.at("region_cells").get<std::size_t>()
      << " min=" << fixed(report.at("min_dose_J_m2").get<double>(), 3)
      << " max=" << fixed(report.at("max_dose_J_m2").get<double>(), 3)
      << " mean=" << fixed(report.at("mean_dose_J_m2").get<double>(), 3)
      << " J/m^2 D_req=" << fixed(d_req, 3) << "\n";

  const fs::path out_dir = a.out_dir.empty() ? dir / "plots" : fs::path(a.out_dir);
  fs::create_directories(out_dir);

  // Per-sensor dose bars against the required dose.
  std::string bars = "sensor_id,x_m,dose_J_m2,d_req_J_m2,meets_required\n";
  for (const auto& row : read_csv_rows((dir / "sensors.csv").string())) {
    if (row.size() != 4) throw DataError("sensors.csv: expected 4 columns");
    const double dose = std::stod(row[3]);
    bars += row[0] + "," + row[1] + "," + row[3] + "," + fixed(d_req, 6) + "," +
            (dose >= d_req ? "1" : "0") + "\n";
    out << row[0] << " " << fixed(dose, 2) << " J/m^2" << (dose >= d_req ? "" : "  BELOW D_req") << "\n";
  }
  io::write_file_atomic(out_dir / "sensor_bars.csv", bars);

  // Time vs irradiance for one sensor.
  const std::string sensor_id = "S" + std::to_string(a.sensor);
  std::string trace = "t_s,irradiance_W_m2\n";
  for (const auto& row : read_csv_rows((dir / "traces.csv").string())) {
    if (row.size() == 3 && row[0] == sensor_id) trace += row[1] + "," + row[2] + "\n";
  }
  io::write_file_atomic(out_dir / ("trace_" + sensor_id + ".csv"), trace);

  // Distance vs irradiance of the fitted profile, with measured samples.
  if (!a.profile.empty()) {
    const IrradianceProfile profile = load_profile(a.profile);
    std::string curve = "r_m,irradiance_W_m2\n";
    const int steps = 160;
    for (int i = 0; i <= steps; ++i) {
      const double r = profile.cutoff_radius() * i / steps;
      curve += fixed(r, 6) + "," + fixed(profile.irradiance_at(r), 6) + "\n";
    }
    io::write_file_atomic(out_dir / "profile_curve.csv", curve);
  }
  if (!a.measurements.empty()) {
    std::vector<IrradianceMeasurement> samples;
    try {
      samples = io::parse_measurement_csv(read_input(a.measurements));
    } catch (const ParseError& e) {
      throw DataError(a.measurements + ": " + e.what());
    }
    std::string measured = "r_m,irradiance_W_m2\n";
    for (const auto& m : samples) measured += fixed(m.distance, 6) + "," + fixed(m.irradiance, 6) + "\n";
    io::write_file_atomic(out_dir / "measured_points.csv", measured);
  }
  out << "plot data -> " << out_dir.string() << "\n";
  return kOk;
}

int cmd_serve(const ServeArgs& a, std::ostream& out, std::ostream& err) {
  std::unique_ptr<service::DisinfectionService> svc;
  try {
    svc = std::make_unique<service::DisinfectionService>(a.data_dir);
  } catch (const std::exception& e) {
    err << "error: cannot open data directory: " << e.what() << "\n";
    return kRuntimeError;
  }
  service::HttpServer server(*svc);
  if (!server.bind(a.host, a.port)) {
    err << "error: cannot bind " << a.host << ":" << a.port << "\n";
    return kRuntimeError;
  }

  // Dedicated thread turns SIGINT/SIGTERM into a clean stop.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);
  std::thread watcher([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });

  out << "serving on http://" << a.host << ":" << a.port << " (data: " << a.data_dir << ")"
      << std::endl;
  server.listen();
  pthread_kill(watcher.native_handle(), SIGTERM);
  watcher.join();
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"UV germicidal coverage planner and dose simulator", "uvgi"};
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a radial irradiance profile to a measurement CSV");
  fit_cmd->add_option("measurements", fit.input, "CSV with distance_cm,irradiance_mW_cm2")->required();
  fit_cmd->add_option("--order", fit.order, "Polynomial order")->check(CLI::NonNegativeNumber);
  fit_cmd->add_option("--cutoff", fit.cutoff, "Cutoff radius, m (default: largest distance)");
  fit_cmd->add_option("--height", fit.height, "Calibration height, m")->check(CLI::PositiveNumber);
  fit_cmd->add_option("-o,--output", fit.output, "Profile JSON path");

  PlanArgs plan;
  auto* plan_cmd = app.add_subcommand("plan", "Plan a lawnmower sweep and its commanded velocity");
  plan_cmd->add_option("profile", plan.profile, "Profile JSON")->required();
  plan_cmd->add_option("--k", plan.k, "UV rate constant, m^2/J")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--rate", plan.rate_percent, "Disinfection rate, percent");
  plan_cmd->add_option("--vmax", plan.v_max, "Maximum end-effector speed, m/s")->check(CLI::PositiveNumber);
  plan_cmd->add_option("--spacing", plan.spacing, "Pass spacing, m (default d_exposed/2)")
      ->check(CLI::PositiveNumber);
  add_geometry(plan_cmd, plan.geometry);
  plan_cmd->add_option("-o,--output", plan.output, "Plan JSON path");

  SimulateArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Execute a plan against the dose grid");
  sim_cmd->add_option("plan", sim.plan, "Plan JSON")->required();
  sim_cmd->add_option("--profile", sim.profile, "Profile JSON")->required();
  sim_cmd->add_option("--motion", sim.motion, "constant or trapezoidal")
      ->check(CLI::IsMember({"constant", "trapezoidal"}));
  sim_cmd->add_option("--accel", sim.accel, "Acceleration, m/s^2")->check(CLI::PositiveNumber);
  sim_cmd->add_option("--dt", sim.dt, "Time step, s")->check(CLI::PositiveNumber);
  sim_cmd->add_flag("--lamp-decay", sim.lamp_decay, "Apply the lamp droop table");
  sim_cmd->add_option("--seed", sim.seed, "Seed for sensor noise");
  sim_cmd->add_flag("--sensor-noise", sim.noise, "Inject uniform sensor noise");
  sim_cmd->add_option("--resolution", sim.resolution, "Grid resolution, m")->check(CLI::PositiveNumber);
  add_geometry(sim_cmd, sim.geometry);
  sim_cmd->add_option("-o,--out", sim.out_dir, "Run directory");

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "Summarize a run and export plot data");
  report_cmd->add_option("run_dir", report.run_dir, "Run directory")->required();
  report_cmd->add_option("--profile", report.profile, "Profile JSON for the distance/irradiance curve");
  report_cmd->add_option("--measurements", report.measurements, "Measurement CSV to overlay");
  report_cmd->add_option("--sensor", report.sensor, "Sensor index for the trace export");
  report_cmd->add_option("-o,--out", report.out_dir, "Plot data directory (default <run>/plots)");

  ServeArgs serve;
  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  serve_cmd->add_option("--host", serve.host, "Bind address")->envname("UVGI_BIND");
  serve_cmd->add_option("--port", serve.port, "Port")->envname("UVGI_PORT")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--data-dir", serve.data_dir, "Data directory")->envname("UVGI_DATA_DIR");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (plan_cmd->parsed()) return cmd_plan(plan, out);
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
    if (report_cmd->parsed()) return cmd_report(report, out);
    if (serve_cmd->parsed()) return cmd_serve(serve, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
    return kUsageError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const DomainError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  } catch (const PlanningError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}

}  // namespace uvgi::cli
