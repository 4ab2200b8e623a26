#include "uvgi/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "uvgi/errors.hpp"

namespace uvgi::io {

namespace {

constexpr std::string_view kMeasurementHeader = "distance_cm,irradiance_mW_cm2";

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size() && std::isfinite(out);
}

// Shortest representation that round-trips exactly.
std::string num(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

template <typename T>
T required(const json& doc, const char* key) {
  if (!doc.is_object() || !doc.contains(key)) throw ParseError(std::string("missing field '") + key + "'");
  try {
    return doc.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::vector<IrradianceMeasurement> parse_measurement_csv(std::string_view text) {
  std::vector<IrradianceMeasurement> out;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != kMeasurementHeader) {
        throw ParseError("line " + std::to_string(line_no) + ": expected header '" +
                         std::string(kMeasurementHeader) + "'");
      }
      header_seen = true;
      continue;
    }
    const auto comma = line.find(',');
    double distance_cm = 0.0;
    double irradiance = 0.0;
    if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos ||
        !parse_double(line.substr(0, comma), distance_cm) ||
        !parse_double(line.substr(comma + 1), irradiance)) {
      throw ParseError("line " + std::to_string(line_no) + ": expected two numeric fields, got '" +
                       std::string(line) + "'");
    }
    if (distance_cm < 0.0 || irradiance < 0.0) {
      throw ParseError("line " + std::to_string(line_no) + ": values must be non-negative");
    }
    out.push_back({distance_cm * kMetresPerCm, irradiance * kWattsPerM2PerMilliwattCm2});
  }
  if (!header_seen) throw ParseError("line 1: empty measurement file");
  return out;
}

std::string measurement_csv(const std::vector<IrradianceMeasurement>& measurements) {
  std::string out(kMeasurementHeader);
  out += '\n';
  for (const auto& m : measurements) {
    out += num(m.distance / kMetresPerCm) + "," +
           num(m.irradiance / kWattsPerM2PerMilliwattCm2) + "\n";
  }
  return out;
}

json profile_to_json(const IrradianceProfile& profile) {
  return json{{"coefficients", profile.coefficients()},
              {"domain_scale", profile.domain_scale()},
              {"cutoff_radius_m", profile.cutoff_radius()},
              {"calibration_height_m", profile.calibration_height()},
              {"fit_order", profile.fit_order()}};
}

IrradianceProfile profile_from_json(const json& doc) {
  try {
    return IrradianceProfile(required<std::vector<double>>(doc, "coefficients"),
                             required<double>(doc, "domain_scale"),
                             required<double>(doc, "cutoff_radius_m"),
                             required<double>(doc, "calibration_height_m"),
                             required<int>(doc, "fit_order"));
  } catch (const DomainError& e) {
    throw ParseError(std::string("invalid profile: ") + e.what());
  }
}

json plan_to_json(const CoveragePlan& plan) {
  json waypoints = json::array();
  for (const auto& p : plan.waypoints) waypoints.push_back({p.x, p.y});
  return json{{"waypoints", waypoints},
              {"commanded_velocity_m_s", plan.commanded_velocity},
              {"pass_spacing_m", plan.pass_spacing},
              {"scale_factor", plan.scale_factor},
              {"d_min_J_m2", plan.d_min_at_vmax},
              {"d_req_J_m2", plan.d_req}};
}

CoveragePlan plan_from_json(const json& doc) {
  CoveragePlan plan;
  const auto waypoints = required<std::vector<std::vector<double>>>(doc, "waypoints");
  for (const auto& w : waypoints) {
    if (w.size() != 2) throw ParseError("waypoint must be [x, y]");
    plan.waypoints.push_back({w[0], w[1]});
  }
  plan.commanded_velocity = required<double>(doc, "commanded_velocity_m_s");
  plan.pass_spacing = required<double>(doc, "pass_spacing_m");
  plan.scale_factor = required<double>(doc, "scale_factor");
  plan.d_min_at_vmax = required<double>(doc, "d_min_J_m2");
  plan.d_req = required<double>(doc, "d_req_J_m2");
  plan.pass_count = plan.waypoints.size() / 2;
  if (!(plan.commanded_velocity > 0.0)) throw ParseError("commanded velocity must be positive");
  return plan;
}

json report_to_json(const CoverageReport& report) {
  json failing = json::array();
  for (const auto& [ix, iy] : report.failing_cells) failing.push_back({ix, iy});
  return json{{"d_req_J_m2", report.d_req},
              {"region_cells", report.region_cells},
              {"covered_cells", report.covered_cells},
              {"fraction_covered", report.fraction_covered},
              {"min_dose_J_m2", report.min_dose},
              {"max_dose_J_m2", report.max_dose},
              {"mean_dose_J_m2", report.mean_dose},
              {"failing_cells", failing}};
}

json heatmap_export(const DoseGrid& grid, double d_req) {
  if (!(d_req > 0.0)) throw DomainError("required dose must be positive");
  json dose = json::array();
  json normalized = json::array();
  const double covered = d_req * (1.0 - kCoverageTolerance);
  for (double d : grid.cells()) {
    dose.push_back(d);
    normalized.push_back(d >= covered ? 1.0 : d / d_req);
  }
  return json{{"width", grid.width()},
              {"height", grid.height()},
              {"resolution_m", grid.resolution()},
              {"origin_m", {grid.origin().x, grid.origin().y}},
              {"d_req_J_m2", d_req},
              {"dose", dose},
              {"normalized", normalized}};
}

SensorCsv sensor_csv_export(const RunResult& result, const VirtualSensorArray& sensors) {
  SensorCsv csv;
  csv.doses = "id,x_m,y_m,dose_J_m2\n";
  for (std::size_t i = 0; i < sensors.positions.size(); ++i) {
    const double dose = i < result.sensor_doses.size() ? result.sensor_doses[i] : 0.0;
    csv.doses += "S" + std::to_string(i) + "," + num(sensors.positions[i].x) + "," +
                 num(sensors.positions[i].y) + "," + num(dose) + "\n";
  }
  csv.traces = "sensor_id,t_s,irradiance_W_m2\n";
  for (std::size_t i = 0; i < result.sensor_traces.size(); ++i) {
    const std::string id = "S" + std::to_string(i);
    for (const auto& p : result.sensor_traces[i])
      csv.traces += id + "," + num(p.t) + "," + num(p.irradiance) + "\n";
  }
  return csv;
}

std::string telemetry_jsonl(const std::vector<TelemetrySample>& telemetry) {
  std::string out;
  for (const auto& s : telemetry) {
    out += json{{"t_s", s.t}, {"x_m", s.position.x}, {"y_m", s.position.y}, {"speed_m_s", s.speed}}
               .dump();
    out += '\n';
  }
  return out;
}

std::string dump(const json& doc) { return doc.dump(2) + "\n"; }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace uvgi::io
