#pragma once

// On-disk and on-wire document formats shared by the CLI and the service.
//
//   measurement CSV   distance_cm,irradiance_mW_cm2
//   profile JSON      {coefficients[], domain_scale, cutoff_radius_m, calibration_height_m, fit_order}
//   plan JSON         {waypoints[[x,y]...], commanded_velocity_m_s, pass_spacing_m, scale_factor,
//                      d_min_J_m2, d_req_J_m2}
//   heatmap JSON      {width, height, resolution_m, origin_m, d_req_J_m2, dose[], normalized[]}
//   sensor CSV        id,x_m,y_m,dose_J_m2
//   trace CSV         sensor_id,t_s,irradiance_W_m2
//   telemetry         one JSON object per line: {t_s, x_m, y_m, speed_m_s}

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "uvgi/planner.hpp"
#include "uvgi/radiometry.hpp"
#include "uvgi/simulator.hpp"

namespace uvgi::io {

using nlohmann::json;

// 1 cm = 0.01 m, 1 mW/cm^2 = 10 W/m^2.
inline constexpr double kMetresPerCm = 0.01;
inline constexpr double kWattsPerM2PerMilliwattCm2 = 10.0;

// Parses the measurement CSV into SI units. Throws ParseError naming the
// offending 1-based line.
std::vector<IrradianceMeasurement> parse_measurement_csv(std::string_view text);
std::string measurement_csv(const std::vector<IrradianceMeasurement>& measurements);

json profile_to_json(const IrradianceProfile& profile);
IrradianceProfile profile_from_json(const json& doc);

json plan_to_json(const CoveragePlan& plan);
CoveragePlan plan_from_json(const json& doc);

json report_to_json(const CoverageReport& report);

// Per-cell raw dose plus min(dose / d_req, 1), row-major. Covered cells (see
// coverage_report) normalize to exactly 1.
json heatmap_export(const DoseGrid& grid, double d_req);

struct SensorCsv {
  std::string doses;
  std::string traces;
};
SensorCsv sensor_csv_export(const RunResult& result, const VirtualSensorArray& sensors);

std::string telemetry_jsonl(const std::vector<TelemetrySample>& telemetry);

// Stable text form: 2-space indent, trailing newline.
std::string dump(const json& doc);

std::string read_file(const std::filesystem::path& path);
// Writes through a temporary file and renames into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace uvgi::io
