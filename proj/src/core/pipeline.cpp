#include "uvgi/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uvgi/errors.hpp"

namespace uvgi {

MotionKind parse_motion_kind(const std::string& name) {
  if (name == "constant") return MotionKind::constant;
  if (name == "trapezoidal") return MotionKind::trapezoidal;
  throw ConfigError("unknown motion kind '" + name + "' (expected constant or trapezoidal)");
}

std::string to_string(MotionKind kind) {
  return kind == MotionKind::constant ? "constant" : "trapezoidal";
}

CoveragePlan make_plan(const IrradianceProfile& profile, const RegionSpec& region,
                       const ScenarioParams& params) {
  const DisinfectionSpec spec(params.k, params.rate);
  const KernelMask mask = build_kernel(profile, params.exposed_diameter, params.kernel_n);
  PlannerConfig config;
  config.v_max = params.v_max;
  config.pass_spacing = params.pass_spacing;
  return plan_lawnmower(region, config, mask, spec);
}

DoseGrid surface_grid(const RegionSpec& region, double surface_width, double surface_length,
                      double resolution) {
  double lo_x = 0.0, lo_y = 0.0, hi_x = region.length, hi_y = region.width;
  const Vec3 corners[] = {{0, 0, 0},
                          {surface_width, 0, 0},
                          {surface_width, surface_length, 0},
                          {0, surface_length, 0}};
  for (const auto& c : corners) {
    const Point2 p = region.to_region(c);
    lo_x = std::min(lo_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_x = std::max(hi_x, p.x);
    hi_y = std::max(hi_y, p.y);
  }
  auto down = [resolution](double v) { return std::floor(v / resolution + 1e-9) * resolution; };
  auto up = [resolution](double v) { return std::ceil(v / resolution - 1e-9) * resolution; };
  const Point2 origin{down(lo_x), down(lo_y)};
  const auto width = static_cast<std::size_t>(std::llround((up(hi_x) - origin.x) / resolution));
  const auto height = static_cast<std::size_t>(std::llround((up(hi_y) - origin.y) / resolution));
  DoseGrid grid(origin, resolution, std::max<std::size_t>(width, 1), std::max<std::size_t>(height, 1));
  grid.set_region_polygon(region.outline);
  return grid;
}

RunArtifacts run_plan(const IrradianceProfile& profile, const RegionSpec& region,
                      const CoveragePlan& plan, const ScenarioParams& params, DoseGrid grid,
                      std::function<void(const ProgressSnapshot&)> on_progress) {
  const KernelMask mask = build_kernel(profile, params.exposed_diameter, params.kernel_n);
  MotionProfile motion{params.motion, params.accel, plan.commanded_velocity};
  const LampDecayModel lamp = params.lamp_decay ? fixture::reference_lamp_droop() : LampDecayModel{};
  VirtualSensorArray sensors = default_sensor_array(region.length, 0.5 * region.width);
  sensors.field = profile;
  sensors.inject_noise = params.sensor_noise;

  SimulationOptions options;
  options.dt = params.dt;
  options.seed = params.seed;
  options.on_progress = std::move(on_progress);

  RunArtifacts artifacts{simulate_execution(plan, mask, motion, lamp, sensors, std::move(grid), options),
                         sensors, {}, {}, {}, {}};
  artifacts.report = coverage_report(artifacts.result.grid, plan.d_req);
  artifacts.heatmap = io::heatmap_export(artifacts.result.grid, plan.d_req);
  artifacts.sensor_csv = io::sensor_csv_export(artifacts.result, artifacts.sensors);
  artifacts.telemetry = io::telemetry_jsonl(artifacts.result.telemetry);
  return artifacts;
}

void write_run_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts) {
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "heatmap.json", io::dump(artifacts.heatmap));
  io::write_file_atomic(dir / "report.json", io::dump(io::report_to_json(artifacts.report)));
  io::write_file_atomic(dir / "sensors.csv", artifacts.sensor_csv.doses);
  io::write_file_atomic(dir / "traces.csv", artifacts.sensor_csv.traces);
  io::write_file_atomic(dir / "telemetry.jsonl", artifacts.telemetry);
}

}  // namespace uvgi
