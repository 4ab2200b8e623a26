#pragma once

// End-to-end plan and run flow shared by the CLI and the HTTP service, so
// both produce identical artifacts for identical inputs.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "uvgi/fixture.hpp"
#include "uvgi/io.hpp"
#include "uvgi/planner.hpp"
#include "uvgi/radiometry.hpp"
#include "uvgi/simulator.hpp"

namespace uvgi {

struct ScenarioParams {
  double k = fixture::kEbolaSudanK;
  double rate = 0.90;
  double v_max = 1.0;
  std::optional<double> pass_spacing;
  MotionKind motion = MotionKind::trapezoidal;
  double accel = 1.0;
  bool lamp_decay = false;
  double exposed_diameter = fixture::kExposedDiameter;
  std::size_t kernel_n = fixture::kKernelSize;
  double resolution = 0.01;
  double dt = 0.001;
  std::uint64_t seed = 0;
  bool sensor_noise = false;
};

MotionKind parse_motion_kind(const std::string& name);
std::string to_string(MotionKind kind);

CoveragePlan make_plan(const IrradianceProfile& profile, const RegionSpec& region,
                       const ScenarioParams& params);

// Grid in region coordinates covering both the region rectangle and the
// surface rectangle (0,0,0)-(surface_width, surface_length, 0).
DoseGrid surface_grid(const RegionSpec& region, double surface_width, double surface_length,
                      double resolution);

struct RunArtifacts {
  RunResult result;
  VirtualSensorArray sensors;
  CoverageReport report;
  io::json heatmap;
  io::SensorCsv sensor_csv;
  std::string telemetry;
};

// Simulates `plan` over `grid` with the default sensor bar along the
// region's centre line, sampling `profile`.
RunArtifacts run_plan(const IrradianceProfile& profile, const RegionSpec& region,
                      const CoveragePlan& plan, const ScenarioParams& params, DoseGrid grid,
                      std::function<void(const ProgressSnapshot&)> on_progress = {});

// heatmap.json, report.json, sensors.csv, traces.csv, telemetry.jsonl
void write_run_artifacts(const std::filesystem::path& dir, const RunArtifacts& artifacts);

}  // namespace uvgi
