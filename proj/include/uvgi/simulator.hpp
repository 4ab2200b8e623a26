#pragma once

// Execution of a coverage plan against a discretized dose accumulator:
// the idealized constant-velocity stamping model, the time-stepped
// integrator with trapezoidal motion and lamp droop, and a virtual UV
// sensor array.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uvgi/planner.hpp"
#include "uvgi/radiometry.hpp"

namespace uvgi {

// Accumulated dose (J/m^2) over an axis-aligned grid in region coordinates.
// Cells are stored row-major: index = iy * width + ix.
class DoseGrid {
 public:
  DoseGrid(Point2 origin, double resolution, std::size_t width, std::size_t height);

  // Grid exactly covering the region's bounding rectangle, with the region
  // mask set from the region outline.
  static DoseGrid for_region(const RegionSpec& region, double resolution = 0.01);

  Point2 origin() const noexcept { return origin_; }
  double resolution() const noexcept { return resolution_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return cells_.size(); }

  double at(std::size_t ix, std::size_t iy) const { return cells_[iy * width_ + ix]; }
  std::span<const double> cells() const noexcept { return cells_; }
  bool in_region(std::size_t ix, std::size_t iy) const { return region_mask_[iy * width_ + ix] != 0; }
  std::span<const std::uint8_t> region_mask() const noexcept { return region_mask_; }
  std::size_t region_cell_count() const;

  Point2 cell_center(std::size_t ix, std::size_t iy) const;
  bool contains(Point2 p) const;

  // Adds a non-negative dose; negative or non-finite values are rejected.
  void deposit(std::size_t ix, std::size_t iy, double dose);

  // Marks cells whose centres fall inside the polygon as region cells.
  void set_region_polygon(std::span<const Point2> polygon);
  void set_region_mask(std::vector<std::uint8_t> mask);

 private:
  Point2 origin_;
  double resolution_;
  std::size_t width_;
  std::size_t height_;
  std::vector<double> cells_;
  std::vector<std::uint8_t> region_mask_;
};

enum class MotionKind { constant, trapezoidal };

struct MotionProfile {
  MotionKind kind = MotionKind::trapezoidal;
  double accel = 1.0;  // m/s^2, trapezoidal only
  double commanded_velocity = 0.0;
};

struct VirtualSensorArray {
  std::vector<Point2> positions;
  double noise_tolerance = 10.0;  // W/m^2, reported; injected only when inject_noise
  double saturation = 400.0;      // W/m^2
  double sample_rate = 100.0;     // Hz, for traces
  double sensing_radius = 0.15;   // m from beam centre
  bool inject_noise = false;
  // Radial field the sensors sample. When absent they sample the kernel mask.
  std::optional<IrradianceProfile> field;
};

// `count` sensors evenly spaced from x = 0 to x = length along y = lateral_offset.
VirtualSensorArray default_sensor_array(double length, double lateral_offset,
                                        std::size_t count = 15);

struct TracePoint {
  double t;
  double irradiance;
};

struct TelemetrySample {
  double t;
  Point2 position;
  double speed;
};

struct RunResult {
  DoseGrid grid;
  std::vector<double> sensor_doses;
  std::vector<std::vector<TracePoint>> sensor_traces;
  std::vector<TelemetrySample> telemetry;
  double elapsed = 0.0;
};

struct ProgressSnapshot {
  double t;
  Point2 position;
  double speed;
  const DoseGrid& grid;
};

struct SimulationOptions {
  double dt = 0.001;
  std::uint64_t seed = 0;
  double telemetry_rate = 100.0;    // Hz, capped at 100
  double progress_interval = 0.25;  // simulated seconds between progress callbacks
  std::function<void(const ProgressSnapshot&)> on_progress;
};

// Steps the kernel centre along the waypoint polyline at element-size
// increments, each stamp holding for element_size / commanded_velocity
// (half weight at the two path ends). Returns the updated grid.
DoseGrid accumulate_static(const CoveragePlan& plan, const KernelMask& mask, DoseGrid grid);

// Time-stepped execution. Throws ConfigError when v * dt exceeds one element.
RunResult simulate_execution(const CoveragePlan& plan, const KernelMask& mask,
                             const MotionProfile& motion, const LampDecayModel& lamp,
                             const VirtualSensorArray& sensors, DoseGrid grid,
                             const SimulationOptions& options = {});

// Adds `mask * weight` into `grid` with the mask centred at `center`,
// snapping the mask corner to the nearest grid line.
void stamp_kernel(DoseGrid& grid, const KernelMask& mask, Point2 center, double weight);

struct CoverageReport {
  double d_req = 0.0;
  std::size_t region_cells = 0;
  std::size_t covered_cells = 0;
  double fraction_covered = 0.0;
  double min_dose = 0.0;
  double max_dose = 0.0;
  double mean_dose = 0.0;
  std::vector<std::pair<std::size_t, std::size_t>> failing_cells;  // (ix, iy)
};

// Cells within a relative kCoverageTolerance of d_req count as covered.
inline constexpr double kCoverageTolerance = 1e-9;

CoverageReport coverage_report(const DoseGrid& grid, double d_req);

}  // namespace uvgi
