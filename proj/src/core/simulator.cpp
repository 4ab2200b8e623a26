#include "uvgi/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "uvgi/errors.hpp"

namespace uvgi {

DoseGrid::DoseGrid(Point2 origin, double resolution, std::size_t width, std::size_t height)
    : origin_(origin),
      resolution_(resolution),
      width_(width),
      height_(height),
      cells_(width * height, 0.0),
      region_mask_(width * height, 1) {
  if (!(resolution_ > 0.0)) throw ConfigError("grid resolution must be positive");
}

DoseGrid DoseGrid::for_region(const RegionSpec& region, double resolution) {
  if (!(resolution > 0.0)) throw ConfigError("grid resolution must be positive");
  auto cells_for = [resolution](double extent) {
    return static_cast<std::size_t>(std::max(1.0, std::ceil(extent / resolution - 1e-9)));
  };
  DoseGrid grid({0.0, 0.0}, resolution, cells_for(region.length), cells_for(region.width));
  if (region.outline.size() >= 3) grid.set_region_polygon(region.outline);
  return grid;
}

std::size_t DoseGrid::region_cell_count() const {
  return static_cast<std::size_t>(std::count(region_mask_.begin(), region_mask_.end(), 1));
}

Point2 DoseGrid::cell_center(std::size_t ix, std::size_t iy) const {
  return {origin_.x + (static_cast<double>(ix) + 0.5) * resolution_,
          origin_.y + (static_cast<double>(iy) + 0.5) * resolution_};
}

bool DoseGrid::contains(Point2 p) const {
  const double x_max = origin_.x + static_cast<double>(width_) * resolution_;
  const double y_max = origin_.y + static_cast<double>(height_) * resolution_;
  return p.x >= origin_.x && p.x <= x_max && p.y >= origin_.y && p.y <= y_max;
}

void DoseGrid::deposit(std::size_t ix, std::size_t iy, double dose) {
  if (!(dose >= 0.0) || !std::isfinite(dose)) throw DomainError("deposited dose must be >= 0");
  cells_[iy * width_ + ix] += dose;
}

void DoseGrid::set_region_polygon(std::span<const Point2> polygon) {
  for (std::size_t iy = 0; iy < height_; ++iy) {
    for (std::size_t ix = 0; ix < width_; ++ix) {
      const Point2 c = cell_center(ix, iy);
      bool inside = false;
      for (std::size_t i = 0, j = polygon.size() - 1; i < polygon.size(); j = i++) {
        const Point2 a = polygon[i];
        const Point2 b = polygon[j];
        if ((a.y > c.y) != (b.y > c.y) && c.x < (b.x - a.x) * (c.y - a.y) / (b.y - a.y) + a.x)
          inside = !inside;
      }
      region_mask_[iy * width_ + ix] = inside ? 1 : 0;
    }
  }
}

void DoseGrid::set_region_mask(std::vector<std::uint8_t> mask) {
  if (mask.size() != cells_.size()) throw ConfigError("region mask size does not match grid");
  region_mask_ = std::move(mask);
}

VirtualSensorArray default_sensor_array(double length, double lateral_offset, std::size_t count) {
  VirtualSensorArray sensors;
  sensors.positions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double x = count > 1 ? length * static_cast<double>(i) / static_cast<double>(count - 1)
                               : 0.5 * length;
    sensors.positions.push_back({x, lateral_offset});
  }
  return sensors;
}

namespace {

// Number of grid cells per kernel element along one axis.
std::size_t cells_per_element(const DoseGrid& grid, const KernelMask& mask) {
  const double ratio = mask.element_size() / grid.resolution();
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("kernel element size " + std::to_string(mask.element_size()) +
                      " m is not an integer multiple of grid resolution " +
                      std::to_string(grid.resolution()) + " m");
  }
  return static_cast<std::size_t>(rounded);
}

void stamp(DoseGrid& grid, const KernelMask& mask, std::size_t ratio, Point2 center,
           double weight) {
  const double half = 0.5 * mask.exposed_diameter();
  const long long i0 = std::llround((center.x - half - grid.origin().x) / grid.resolution());
  const long long j0 = std::llround((center.y - half - grid.origin().y) / grid.resolution());
  const auto n = mask.n();
  const auto w = static_cast<long long>(grid.width());
  const auto h = static_cast<long long>(grid.height());
  const auto k = static_cast<long long>(ratio);
  for (std::size_t row = 0; row < n; ++row) {
    for (std::size_t col = 0; col < n; ++col) {
      const double value = mask.at(row, col) * weight;
      if (value == 0.0) continue;
      for (long long b = 0; b < k; ++b) {
        const long long iy = j0 + static_cast<long long>(row) * k + b;
        if (iy < 0 || iy >= h) continue;
        for (long long a = 0; a < k; ++a) {
          const long long ix = i0 + static_cast<long long>(col) * k + a;
          if (ix < 0 || ix >= w) continue;
          grid.deposit(static_cast<std::size_t>(ix), static_cast<std::size_t>(iy), value);
        }
      }
    }
  }
}

// One straight path segment with its speed profile.
struct Segment {
  Point2 from;
  Point2 to;
  double length = 0.0;
  double start_time = 0.0;
  double duration = 0.0;
  double peak_speed = 0.0;
  double ramp_time = 0.0;  // accel (and decel) duration; 0 for constant motion
  double accel = 0.0;
};

class Timeline {
 public:
  Timeline(const CoveragePlan& plan, const MotionProfile& motion) {
    const double v = motion.commanded_velocity;
    double t = 0.0;
    for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
      Segment s;
      s.from = plan.waypoints[i];
      s.to = plan.waypoints[i + 1];
      s.length = std::hypot(s.to.x - s.from.x, s.to.y - s.from.y);
      if (s.length == 0.0) continue;
      s.start_time = t;
      if (motion.kind == MotionKind::constant) {
        s.peak_speed = v;
        s.duration = s.length / v;
      } else {
        const double a = motion.accel;
        s.accel = a;
        if (s.length >= v * v / a) {
          s.peak_speed = v;
          s.ramp_time = v / a;
          s.duration = 2.0 * s.ramp_time + (s.length - v * v / a) / v;
        } else {
          s.peak_speed = std::sqrt(a * s.length);
          s.ramp_time = s.peak_speed / a;
          s.duration = 2.0 * s.ramp_time;
        }
      }
      t += s.duration;
      segments_.push_back(s);
    }
    total_ = t;
  }

  double total_time() const { return total_; }
  bool empty() const { return segments_.empty(); }

  const std::vector<Segment>& segments() const { return segments_; }

  // Position and speed at time t. Queries must be non-decreasing in t for
  // the cached cursor to stay valid; `rewind` resets it.
  std::pair<Point2, double> state_at(double t) {
    while (cursor_ + 1 < segments_.size() &&
           t >= segments_[cursor_].start_time + segments_[cursor_].duration)
      ++cursor_;
    const Segment& s = segments_[cursor_];
    const auto [dist, speed] = travel(s, t - s.start_time);
    return {point_at(s, dist), speed};
  }

  // Distance covered and speed at time tau into segment s.
  static std::pair<double, double> travel(const Segment& s, double tau) {
    tau = std::clamp(tau, 0.0, s.duration);
    double dist = 0.0;
    double speed = 0.0;
    if (s.ramp_time == 0.0) {
      dist = s.peak_speed * tau;
      speed = s.peak_speed;
    } else if (tau < s.ramp_time) {
      dist = 0.5 * s.accel * tau * tau;
      speed = s.accel * tau;
    } else if (tau <= s.duration - s.ramp_time) {
      dist = 0.5 * s.accel * s.ramp_time * s.ramp_time + s.peak_speed * (tau - s.ramp_time);
      speed = s.peak_speed;
    } else {
      const double remaining = s.duration - tau;
      dist = s.length - 0.5 * s.accel * remaining * remaining;
      speed = s.accel * remaining;
    }
    return {std::clamp(dist, 0.0, s.length), speed};
  }

  // Inverse of travel(): time into segment s at which `dist` is reached.
  static double time_at(const Segment& s, double dist) {
    dist = std::clamp(dist, 0.0, s.length);
    if (s.ramp_time == 0.0) return dist / s.peak_speed;
    const double ramp = 0.5 * s.accel * s.ramp_time * s.ramp_time;
    if (dist <= ramp) return std::sqrt(2.0 * dist / s.accel);
    if (dist <= s.length - ramp) return s.ramp_time + (dist - ramp) / s.peak_speed;
    return s.duration - std::sqrt(2.0 * (s.length - dist) / s.accel);
  }

  static Point2 point_at(const Segment& s, double dist) {
    const double f = dist / s.length;
    return {s.from.x + f * (s.to.x - s.from.x), s.from.y + f * (s.to.y - s.from.y)};
  }

  void rewind() { cursor_ = 0; }

 private:
  std::vector<Segment> segments_;
  std::size_t cursor_ = 0;
  double total_ = 0.0;
};

class SensorModel {
 public:
  SensorModel(const VirtualSensorArray& sensors, const KernelMask& mask, std::uint64_t seed)
      : sensors_(sensors), mask_(mask), rng_(seed) {}

  double reading(Point2 sensor, Point2 beam, double lamp) {
    const double dx = sensor.x - beam.x;
    const double dy = sensor.y - beam.y;
    const double r = std::hypot(dx, dy);
    double value = 0.0;
    if (r <= sensors_.sensing_radius) {
      if (sensors_.field) {
        value = sensors_.field->irradiance_at(r);
      } else {
        const double half = 0.5 * mask_.exposed_diameter();
        const double e = mask_.element_size();
        const double col = std::floor((dx + half) / e);
        const double row = std::floor((dy + half) / e);
        const auto n = static_cast<double>(mask_.n());
        if (col >= 0.0 && col < n && row >= 0.0 && row < n)
          value = mask_.at(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
      }
      value *= lamp;
    }
    if (sensors_.inject_noise) {
      std::uniform_real_distribution<double> noise(-sensors_.noise_tolerance,
                                                   sensors_.noise_tolerance);
      value += noise(rng_);
    }
    return std::clamp(value, 0.0, sensors_.saturation);
  }

 private:
  const VirtualSensorArray& sensors_;
  const KernelMask& mask_;
  std::mt19937_64 rng_;
};

}  // namespace

void stamp_kernel(DoseGrid& grid, const KernelMask& mask, Point2 center, double weight) {
  stamp(grid, mask, cells_per_element(grid, mask), center, weight);
}

DoseGrid accumulate_static(const CoveragePlan& plan, const KernelMask& mask, DoseGrid grid) {
  const std::size_t ratio = cells_per_element(grid, mask);
  if (plan.waypoints.size() < 2) return grid;
  if (!(plan.commanded_velocity > 0.0)) throw ConfigError("commanded velocity must be positive");
  const double e = mask.element_size();
  const double v = plan.commanded_velocity;
  for (std::size_t i = 0; i + 1 < plan.waypoints.size(); ++i) {
    const Point2 a = plan.waypoints[i];
    const Point2 b = plan.waypoints[i + 1];
    const double length = std::hypot(b.x - a.x, b.y - a.y);
    if (length == 0.0) continue;
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(length / e - 1e-9)));
    const double hold = (length / static_cast<double>(steps)) / v;
    // Segment ends carry half weight; shared joints sum to a full stamp.
    for (std::size_t k = 0; k <= steps; ++k) {
      const double f = static_cast<double>(k) / static_cast<double>(steps);
      const Point2 p{a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)};
      const double weight = (k == 0 || k == steps) ? 0.5 * hold : hold;
      stamp(grid, mask, ratio, p, weight);
    }
  }
  return grid;
}

RunResult simulate_execution(const CoveragePlan& plan, const KernelMask& mask,
                             const MotionProfile& motion, const LampDecayModel& lamp,
                             const VirtualSensorArray& sensors, DoseGrid grid,
                             const SimulationOptions& options) {
  const std::size_t ratio = cells_per_element(grid, mask);
  const double dt = options.dt;
  const double v = motion.commanded_velocity;
  if (!(dt > 0.0)) throw ConfigError("time step must be positive");
  if (!(v > 0.0)) throw ConfigError("commanded velocity must be positive");
  if (motion.kind == MotionKind::trapezoidal && !(motion.accel > 0.0))
    throw ConfigError("acceleration must be positive");
  if (v * dt > mask.element_size()) {
    throw ConfigError("time step " + std::to_string(dt) + " s lets the beam skip cells at " +
                      std::to_string(v) + " m/s (v*dt > element size)");
  }
  if (!(sensors.sample_rate > 0.0)) throw ConfigError("sensor sample rate must be positive");
  for (const auto& p : sensors.positions) {
    if (!grid.contains(p)) throw ConfigError("sensor position lies outside the dose grid");
  }

  Timeline timeline(plan, motion);
  const double total = timeline.total_time();
  const std::size_t sensor_count = sensors.positions.size();

  RunResult result{std::move(grid), std::vector<double>(sensor_count, 0.0),
                   std::vector<std::vector<TracePoint>>(sensor_count), {}, total};
  if (timeline.empty()) {
    if (options.on_progress) options.on_progress({0.0, {}, 0.0, result.grid});
    return result;
  }

  SensorModel dose_sensors(sensors, mask, options.seed);
  const double half = 0.5 * mask.exposed_diameter();
  const double res = result.grid.resolution();
  const Point2 origin = result.grid.origin();
  double next_progress = options.progress_interval;
  std::vector<double> breaks;
  for (const Segment& seg : timeline.segments()) {
    const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(seg.duration / dt - 1e-9)));
    const double h = seg.duration / static_cast<double>(steps);
    for (std::size_t k = 0; k < steps; ++k) {
      const double ta = static_cast<double>(k) * h;
      const double tb = k + 1 == steps ? seg.duration : ta + h;
      const double da = Timeline::travel(seg, ta).first;
      const double db = Timeline::travel(seg, tb).first;

      // Split the step where the snapped kernel position changes so every
      // position is credited with its exact dwell time.
      breaks.assign({da, db});
      const Point2 pa = Timeline::point_at(seg, da);
      const Point2 pb = Timeline::point_at(seg, db);
      auto add_breaks = [&](double ca, double cb, double o) {
        if (ca == cb) return;
        const double lo = (std::min(ca, cb) - half - o) / res - 0.5;
        const double hi = (std::max(ca, cb) - half - o) / res - 0.5;
        for (double m = std::floor(lo) + 1.0; m < hi; m += 1.0) {
          const double c = o + half + (m + 0.5) * res;
          breaks.push_back(da + (c - ca) / (cb - ca) * (db - da));
        }
      };
      add_breaks(pa.x, pb.x, origin.x);
      add_breaks(pa.y, pb.y, origin.y);
      std::sort(breaks.begin(), breaks.end());
      double t_prev = ta;
      for (std::size_t i = 1; i < breaks.size(); ++i) {
        const double t_next = i + 1 == breaks.size() ? tb : Timeline::time_at(seg, breaks[i]);
        if (t_next > t_prev) {
          const Point2 p = Timeline::point_at(seg, 0.5 * (breaks[i - 1] + breaks[i]));
          const double scale = lamp_scale(lamp, seg.start_time + 0.5 * (t_prev + t_next));
          stamp(result.grid, mask, ratio, p, scale * (t_next - t_prev));
        }
        t_prev = std::max(t_prev, t_next);
      }

      const double mid = seg.start_time + 0.5 * (ta + tb);
      const auto [dist, speed] = Timeline::travel(seg, 0.5 * (ta + tb));
      const Point2 position = Timeline::point_at(seg, dist);
      const double scale = lamp_scale(lamp, mid);
      for (std::size_t s = 0; s < sensor_count; ++s)
        result.sensor_doses[s] += dose_sensors.reading(sensors.positions[s], position, scale) * (tb - ta);

      const double now = seg.start_time + tb;
      if (options.on_progress && options.progress_interval > 0.0 && now >= next_progress) {
        options.on_progress({now, Timeline::point_at(seg, db), Timeline::travel(seg, tb).second, result.grid});
        while (next_progress <= now) next_progress += options.progress_interval;
      }
    }
  }

  // Traces and telemetry are instantaneous samples on their own clocks.
  SensorModel trace_sensors(sensors, mask, options.seed ^ 0x9e3779b97f4a7c15ULL);
  timeline.rewind();
  const double trace_period = 1.0 / sensors.sample_rate;
  for (std::size_t j = 0;; ++j) {
    double t = static_cast<double>(j) * trace_period;
    const bool last = t >= total - 1e-12;
    if (last) t = total;
    const auto [position, speed] = timeline.state_at(t);
    const double scale = lamp_scale(lamp, t);
    for (std::size_t s = 0; s < sensor_count; ++s)
      result.sensor_traces[s].push_back(
          {t, trace_sensors.reading(sensors.positions[s], position, scale)});
    if (last) break;
  }

  timeline.rewind();
  const double telemetry_period = 1.0 / std::min(100.0, std::max(options.telemetry_rate, 1e-9));
  for (std::size_t j = 0;; ++j) {
    double t = static_cast<double>(j) * telemetry_period;
    const bool last = t >= total - 1e-12;
    if (last) t = total;
    const auto [position, speed] = timeline.state_at(t);
    result.telemetry.push_back({t, position, speed});
    if (last) break;
  }

  if (options.on_progress) {
    timeline.rewind();
    const auto [position, speed] = timeline.state_at(total);
    options.on_progress({total, position, speed, result.grid});
  }
  return result;
}

CoverageReport coverage_report(const DoseGrid& grid, double d_req) {
  if (!(d_req > 0.0)) throw DomainError("required dose must be positive");
  CoverageReport report;
  report.d_req = d_req;
  const double threshold = d_req * (1.0 - kCoverageTolerance);
  double sum = 0.0;
  bool first = true;
  for (std::size_t iy = 0; iy < grid.height(); ++iy) {
    for (std::size_t ix = 0; ix < grid.width(); ++ix) {
      if (!grid.in_region(ix, iy)) continue;
      const double d = grid.at(ix, iy);
      ++report.region_cells;
      sum += d;
      if (first) {
        report.min_dose = report.max_dose = d;
        first = false;
      } else {
        report.min_dose = std::min(report.min_dose, d);
        report.max_dose = std::max(report.max_dose, d);
      }
      if (d >= threshold)
        ++report.covered_cells;
      else
        report.failing_cells.emplace_back(ix, iy);
    }
  }
  if (report.region_cells == 0) throw DomainError("region mask is empty");
  report.mean_dose = sum / static_cast<double>(report.region_cells);
  report.fraction_covered =
      static_cast<double>(report.covered_cells) / static_cast<double>(report.region_cells);
  return report;
}

}  // namespace uvgi
