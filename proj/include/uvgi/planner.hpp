#pragma once

// Region designation (plane fit over supervisor markers), constant-speed
// lawnmower coverage paths, and dose-constrained sweep velocity.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "uvgi/radiometry.hpp"

namespace uvgi {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
inline Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
inline Vec3 operator*(double s, Vec3 a) { return {s * a.x, s * a.y, s * a.z}; }
inline double dot(Vec3 a, Vec3 b) { return a.x * b.x + a.y * b.y + a.z * b.z; }
inline Vec3 cross(Vec3 a, Vec3 b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}
double norm(Vec3 a);

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline bool operator==(Point2 a, Point2 b) { return a.x == b.x && a.y == b.y; }

// Points p with dot(normal, p) == offset.
struct Plane {
  Vec3 normal;
  double offset = 0.0;
};

struct PlaneFit {
  Plane plane;
  double max_residual = 0.0;
  double rms_residual = 0.0;
};

// Orthogonal least-squares plane (smallest principal component of the
// centred points). The normal is oriented to +z, or to the first non-zero
// component when the plane is vertical. Throws PlanningError on fewer than
// three points or collinear/coincident input.
PlaneFit fit_plane(std::span<const Vec3> points);

// A designated region: its plane and a rectangular frame in that plane.
// Region coordinates have x along the long axis and y along the short axis,
// origin at the bounding rectangle's minimum corner.
struct RegionSpec {
  std::vector<Vec3> vertices;
  PlaneFit fit;
  Vec3 origin;  // 3D position of region (0, 0)
  Vec3 axis_x;  // long axis
  Vec3 axis_y;  // short axis, axis_x x axis_y == normal
  double length = 0.0;
  double width = 0.0;
  std::vector<Point2> outline;  // vertices projected into region coordinates
  bool within_tolerance = true;

  Point2 to_region(Vec3 p) const;
  Vec3 to_world(Point2 p) const;
};

// Fits the plane and derives the region frame. The residual tolerance is
// reported via within_tolerance, not enforced.
RegionSpec make_region(std::span<const Vec3> vertices, double plane_tolerance = 0.01);

// Axis-aligned rectangle (0,0,0)-(width,length,0).
RegionSpec rectangular_region(double width, double length);

struct PlannerConfig {
  double v_max = 1.0;
  std::optional<double> pass_spacing;  // defaults to exposed_diameter / 2
  double plane_tolerance = 0.01;
};

struct CoveragePlan {
  std::vector<Point2> waypoints;  // region coordinates, m
  double commanded_velocity = 0.0;
  double pass_spacing = 0.0;
  double scale_factor = 0.0;
  double d_min_at_vmax = 0.0;
  double d_req = 0.0;
  std::size_t pass_count = 0;
};

// Minimum dose a swept-over point receives at v_max: the centre-row
// irradiances each held for element_size / v_max.
double min_center_dose(const KernelMask& mask, double v_max);

// min(v_max, (d_min / d_req) * v_max).
double scale_velocity(double d_min, double d_req, double v_max);

// Lateral centre of each pass in region coordinates.
std::vector<double> pass_offsets(double width, double pass_spacing);

CoveragePlan plan_lawnmower(const RegionSpec& region, const PlannerConfig& config,
                            const KernelMask& mask, const DisinfectionSpec& spec);

}  // namespace uvgi
