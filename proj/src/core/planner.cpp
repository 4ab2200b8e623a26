#include "uvgi/planner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "uvgi/errors.hpp"

namespace uvgi {

double norm(Vec3 a) { return std::sqrt(dot(a, a)); }

namespace {

Vec3 normalized(Vec3 a) { return (1.0 / norm(a)) * a; }

}  // namespace

PlaneFit fit_plane(std::span<const Vec3> points) {
  if (points.size() < 3) throw PlanningError("plane fit needs at least 3 points");

  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : points) centroid += Eigen::Vector3d(p.x, p.y, p.z);
  centroid /= static_cast<double>(points.size());

  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - centroid;
    scatter += d * d.transpose();
  }

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  if (solver.info() != Eigen::Success) throw PlanningError("plane fit eigensolver failed");
  // Eigenvalues ascend: [0] is the normal direction, [1] must span the plane.
  const auto& eigenvalues = solver.eigenvalues();
  const double spread = eigenvalues(2);
  if (!(spread > 0.0) || eigenvalues(1) <= 1e-12 * spread) {
    throw PlanningError("points are collinear or coincident; no unique plane");
  }

  Eigen::Vector3d n = solver.eigenvectors().col(0).normalized();
  if (n.z() < 0.0 || (n.z() == 0.0 && (n.x() < 0.0 || (n.x() == 0.0 && n.y() < 0.0)))) n = -n;

  PlaneFit fit;
  fit.plane.normal = {n.x(), n.y(), n.z()};
  fit.plane.offset = n.dot(centroid);
  double sq = 0.0;
  for (const auto& p : points) {
    const double r = std::abs(dot(fit.plane.normal, p) - fit.plane.offset);
    fit.max_residual = std::max(fit.max_residual, r);
    sq += r * r;
  }
  fit.rms_residual = std::sqrt(sq / static_cast<double>(points.size()));
  return fit;
}

Point2 RegionSpec::to_region(Vec3 p) const {
  const Vec3 d = p - origin;
  return {dot(d, axis_x), dot(d, axis_y)};
}

Vec3 RegionSpec::to_world(Point2 p) const { return origin + p.x * axis_x + p.y * axis_y; }

RegionSpec make_region(std::span<const Vec3> vertices, double plane_tolerance) {
  RegionSpec region;
  region.vertices.assign(vertices.begin(), vertices.end());
  region.fit = fit_plane(vertices);
  region.within_tolerance = region.fit.max_residual <= plane_tolerance;
  const Vec3 n = region.fit.plane.normal;

  // First vertex edge with an in-plane component sets the tie-break axis.
  Vec3 u{};
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const Vec3 edge = vertices[i + 1] - vertices[i];
    const Vec3 in_plane = edge - dot(edge, n) * n;
    if (norm(in_plane) > 1e-12) {
      u = normalized(in_plane);
      break;
    }
  }
  if (norm(u) == 0.0) throw PlanningError("region vertices have no in-plane extent");
  const Vec3 w = cross(n, u);

  auto extent = [&](Vec3 axis) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& p : vertices) {
      const double s = dot(p, axis);
      lo = std::min(lo, s);
      hi = std::max(hi, s);
    }
    return hi - lo;
  };
  if (extent(w) > extent(u) + 1e-12) {
    region.axis_x = w;
    region.axis_y = -1.0 * u;
  } else {
    region.axis_x = u;
    region.axis_y = w;
  }

  const Vec3 anchor = vertices[0] - (dot(n, vertices[0]) - region.fit.plane.offset) * n;
  double min_x = std::numeric_limits<double>::infinity();
  double min_y = min_x;
  double max_x = -min_x;
  double max_y = -min_x;
  for (const auto& p : vertices) {
    const Vec3 d = p - anchor;
    const double x = dot(d, region.axis_x);
    const double y = dot(d, region.axis_y);
    min_x = std::min(min_x, x);
    max_x = std::max(max_x, x);
    min_y = std::min(min_y, y);
    max_y = std::max(max_y, y);
  }
  region.origin = anchor + min_x * region.axis_x + min_y * region.axis_y;
  region.length = max_x - min_x;
  region.width = max_y - min_y;
  region.outline.reserve(vertices.size());
  for (const auto& p : vertices) {
    // Snap round-off so an axis-aligned outline matches the bounds exactly.
    Point2 q = region.to_region(p);
    auto snap = [](double v, double lo, double hi) {
      if (std::abs(v - lo) < 1e-12) return lo;
      if (std::abs(v - hi) < 1e-12) return hi;
      return v;
    };
    region.outline.push_back({snap(q.x, 0.0, region.length), snap(q.y, 0.0, region.width)});
  }
  return region;
}

RegionSpec rectangular_region(double width, double length) {
  const Vec3 corners[] = {{0, 0, 0}, {width, 0, 0}, {width, length, 0}, {0, length, 0}};
  return make_region(corners);
}

double min_center_dose(const KernelMask& mask, double v_max) {
  if (!(v_max > 0.0)) throw DomainError("maximum velocity must be positive");
  const double exposure_time = mask.element_size() / v_max;
  double d_min = 0.0;
  for (double irradiance : mask.center_row()) d_min += irradiance * exposure_time;
  return d_min;
}

double scale_velocity(double d_min, double d_req, double v_max) {
  if (!(d_min > 0.0) || !(d_req > 0.0) || !(v_max > 0.0))
    throw DomainError("scale_velocity arguments must be positive");
  const double factor = d_min / d_req;
  return std::min(v_max, factor * v_max);
}

std::vector<double> pass_offsets(double width, double pass_spacing) {
  if (!(pass_spacing > 0.0)) throw PlanningError("pass spacing must be positive");
  const auto count =
      static_cast<std::size_t>(std::max(1.0, std::ceil(width / pass_spacing - 1e-9)));
  const double first = 0.5 * (width - static_cast<double>(count) * pass_spacing) + 0.5 * pass_spacing;
  std::vector<double> offsets(count);
  for (std::size_t i = 0; i < count; ++i) offsets[i] = first + static_cast<double>(i) * pass_spacing;
  return offsets;
}

CoveragePlan plan_lawnmower(const RegionSpec& region, const PlannerConfig& config,
                            const KernelMask& mask, const DisinfectionSpec& spec) {
  if (!(config.v_max > 0.0)) throw PlanningError("v_max must be positive");
  if (!(region.length > 0.0) || !(region.width > 0.0))
    throw PlanningError("region bounds are empty");
  if (region.width < mask.element_size() - 1e-12) {
    throw PlanningError("region width " + std::to_string(region.width) +
                        " m is narrower than one kernel element");
  }
  const double spacing = config.pass_spacing.value_or(0.5 * mask.exposed_diameter());
  if (!(spacing > 0.0)) throw PlanningError("pass spacing must be positive");

  CoveragePlan plan;
  plan.pass_spacing = spacing;
  plan.d_req = spec.required_dose();
  plan.d_min_at_vmax = min_center_dose(mask, config.v_max);
  plan.scale_factor = plan.d_min_at_vmax / plan.d_req;
  plan.commanded_velocity = scale_velocity(plan.d_min_at_vmax, plan.d_req, config.v_max);

  // Overrun by the kernel radius so boundary cells see the whole centre row.
  const double overrun = 0.5 * mask.exposed_diameter();
  const double x_begin = -overrun;
  const double x_end = region.length + overrun;
  const auto offsets = pass_offsets(region.width, spacing);
  plan.pass_count = offsets.size();
  plan.waypoints.reserve(2 * offsets.size());
  for (std::size_t i = 0; i < offsets.size(); ++i) {
    const bool forward = i % 2 == 0;
    plan.waypoints.push_back({forward ? x_begin : x_end, offsets[i]});
    plan.waypoints.push_back({forward ? x_end : x_begin, offsets[i]});
  }
  return plan;
}

}  // namespace uvgi
