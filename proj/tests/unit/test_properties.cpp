// Randomized invariant checks. Each case draws its inputs from a fixed-seed
// generator so failures reproduce.
#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "support/oracles.hpp"
#include "uvgi/errors.hpp"
#include "uvgi/fixture.hpp"
#include "uvgi/planner.hpp"
#include "uvgi/radiometry.hpp"
#include "uvgi/simulator.hpp"

using namespace uvgi;
using Catch::Approx;

namespace {

struct Gen {
  std::mt19937_64 rng;
  explicit Gen(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
  double level() { return kDisinfectionLevels[static_cast<std::size_t>(integer(0, 4))]; }
};

// Radially decreasing random profile with cutoff at `cutoff`.
IrradianceProfile random_profile(Gen& g, double cutoff) {
  std::vector<IrradianceMeasurement> pts;
  const double peak = g.uniform(20.0, 300.0);
  const double sigma = g.uniform(0.02, 0.08);
  for (int i = 0; i <= 8; ++i) {
    const double r = cutoff * i / 8.0;
    pts.push_back({r, peak * std::exp(-r * r / (2 * sigma * sigma))});
  }
  return fit_profile(pts, g.integer(0, 8), {cutoff, 0.3});
}

KernelMask random_mask(Gen& g, std::size_t n, double d) {
  std::vector<double> v(n * n);
  for (auto& x : v) x = g.uniform(0.0, 200.0);
  return KernelMask(n, d, v);
}

}  // namespace

TEST_CASE("required dose inverts the survival model", "[property][radiometry]") {
  Gen g(1);
  for (int i = 0; i < 500; ++i) {
    const double k = g.uniform(1e-3, 10.0);
    const double rate = g.level();
    CHECK(survival_fraction(k, required_dose(k, rate)) == Approx(1.0 - rate).margin(1e-9));
  }
}

TEST_CASE("required dose is monotone in k and rate", "[property][radiometry]") {
  Gen g(2);
  for (int i = 0; i < 500; ++i) {
    const double k1 = g.uniform(1e-3, 5.0);
    const double k2 = k1 * g.uniform(1.001, 3.0);
    const double rate = g.level();
    CHECK(required_dose(k2, rate) < required_dose(k1, rate));
  }
  for (std::size_t i = 0; i + 1 < kDisinfectionLevels.size(); ++i)
    CHECK(required_dose(0.0867, kDisinfectionLevels[i]) < required_dose(0.0867, kDisinfectionLevels[i + 1]));
}

TEST_CASE("dose is additive in exposure time", "[property][radiometry]") {
  Gen g(3);
  for (int i = 0; i < 500; ++i) {
    const double a = g.uniform(0.0, 100.0), b = g.uniform(0.0, 100.0), irr = g.uniform(0.0, 400.0);
    CHECK(exposure_dose(a + b, irr) == Approx(exposure_dose(a, irr) + exposure_dose(b, irr)).epsilon(1e-14));
  }
}

TEST_CASE("odd kernels are symmetric under rotation and reflection", "[property][radiometry]") {
  Gen g(4);
  for (int i = 0; i < 40; ++i) {
    const auto profile = random_profile(g, g.uniform(0.04, 0.12));
    const std::size_t n = static_cast<std::size_t>(2 * g.integer(1, 10) + 1);
    const auto mask = build_kernel(profile, g.uniform(0.05, 0.3), n);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) {
        const double v = mask.at(r, c);
        CHECK(v >= 0.0);
        CHECK(mask.at(c, n - 1 - r) == Approx(v).margin(1e-12));  // 90 degree rotation
        CHECK(mask.at(r, n - 1 - c) == Approx(v).margin(1e-12));  // reflection
        CHECK(mask.at(c, r) == Approx(v).margin(1e-12));          // transpose
      }
    }
    CHECK(mask.element_size() == mask.exposed_diameter() / static_cast<double>(n));
  }
}

TEST_CASE("profile evaluation is never negative", "[property][radiometry]") {
  Gen g(5);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> coeffs(static_cast<std::size_t>(g.integer(1, 16)));
    for (auto& c : coeffs) c = g.uniform(-500.0, 500.0);
    const IrradianceProfile p(coeffs, g.uniform(0.05, 0.2), g.uniform(0.05, 0.2), 0.3,
                              static_cast<int>(coeffs.size()) - 1);
    for (int j = 0; j < 50; ++j) {
      const double r = g.uniform(0.0, 0.5);
      const double v = p.irradiance_at(r);
      CHECK(v >= 0.0);
      if (r > p.cutoff_radius()) CHECK(v == 0.0);
    }
    const auto mask = build_kernel(p, 0.16, 16);
    for (double v : mask.values()) CHECK(v >= 0.0);
  }
}

TEST_CASE("full-order fits interpolate small data sets", "[property][radiometry]") {
  Gen g(6);
  for (int i = 0; i < 300; ++i) {
    const int count = g.integer(1, 6);
    std::vector<IrradianceMeasurement> pts;
    double r = g.uniform(0.0, 0.02);
    for (int j = 0; j < count; ++j) {
      pts.push_back({r, g.uniform(1.0, 300.0)});
      r += g.uniform(0.01, 0.04);
    }
    const auto profile = fit_profile(pts, count - 1);
    for (const auto& p : pts) CHECK(profile.irradiance_at(p.distance) == Approx(p.irradiance).epsilon(1e-6));
  }
}

TEST_CASE("lamp scale starts at 1 and never rises", "[property][radiometry]") {
  Gen g(7);
  for (int i = 0; i < 200; ++i) {
    std::vector<std::pair<double, double>> table = {{0.0, 1.0}};
    double t = 0.0, s = 1.0;
    for (int j = g.integer(0, 6); j > 0; --j) {
      t += g.uniform(1.0, 600.0);
      s *= g.uniform(0.8, 1.0);
      table.emplace_back(t, s);
    }
    const LampDecayModel model(table);
    CHECK(lamp_scale(model, 0.0) == 1.0);
    double prev = 1.0;
    for (double q = 0.0; q < t + 100.0; q += g.uniform(0.5, 50.0)) {
      const double v = lamp_scale(model, q);
      CHECK(v <= prev);
      CHECK(v > 0.0);
      prev = v;
    }
  }
}

TEST_CASE("velocity is inversely proportional to required dose", "[property][planner]") {
  Gen g(8);
  for (int i = 0; i < 300; ++i) {
    const auto mask = random_mask(g, static_cast<std::size_t>(g.integer(2, 20)), g.uniform(0.05, 0.3));
    const double k = g.uniform(0.01, 1.0);
    const double d_min = min_center_dose(mask, 1.0);
    const double r1 = g.level(), r2 = g.level();
    const double d1 = required_dose(k, r1), d2 = required_dose(k, r2);
    if (d_min >= std::min(d1, d2)) {
      // Clamped: velocity is exactly v_max.
      CHECK(scale_velocity(d_min, std::min(d1, d2), 1.0) == 1.0);
      continue;
    }
    const double v1 = scale_velocity(d_min, d1, 1.0), v2 = scale_velocity(d_min, d2, 1.0);
    CHECK(v1 / v2 == Approx(d2 / d1).epsilon(1e-9));
  }
}

TEST_CASE("clamping holds velocity at v_max", "[property][planner]") {
  Gen g(9);
  for (int i = 0; i < 300; ++i) {
    const double d_req = g.uniform(1.0, 100.0);
    const double d_min = d_req * g.uniform(1.0, 10.0);
    const double v_max = g.uniform(0.1, 3.0);
    CHECK(scale_velocity(d_min, d_req, v_max) == v_max);
  }
}

TEST_CASE("coplanar points fit with zero residual", "[property][planner]") {
  Gen g(10);
  for (int i = 0; i < 300; ++i) {
    Vec3 n{g.uniform(-1, 1), g.uniform(-1, 1), g.uniform(-1, 1)};
    if (norm(n) < 0.1) continue;
    n = (1.0 / norm(n)) * n;
    Vec3 u = cross(n, std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0});
    u = (1.0 / norm(u)) * u;
    const Vec3 w = cross(n, u);
    const Vec3 c{g.uniform(-2, 2), g.uniform(-2, 2), g.uniform(-2, 2)};
    std::vector<Vec3> pts;
    for (int j = g.integer(3, 10); j > 0; --j) pts.push_back(c + g.uniform(-1, 1) * u + g.uniform(-1, 1) * w);
    const auto fit = fit_plane(pts);
    CHECK(fit.max_residual <= 1e-9);
    CHECK(norm(fit.plane.normal) == Approx(1.0).margin(1e-12));
    CHECK(std::abs(dot(fit.plane.normal, n)) == Approx(1.0).margin(1e-9));
  }
}

TEST_CASE("plans cover the region and stay near it", "[property][planner]") {
  Gen g(11);
  for (int i = 0; i < 100; ++i) {
    const double w = g.uniform(0.02, 1.0), l = g.uniform(0.05, 2.0);
    const double d = g.uniform(0.05, 0.3);
    const std::size_t n = static_cast<std::size_t>(g.integer(4, 20));
    const auto region = rectangular_region(w, l);
    KernelMask mask(n, d, std::vector<double>(n * n, 50.0));
    if (region.width < mask.element_size()) continue;
    PlannerConfig config;
    if (g.integer(0, 1)) config.pass_spacing = g.uniform(0.2, 1.0) * d;
    const auto plan = plan_lawnmower(region, config, mask, DisinfectionSpec(g.uniform(0.01, 1.0), g.level()));

    CHECK(plan.commanded_velocity > 0.0);
    CHECK(plan.commanded_velocity <= config.v_max);
    CHECK(plan.commanded_velocity == Approx(std::min(config.v_max, plan.scale_factor * config.v_max)));
    REQUIRE(plan.waypoints.size() == 2 * plan.pass_count);

    const double margin = d / 2 + 1e-9;
    for (const auto& p : plan.waypoints) {
      CHECK(p.x >= -margin);
      CHECK(p.x <= region.length + margin);
      CHECK(p.y >= -margin);
      CHECK(p.y <= region.width + margin);
    }
    // Long passes alternate with cross-steps of exactly one spacing.
    for (std::size_t j = 0; j + 1 < plan.waypoints.size(); ++j) {
      const auto a = plan.waypoints[j], b = plan.waypoints[j + 1];
      if (j % 2 == 0) {
        CHECK(a.y == b.y);
        CHECK(std::abs(b.x - a.x) >= region.length);
      } else {
        CHECK(a.x == b.x);
        CHECK(std::abs(b.y - a.y) == Approx(plan.pass_spacing).margin(1e-12));
      }
    }
    // Every region cell is under the kernel footprint of some pass.
    const double res = region.width / 10.0;
    for (double y = res / 2; y < region.width; y += res) {
      for (double x = 0.0; x <= region.length; x += region.length / 20.0) {
        bool covered = false;
        for (std::size_t j = 0; j < plan.pass_count && !covered; ++j) {
          const auto a = plan.waypoints[2 * j], b = plan.waypoints[2 * j + 1];
          covered = std::abs(y - a.y) <= d / 2 + 1e-12 && x >= std::min(a.x, b.x) && x <= std::max(a.x, b.x);
        }
        CHECK(covered);
      }
    }
  }
}

TEST_CASE("static spanning equals the brute-force oracle", "[property][simulator]") {
  Gen g(12);
  for (int i = 0; i < 60; ++i) {
    const std::size_t n = static_cast<std::size_t>(g.integer(1, 6));
    const double e = 0.01;
    const auto mask = random_mask(g, n, e * static_cast<double>(n));
    const int ratio = g.integer(1, 2);
    const double res = e / ratio;
    const std::size_t w = static_cast<std::size_t>(g.integer(4, 20)), h = static_cast<std::size_t>(g.integer(4, 20));
    const DoseGrid grid({g.uniform(-0.05, 0.05), g.uniform(-0.05, 0.05)}, res, w, h);

    CoveragePlan plan;
    plan.commanded_velocity = g.uniform(0.05, 1.0);
    const double span_x = res * static_cast<double>(w), span_y = res * static_cast<double>(h);
    for (int j = g.integer(2, 5); j > 0; --j)
      plan.waypoints.push_back({grid.origin().x + g.uniform(0.0, span_x), grid.origin().y + g.uniform(0.0, span_y)});

    const auto got = accumulate_static(plan, mask, grid);
    std::vector<Point2> centers;
    std::vector<double> holds;
    oracle::spanning_steps(plan, e, centers, holds);
    const auto want = oracle::brute_force_stamps(grid, mask, centers, holds);
    for (std::size_t c = 0; c < want.size(); ++c) {
      CHECK(got.cells()[c] == Approx(want[c]).margin(1e-9));
      CHECK(got.cells()[c] >= 0.0);
    }
  }
}

TEST_CASE("static doses scale inversely with velocity", "[property][simulator]") {
  Gen g(13);
  for (int i = 0; i < 30; ++i) {
    const auto mask = random_mask(g, 8, 0.08);
    const DoseGrid grid({0, 0}, 0.01, 30, 30);
    CoveragePlan plan;
    plan.commanded_velocity = g.uniform(0.1, 1.0);
    for (int j = 0; j < 3; ++j) plan.waypoints.push_back({g.uniform(0, 0.3), g.uniform(0, 0.3)});
    const auto a = accumulate_static(plan, mask, grid);
    plan.commanded_velocity /= 2.0;
    const auto b = accumulate_static(plan, mask, grid);
    for (std::size_t c = 0; c < a.size(); ++c) CHECK(b.cells()[c] == Approx(2.0 * a.cells()[c]).epsilon(1e-12));
  }
}

TEST_CASE("time-stepped runs conserve energy and never lose dose", "[property][simulator]") {
  Gen g(14);
  const auto mask = build_kernel(fixture::reference_profile(), 0.16, 16);
  for (int i = 0; i < 8; ++i) {
    const DoseGrid grid({0, 0}, 0.01, 60, 60);
    CoveragePlan plan;
    plan.commanded_velocity = g.uniform(0.2, 1.0);
    for (int j = g.integer(2, 4); j > 0; --j) plan.waypoints.push_back({g.uniform(0.09, 0.51), g.uniform(0.09, 0.51)});
    const MotionProfile motion{g.integer(0, 1) ? MotionKind::constant : MotionKind::trapezoidal, g.uniform(0.5, 3.0),
                               plan.commanded_velocity};

    auto sensors = default_sensor_array(0.6, 0.3, 5);
    sensors.field = fixture::reference_profile();
    std::vector<double> prev(grid.size(), 0.0);
    SimulationOptions options;
    options.progress_interval = 0.1;
    options.on_progress = [&](const ProgressSnapshot& s) {
      for (std::size_t c = 0; c < prev.size(); ++c) {
        CHECK(s.grid.cells()[c] >= prev[c]);
        prev[c] = s.grid.cells()[c];
      }
    };
    const auto run = simulate_execution(plan, mask, motion, {}, sensors, grid, options);
    double energy = 0.0;
    for (double d : run.grid.cells()) energy += d * 1e-4;
    CHECK(energy == Approx(mask.total_power() * run.elapsed).epsilon(0.02));

    for (std::size_t s = 0; s < sensors.positions.size(); ++s) {
      double integral = 0.0;
      const auto& tr = run.sensor_traces[s];
      for (std::size_t k = 1; k < tr.size(); ++k)
        integral += 0.5 * (tr[k].irradiance + tr[k - 1].irradiance) * (tr[k].t - tr[k - 1].t);
      CHECK(integral == Approx(run.sensor_doses[s]).epsilon(0.005).margin(0.05));
    }

    // Extending the path only adds dose.
    CoveragePlan longer = plan;
    longer.waypoints.push_back({g.uniform(0.09, 0.51), g.uniform(0.09, 0.51)});
    const auto more = simulate_execution(longer, mask, motion, {}, sensors, grid);
    for (std::size_t c = 0; c < grid.size(); ++c) CHECK(more.grid.cells()[c] >= run.grid.cells()[c] * (1.0 - 1e-12));

    const LampDecayModel droop({{0.0, 1.0}, {g.uniform(0.5, 5.0), g.uniform(0.5, 0.99)}});
    const auto aged = simulate_execution(plan, mask, motion, droop, sensors, grid);
    for (std::size_t c = 0; c < grid.size(); ++c) CHECK(aged.grid.cells()[c] <= run.grid.cells()[c]);
  }
}
