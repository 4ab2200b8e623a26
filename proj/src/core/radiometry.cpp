#include "uvgi/radiometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Dense>

#include "uvgi/errors.hpp"

namespace uvgi {

std::optional<double> match_disinfection_level(double rate) {
  for (double level : kDisinfectionLevels) {
    if (std::abs(rate - level) <= 1e-9) return level;
  }
  return std::nullopt;
}

double survival_fraction(double k, double dose) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("rate constant k must be positive");
  if (!(dose >= 0.0)) throw DomainError("dose must be non-negative");
  return std::exp(-k * dose);
}

double required_dose(double k, double rate) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("rate constant k must be positive");
  if (!(rate > 0.0 && rate < 1.0)) throw DomainError("disinfection rate must lie in (0, 1)");
  // log1p keeps 99.999% accurate.
  return -std::log1p(-rate) / k;
}

double exposure_dose(double exposure_time, double irradiance) {
  if (!(exposure_time >= 0.0)) throw DomainError("exposure time must be non-negative");
  if (!(irradiance >= 0.0)) throw DomainError("irradiance must be non-negative");
  return exposure_time * irradiance;
}

double attenuated_irradiance(double power, double exposed_area, double eta) {
  if (!(power > 0.0)) throw DomainError("source power must be positive");
  if (!(exposed_area > 0.0)) throw DomainError("exposed area must be positive");
  if (!(eta > 0.0 && eta <= 1.0)) throw DomainError("attenuation factor must lie in (0, 1]");
  return eta * power / exposed_area;
}

DisinfectionSpec::DisinfectionSpec(double k, double rate) : k_(k) {
  if (!(k > 0.0) || !std::isfinite(k)) throw DomainError("rate constant k must be positive");
  auto level = match_disinfection_level(rate);
  if (!level) {
    throw DomainError("disinfection rate " + std::to_string(rate) +
                      " is not one of 0.9, 0.99, 0.999, 0.9999, 0.99999");
  }
  rate_ = *level;
  required_dose_ = uvgi::required_dose(k_, rate_);
}

IrradianceProfile::IrradianceProfile(std::vector<double> coefficients, double domain_scale,
                                     double cutoff_radius, double calibration_height,
                                     int fit_order)
    : coefficients_(std::move(coefficients)),
      domain_scale_(domain_scale),
      cutoff_radius_(cutoff_radius),
      calibration_height_(calibration_height),
      fit_order_(fit_order) {
  if (coefficients_.empty()) throw DomainError("profile needs at least one coefficient");
  if (!(domain_scale_ > 0.0)) throw DomainError("profile domain scale must be positive");
  if (!(cutoff_radius_ >= 0.0)) throw DomainError("cutoff radius must be non-negative");
  if (!(calibration_height_ > 0.0)) throw DomainError("calibration height must be positive");
  if (fit_order_ < 0) throw DomainError("fit order must be non-negative");
  for (double c : coefficients_) {
    if (!std::isfinite(c)) throw DomainError("profile coefficient is not finite");
  }
}

double IrradianceProfile::irradiance_at(double r) const {
  r = std::abs(r);
  if (r > cutoff_radius_) return 0.0;
  const double t = r / domain_scale_;
  double acc = 0.0;
  for (auto it = coefficients_.rbegin(); it != coefficients_.rend(); ++it) acc = acc * t + *it;
  return std::max(acc, 0.0);
}

IrradianceProfile IrradianceProfile::at_height(double height) const {
  if (!(height > 0.0)) throw DomainError("source height must be positive");
  const double ratio = height / calibration_height_;
  std::vector<double> scaled(coefficients_);
  for (double& c : scaled) c /= ratio * ratio;
  return IrradianceProfile(std::move(scaled), domain_scale_ * ratio, cutoff_radius_ * ratio,
                           height, fit_order_);
}

IrradianceProfile IrradianceProfile::with_cutoff(double cutoff_radius) const {
  return IrradianceProfile(coefficients_, domain_scale_, cutoff_radius, calibration_height_,
                           fit_order_);
}

IrradianceProfile fit_profile(std::span<const IrradianceMeasurement> measurements, int order,
                              const FitOptions& options) {
  if (order < 0) throw FitError("fit order must be non-negative");
  for (const auto& m : measurements) {
    if (!(m.distance >= 0.0) || !std::isfinite(m.distance))
      throw FitError("measurement distance must be finite and non-negative");
    if (!(m.irradiance >= 0.0) || !std::isfinite(m.irradiance))
      throw FitError("measured irradiance must be finite and non-negative");
  }

  std::vector<double> distances;
  distances.reserve(measurements.size());
  for (const auto& m : measurements) distances.push_back(m.distance);
  std::sort(distances.begin(), distances.end());
  const auto distinct = static_cast<std::size_t>(
      std::unique(distances.begin(), distances.end(),
                  [](double a, double b) { return std::abs(a - b) <= 1e-12; }) -
      distances.begin());
  const auto unknowns = static_cast<std::size_t>(order) + 1;
  if (distinct < unknowns) {
    throw FitError("order " + std::to_string(order) + " fit needs " + std::to_string(unknowns) +
                   " distinct distances, got " + std::to_string(distinct));
  }

  const double max_distance = distances[distinct - 1];
  const double scale = max_distance > 0.0 ? max_distance : 1.0;

  const auto rows = static_cast<Eigen::Index>(measurements.size());
  const auto cols = static_cast<Eigen::Index>(unknowns);
  Eigen::MatrixXd vandermonde(rows, cols);
  Eigen::VectorXd rhs(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto& m = measurements[static_cast<std::size_t>(i)];
    const double t = m.distance / scale;
    double p = 1.0;
    for (Eigen::Index j = 0; j < cols; ++j) {
      vandermonde(i, j) = p;
      p *= t;
    }
    rhs(i) = m.irradiance;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(vandermonde);
  if (qr.rank() < cols) {
    throw FitError("rank-deficient system: rank " + std::to_string(qr.rank()) + " < " +
                   std::to_string(cols));
  }
  const Eigen::VectorXd solution = qr.solve(rhs);

  std::vector<double> coefficients(solution.data(), solution.data() + solution.size());
  const double cutoff = options.cutoff_radius.value_or(max_distance);
  return IrradianceProfile(std::move(coefficients), scale, cutoff, options.calibration_height,
                           order);
}

double max_fit_residual(const IrradianceProfile& profile,
                        std::span<const IrradianceMeasurement> measurements) {
  double worst = 0.0;
  const auto& c = profile.coefficients();
  for (const auto& m : measurements) {
    const double t = m.distance / profile.domain_scale();
    double acc = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) acc = acc * t + *it;
    worst = std::max(worst, std::abs(acc - m.irradiance));
  }
  return worst;
}

KernelMask::KernelMask(std::size_t n, double exposed_diameter, std::vector<double> values)
    : n_(n), exposed_diameter_(exposed_diameter), values_(std::move(values)) {
  if (n_ == 0) throw DomainError("kernel dimension must be at least 1");
  if (!(exposed_diameter_ > 0.0)) throw DomainError("exposed diameter must be positive");
  if (values_.size() != n_ * n_) throw DomainError("kernel values must hold n*n entries");
  for (double v : values_) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw DomainError("kernel values must be finite, >= 0");
  }
  element_size_ = exposed_diameter_ / static_cast<double>(n_);
}

std::span<const double> KernelMask::center_row() const {
  return std::span<const double>(values_).subspan((n_ / 2) * n_, n_);
}

double KernelMask::cell_offset(std::size_t i) const {
  return (static_cast<double>(i) + 0.5) * element_size_ - 0.5 * exposed_diameter_;
}

double KernelMask::total_power() const {
  double sum = 0.0;
  for (double v : values_) sum += v;
  return sum * element_size_ * element_size_;
}

KernelMask build_kernel(const IrradianceProfile& profile, double exposed_diameter, std::size_t n) {
  if (n == 0) throw DomainError("kernel dimension must be at least 1");
  if (!(exposed_diameter > 0.0)) throw DomainError("exposed diameter must be positive");
  const double e = exposed_diameter / static_cast<double>(n);
  std::vector<double> values(n * n);
  for (std::size_t row = 0; row < n; ++row) {
    const double dy = (static_cast<double>(row) + 0.5) * e - 0.5 * exposed_diameter;
    for (std::size_t col = 0; col < n; ++col) {
      const double dx = (static_cast<double>(col) + 0.5) * e - 0.5 * exposed_diameter;
      values[row * n + col] = profile.irradiance_at(std::hypot(dx, dy));
    }
  }
  return KernelMask(n, exposed_diameter, std::move(values));
}

LampDecayModel::LampDecayModel(std::vector<std::pair<double, double>> table)
    : table_(std::move(table)) {
  if (table_.empty()) return;
  if (table_.front().first != 0.0 || table_.front().second != 1.0)
    throw DomainError("lamp decay table must start at (0, 1)");
  for (std::size_t i = 1; i < table_.size(); ++i) {
    if (!(table_[i].first > table_[i - 1].first))
      throw DomainError("lamp decay times must be strictly increasing");
    if (!(table_[i].second <= table_[i - 1].second))
      throw DomainError("lamp decay scales must be non-increasing");
    if (!(table_[i].second > 0.0)) throw DomainError("lamp decay scales must be positive");
  }
}

double lamp_scale(const LampDecayModel& model, double t) {
  if (!(t >= 0.0)) throw DomainError("elapsed time must be non-negative");
  const auto& table = model.table();
  if (table.empty()) return 1.0;
  if (t >= table.back().first) return table.back().second;
  auto upper = std::upper_bound(table.begin(), table.end(), t,
                                [](double value, const auto& entry) { return value < entry.first; });
  const auto& [t1, s1] = *upper;
  const auto& [t0, s0] = *(upper - 1);
  return s0 + (s1 - s0) * (t - t0) / (t1 - t0);
}

}  // namespace uvgi
