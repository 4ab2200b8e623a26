#pragma once

// UV germicidal dose arithmetic, radial irradiance profiles of the source,
// the discretized kernel mask, and lamp output droop.
//
// Units are SI throughout: metres, seconds, W/m^2, J/m^2.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace uvgi {

// The five logarithmic disinfection levels (1 to 5 log reduction).
inline constexpr std::array<double, 5> kDisinfectionLevels = {0.90, 0.99, 0.999, 0.9999,
                                                              0.99999};

// Returns the canonical level if `rate` is one of kDisinfectionLevels (within 1e-9).
std::optional<double> match_disinfection_level(double rate);

// Survival fraction e^(-k * dose) of the first-order decay model.
double survival_fraction(double k, double dose);

// Dose needed to reach inactivation fraction `rate`: -ln(1 - rate) / k.
double required_dose(double k, double rate);

// Dose delivered by `irradiance` held for `exposure_time`.
double exposure_dose(double exposure_time, double irradiance);

// Analytic irradiance estimate eta * P / A, used only when no measured profile exists.
double attenuated_irradiance(double power, double exposed_area, double eta);

class DisinfectionSpec {
 public:
  // Throws DomainError unless k > 0 and rate is one of kDisinfectionLevels.
  DisinfectionSpec(double k, double rate);

  double k() const noexcept { return k_; }
  double rate() const noexcept { return rate_; }
  double required_dose() const noexcept { return required_dose_; }

 private:
  double k_;
  double rate_;
  double required_dose_;
};

struct IrradianceMeasurement {
  double distance;    // m from beam centre
  double irradiance;  // W/m^2
};

// Radial irradiance model I(r) of the source on the target plane.
//
// The polynomial is stored over the rescaled distance t = r / domain_scale.
// Evaluation clamps negative excursions to 0 and returns exactly 0 past
// cutoff_radius.
class IrradianceProfile {
 public:
  IrradianceProfile(std::vector<double> coefficients, double domain_scale, double cutoff_radius,
                    double calibration_height, int fit_order);

  double irradiance_at(double r) const;

  // Inverse-square rescaling to another source height:
  // I_h(r) = (h_cal/h)^2 * I(r * h_cal/h), cutoff scaled by h/h_cal.
  IrradianceProfile at_height(double height) const;

  const std::vector<double>& coefficients() const noexcept { return coefficients_; }
  double domain_scale() const noexcept { return domain_scale_; }
  double cutoff_radius() const noexcept { return cutoff_radius_; }
  double calibration_height() const noexcept { return calibration_height_; }
  int fit_order() const noexcept { return fit_order_; }

  IrradianceProfile with_cutoff(double cutoff_radius) const;

 private:
  std::vector<double> coefficients_;
  double domain_scale_;
  double cutoff_radius_;
  double calibration_height_;
  int fit_order_;
};

struct FitOptions {
  std::optional<double> cutoff_radius;  // defaults to the largest measured distance
  double calibration_height = 0.3;
};

// Least-squares polynomial fit of irradiance over distance. Distances are
// rescaled to [0, 1] before solving. Throws FitError on too few distinct
// distances or a rank-deficient system.
IrradianceProfile fit_profile(std::span<const IrradianceMeasurement> measurements, int order,
                              const FitOptions& options = {});

// Largest |profile(d) - I| over the measurements (unclamped polynomial value).
double max_fit_residual(const IrradianceProfile& profile,
                        std::span<const IrradianceMeasurement> measurements);

inline double eval_profile(const IrradianceProfile& profile, double r) {
  return profile.irradiance_at(r);
}

// N x N discretized footprint of the source. Row index runs along the
// lateral (y) axis, column index along the travel (x) axis.
class KernelMask {
 public:
  KernelMask(std::size_t n, double exposed_diameter, std::vector<double> values);

  std::size_t n() const noexcept { return n_; }
  double element_size() const noexcept { return element_size_; }
  double exposed_diameter() const noexcept { return exposed_diameter_; }

  double at(std::size_t row, std::size_t col) const { return values_[row * n_ + col]; }
  std::span<const double> values() const noexcept { return values_; }

  // Row n/2. For even n rows n/2-1 and n/2 sit symmetrically about the centre.
  std::span<const double> center_row() const;

  // Offset of cell (row or column) index i's centre from the mask centre.
  double cell_offset(std::size_t i) const;

  // Sum of all cells times element area: irradiance integrated over the footprint (W).
  double total_power() const;

 private:
  std::size_t n_;
  double exposed_diameter_;
  double element_size_;
  std::vector<double> values_;
};

KernelMask build_kernel(const IrradianceProfile& profile, double exposed_diameter, std::size_t n);

// Piecewise-linear lamp output scale over elapsed time. An empty table
// means decay is disabled (scale 1 everywhere).
class LampDecayModel {
 public:
  LampDecayModel() = default;
  explicit LampDecayModel(std::vector<std::pair<double, double>> table);

  bool enabled() const noexcept { return !table_.empty(); }
  const std::vector<std::pair<double, double>>& table() const noexcept { return table_; }

 private:
  std::vector<std::pair<double, double>> table_;
};

double lamp_scale(const LampDecayModel& model, double t);

}  // namespace uvgi
