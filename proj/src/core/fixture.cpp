#include "uvgi/fixture.hpp"

#include <algorithm>
#include <cmath>

namespace uvgi::fixture {

double reference_irradiance(double r) {
  const double core = std::exp(-r * r / (2.0 * kCoreSigma * kCoreSigma));
  const double ring_arg = (r - kRingRadius) / kRingWidth;
  const double ring = kRingWeight * std::exp(-0.5 * ring_arg * ring_arg);
  const double skirt = kSkirtWeight * std::max(0.0, 1.0 - r / kSkirtReach);
  return kAmplitude * (core + ring + skirt);
}

std::vector<IrradianceMeasurement> reference_measurements() {
  std::vector<IrradianceMeasurement> samples;
  for (int cm = 0; cm <= 16; ++cm) {
    const double r = 0.01 * cm;
    samples.push_back({r, reference_irradiance(r)});
  }
  return samples;
}

IrradianceProfile reference_profile() {
  const auto samples = reference_measurements();
  return fit_profile(samples, kFitOrder);
}

LampDecayModel reference_lamp_droop() {
  const double peak = reference_irradiance(0.0);
  return LampDecayModel({{0.0, 1.0}, {600.0, 1.0 - kDroopPerTenMinutes / peak}});
}

}  // namespace uvgi::fixture
