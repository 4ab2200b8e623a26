#pragma once

// Reference UV source used by the acceptance suite, the CLI defaults and the
// bundled data/reference_profile.csv.
//
// The radial shape is a Gaussian core (sigma 3.6 cm) with a faint ring at
// 2.5 cm from the LED layout and a low linear skirt that fades out past the
// last measured distance. Its amplitude is calibrated so the 16 x 16 kernel
// over a 0.16 m footprint yields a centre-row dose of 15.14 J/m^2 at 1 m/s.

#include <vector>

#include "uvgi/radiometry.hpp"

namespace uvgi::fixture {

inline constexpr double kEbolaSudanK = 0.0867;  // m^2/J
inline constexpr double kAmplitude = 161.85;    // W/m^2
inline constexpr double kCoreSigma = 0.036;     // m
inline constexpr double kRingRadius = 0.025;    // m
inline constexpr double kRingWidth = 0.006;     // m
inline constexpr double kRingWeight = 0.08;
inline constexpr double kSkirtWeight = 0.015;
inline constexpr double kSkirtReach = 0.17;  // m

inline constexpr double kExposedDiameter = 0.16;  // m
inline constexpr std::size_t kKernelSize = 16;
inline constexpr int kFitOrder = 15;

// Irradiance droop of roughly 2.46 W/m^2 over ten minutes of use.
inline constexpr double kDroopPerTenMinutes = 2.46;  // W/m^2

double reference_irradiance(double r);

// 17 samples at 0, 1, ..., 16 cm.
std::vector<IrradianceMeasurement> reference_measurements();

// Order-15 fit of reference_measurements(); cutoff at the last sample (0.16 m).
IrradianceProfile reference_profile();

// Two-point table {(0, 1), (600 s, 1 - droop / peak)}.
LampDecayModel reference_lamp_droop();

}  // namespace uvgi::fixture
