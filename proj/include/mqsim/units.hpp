#pragma once

#include <numbers>

namespace mqsim::units {

inline constexpr double pi = std::numbers::pi;

inline constexpr double um = 1e-6;   // metres per micrometre
inline constexpr double mm = 1e-3;   // metres per millimetre
inline constexpr double pm_per_V = 1e-12;

constexpr double um_to_m(double v) { return v * um; }
constexpr double m_to_um(double v) { return v / um; }
constexpr double mm_to_m(double v) { return v * mm; }
constexpr double m_to_mm(double v) { return v / mm; }

// Vacuum wavenumber in rad/m for a wavelength given in micrometres.
constexpr double wavenumber_per_m(double lambda_um) { return 2.0 * pi / um_to_m(lambda_um); }

}  // namespace mqsim::units
