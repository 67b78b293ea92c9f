#pragma once

#include <complex>

namespace iongate {

using complexd = std::complex<double>;

namespace constants {

inline constexpr double hbar = 1.054571817e-34;       // J s
inline constexpr double bohr_magneton = 9.2740100783e-24;  // J/T
inline constexpr double atomic_mass_unit = 1.66053906660e-27;  // kg
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// mu_B / hbar, rad/s per tesla
inline constexpr double mu_b_over_hbar = bohr_magneton / hbar;

}  // namespace constants

// All internal frequencies are angular (rad/s). File formats and the CLI
// deal in Hz (or MHz) and convert exactly once at the boundary.
inline constexpr double hz_to_rad(double f) { return constants::two_pi * f; }
inline constexpr double rad_to_hz(double w) { return w / constants::two_pi; }

}  // namespace iongate
