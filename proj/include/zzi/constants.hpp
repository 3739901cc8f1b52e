#pragma once

#include <numbers>

namespace zzi::phys {

inline constexpr double hbar = 1.054571817e-34;
inline constexpr double h = 6.62607015e-34;
inline constexpr double e = 1.602176634e-19;
inline constexpr double c0 = 299792458.0;
inline constexpr double phi0 = hbar / (2.0 * e);  // reduced flux quantum
inline constexpr double two_pi = 2.0 * std::numbers::pi;

inline constexpr double fF = 1e-15;
inline constexpr double nH = 1e-9;
inline constexpr double mm = 1e-3;

// charging energy e^2/2C expressed in rad/s
inline double charging_rate(double C) { return e * e / (2.0 * C * hbar); }

inline double ghz(double omega) { return omega / two_pi / 1e9; }
inline double mhz(double omega) { return omega / two_pi / 1e6; }
inline double khz(double omega) { return omega / two_pi / 1e3; }
inline double from_ghz(double f) { return two_pi * f * 1e9; }

}  // namespace zzi::phys
