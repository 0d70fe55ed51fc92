#pragma once

#include <numbers>

// Physical constants (CODATA 2018, exact SI values) and the single place where
// ordinary frequency (Hz) is converted to angular frequency (rad/s).
namespace holeburn::units {

inline constexpr double hbar = 1.054571817e-34;     // J s
inline constexpr double boltzmann = 1.380649e-23;   // J / K
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double to_angular(double hz) { return two_pi * hz; }
constexpr double to_hz(double rad_per_s) { return rad_per_s / two_pi; }

}  // namespace holeburn::units
