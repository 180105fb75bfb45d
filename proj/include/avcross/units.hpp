#pragma once

namespace avcross::units {

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// CODATA 2018 exact values
inline constexpr double hbar = 1.054571817e-34;        // J s
inline constexpr double planck_h = 6.62607015e-34;     // J s
inline constexpr double k_boltzmann = 1.380649e-23;    // J / K
inline constexpr double c_light = 299792458.0;         // m / s

// All internal frequencies are angular (rad/s) and all lengths are meters.
// Configuration files use the conventional lab units (cyclic MHz/kHz/Hz, nm,
// microwatt, nanogram); these helpers convert at the boundary.
constexpr double from_mhz(double f) { return two_pi * 1e6 * f; }
constexpr double from_khz(double f) { return two_pi * 1e3 * f; }
constexpr double from_hz(double f) { return two_pi * f; }
constexpr double to_mhz(double w) { return w / (two_pi * 1e6); }
constexpr double to_khz(double w) { return w / (two_pi * 1e3); }
constexpr double to_hz(double w) { return w / two_pi; }

constexpr double from_nm(double z) { return 1e-9 * z; }
constexpr double to_nm(double z) { return 1e9 * z; }

// slopes quoted as (cyclic MHz) per nm
constexpr double from_mhz_per_nm(double s) { return two_pi * 1e15 * s; }
constexpr double to_mhz_per_nm(double s) { return s / (two_pi * 1e15); }

// curvatures quoted as (cyclic MHz) per nm^2
constexpr double from_mhz_per_nm2(double s) { return two_pi * 1e24 * s; }
constexpr double to_mhz_per_nm2(double s) { return s / (two_pi * 1e24); }

constexpr double from_uw(double p) { return 1e-6 * p; }
constexpr double to_uw(double p) { return 1e6 * p; }

constexpr double from_ng(double m) { return 1e-12 * m; }
constexpr double to_ng(double m) { return 1e12 * m; }

}  // namespace avcross::units
