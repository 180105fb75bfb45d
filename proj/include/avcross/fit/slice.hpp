#pragma once

#include <span>
#include <vector>

namespace avcross::fit {

struct PeakFit {
  double center = 0.0;  // rad/s
  double fwhm = 0.0;    // rad/s; equals kappa for a cavity dip
  double depth = 0.0;   // fractional dip depth, [0, 1]
};

struct SliceBackground {
  double amplitude = 0.0;
  double period = 0.0;  // rad/s
  double phase = 0.0;
  double offset = 1.0;
};

struct SliceFitResult {
  std::vector<PeakFit> peaks;  // sorted by center
  SliceBackground background;
  double residual_norm = 0.0;
  bool degeneracy_warning = false;  // peak centers closer than 0.25 FWHM
};

// One-port input-output relation between the resonant dip depth and the
// input coupling: depth = 1 - (1 - 2 kappa_in/kappa)^2.
double depth_from_kappa_in(double kappa_in, double kappa);
// Inverse on the undercoupled branch kappa_in <= kappa/2.
double kappa_in_from_depth(double depth, double kappa);

// Fit n_peaks inverted Lorentzians plus a sinusoidal background to one
// reflection slice. detunings must be sorted ascending.
SliceFitResult fit_slice(std::span<const double> detunings,
                         std::span<const double> reflectance, int n_peaks);

}  // namespace avcross::fit
