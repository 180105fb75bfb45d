#pragma once

#include <span>
#include <vector>

namespace avcross::fit {

// One point of a detuning sweep: mechanical frequency fm measured at elapsed
// time t (cyclic Hz / seconds, the CSV units).
struct DriftPoint {
  double detuning = 0.0;  // rad/s
  double time_s = 0.0;
  double fm_hz = 0.0;
};

struct DriftModel {
  double rate_hz_per_s = 0.0;
  double intercept_hz = 0.0;
};

struct DriftResult {
  std::vector<DriftPoint> corrected_forward;  // drift removed, referenced to the first point
  DriftModel model;
  int shared_detunings = 0;
};

// Fit the frequency difference at repeated detunings against elapsed time,
// remove the linear drift from the forward series, discard the backward one.
DriftResult drift_subtract(std::span<const DriftPoint> forward,
                           std::span<const DriftPoint> backward);

}  // namespace avcross::fit
