#include "avcross/fit/drift.hpp"

#include <cmath>

#include "avcross/errors.hpp"

namespace avcross::fit {

DriftResult drift_subtract(std::span<const DriftPoint> forward,
                           std::span<const DriftPoint> backward) {
  if (forward.empty()) throw ConfigError("drift_subtract: forward series is empty");

  // pair up repeated detunings (first matching occurrence, tolerant compare)
  std::vector<double> dt, df;
  for (const auto& b : backward) {
    for (const auto& f : forward) {
      const double scale = std::max({std::abs(f.detuning), std::abs(b.detuning), 1.0});
      if (std::abs(f.detuning - b.detuning) <= 1e-9 * scale) {
        dt.push_back(b.time_s - f.time_s);
        df.push_back(b.fm_hz - f.fm_hz);
        break;
      }
    }
  }
  const int n = static_cast<int>(dt.size());
  if (n < 2)
    throw CoverageError("drift_subtract: need at least 2 shared detunings, have " +
                        std::to_string(n));

  // least-squares line df = rate * dt + intercept
  double sx = 0, sy = 0;
  for (int i = 0; i < n; ++i) {
    sx += dt[i];
    sy += df[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    sxx += (dt[i] - mx) * (dt[i] - mx);
    sxy += (dt[i] - mx) * (df[i] - my);
  }
  if (sxx == 0.0)
    throw CoverageError("drift_subtract: shared detunings have identical elapsed times");

  DriftResult out;
  out.shared_detunings = n;
  out.model.rate_hz_per_s = sxy / sxx;
  out.model.intercept_hz = my - out.model.rate_hz_per_s * mx;

  const double t0 = forward.front().time_s;
  out.corrected_forward.assign(forward.begin(), forward.end());
  for (auto& p : out.corrected_forward)
    p.fm_hz -= out.model.rate_hz_per_s * (p.time_s - t0);
  return out;
}

}  // namespace avcross::fit
