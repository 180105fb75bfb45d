#include "avcross/fit/slice.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avcross/errors.hpp"
#include "avcross/fit/least_squares.hpp"
#include "avcross/units.hpp"

namespace avcross::fit {

double depth_from_kappa_in(double kappa_in, double kappa) {
  const double a = 1.0 - 2.0 * kappa_in / kappa;
  return 1.0 - a * a;
}

double kappa_in_from_depth(double depth, double kappa) {
  const double d = std::clamp(depth, 0.0, 1.0);
  return 0.5 * kappa * (1.0 - std::sqrt(1.0 - d));
}

namespace {

std::vector<double> moving_average(std::span<const double> y, int window) {
  const int n = static_cast<int>(y.size());
  std::vector<double> out(n);
  const int half = window / 2;
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - half);
    const int hi = std::min(n - 1, i + half);
    double s = 0.0;
    for (int k = lo; k <= hi; ++k) s += y[k];
    out[i] = s / (hi - lo + 1);
  }
  return out;
}

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + mid, v.end());
  double m = v[mid];
  if (v.size() % 2 == 0) {
    std::nth_element(v.begin(), v.begin() + mid - 1, v.end());
    m = 0.5 * (m + v[mid - 1]);
  }
  return m;
}

struct Candidate {
  int index;
  double prominence;
};

// model: offset + amp*sin(2*pi*freq*(x - x0) + phase) - sum_k d_k * L_k(x)
struct SliceModel {
  std::span<const double> x;
  double x0;
  int n_peaks;

  double operator()(const Eigen::VectorXd& p, int i) const {
    double v = p[0] + p[1] * std::sin(units::two_pi * p[2] * (x[i] - x0) + p[3]);
    for (int k = 0; k < n_peaks; ++k) {
      const double c = p[4 + 3 * k], w = p[5 + 3 * k], d = p[6 + 3 * k];
      const double u = 2.0 * (x[i] - c) / w;
      v -= d / (1.0 + u * u);
    }
    return v;
  }
};

}  // namespace

SliceFitResult fit_slice(std::span<const double> detunings,
                         std::span<const double> reflectance, int n_peaks) {
  const int n = static_cast<int>(detunings.size());
  if (n_peaks < 1 || n_peaks > 3)
    throw ConfigError("fit_slice supports 1..3 peaks");
  if (reflectance.size() != detunings.size())
    throw ConfigError("fit_slice: detunings and reflectance differ in length");
  if (n < 8 * n_peaks)
    throw ConfigError("fit_slice: need at least 8 samples per peak");
  for (int i = 1; i < n; ++i)
    if (!(detunings[i] > detunings[i - 1]))
      throw ConfigError("fit_slice: detunings must be sorted ascending");

  const auto smooth = moving_average(reflectance, 5);
  std::vector<double> abs_dev(n);
  for (int i = 0; i < n; ++i) abs_dev[i] = std::abs(reflectance[i] - smooth[i]);
  const double noise = 1.4826 * median_of(abs_dev);
  const double baseline = median_of(std::vector<double>(smooth.begin(), smooth.end()));
  const double threshold = std::max(4.0 * noise, 0.002 * std::max(std::abs(baseline), 0.1));

  // candidate dips: local minima of the smoothed slice, deepest first
  std::vector<Candidate> candidates;
  for (int i = 1; i + 1 < n; ++i) {
    if (smooth[i] <= smooth[i - 1] && smooth[i] <= smooth[i + 1] &&
        (smooth[i] < smooth[i - 1] || smooth[i] < smooth[i + 1])) {
      const double prom = baseline - smooth[i];
      if (prom > threshold) candidates.push_back({i, prom});
    }
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.prominence > b.prominence; });
  std::vector<Candidate> picked;
  for (const auto& c : candidates) {
    bool close = false;
    for (const auto& q : picked)
      if (std::abs(c.index - q.index) <= 2) close = true;
    if (!close) picked.push_back(c);
    if (static_cast<int>(picked.size()) == n_peaks) break;
  }
  if (static_cast<int>(picked.size()) < n_peaks)
    throw FitError("fit_slice: expected " + std::to_string(n_peaks) + " dips, found " +
                   std::to_string(picked.size()));
  std::sort(picked.begin(), picked.end(),
            [](const Candidate& a, const Candidate& b) { return a.index < b.index; });

  const double span = detunings[n - 1] - detunings[0];
  const double grid_step = span / (n - 1);

  // initial parameter vector: background then (center, width, depth) per peak
  const int np = 4 + 3 * n_peaks;
  Eigen::VectorXd p0(np), lo(np), hi(np), steps(np);
  p0 << baseline, 0.0, 1.0 / span, 0.0, Eigen::VectorXd::Zero(3 * n_peaks);
  lo[0] = -1e30; hi[0] = 1e30;
  lo[1] = -1e30; hi[1] = 1e30;
  lo[2] = 0.0;   hi[2] = 20.0 / span;
  lo[3] = -10.0; hi[3] = 10.0;
  steps[0] = std::max(1e-4, 1e-3 * std::abs(baseline));
  steps[1] = steps[0];
  steps[2] = 0.01 / span;
  steps[3] = 1e-3;
  for (int k = 0; k < n_peaks; ++k) {
    const int i = picked[k].index;
    const double level = smooth[i] + 0.5 * picked[k].prominence;
    int l = i, r = i;
    while (l > 0 && smooth[l] < level) --l;
    while (r + 1 < n && smooth[r] < level) ++r;
    const double w0 = std::max(detunings[r] - detunings[l], 2.0 * grid_step);
    p0[4 + 3 * k] = detunings[i];
    p0[5 + 3 * k] = w0;
    p0[6 + 3 * k] = std::clamp(picked[k].prominence, 0.01, 1.0);
    lo[4 + 3 * k] = detunings[0];
    hi[4 + 3 * k] = detunings[n - 1];
    lo[5 + 3 * k] = grid_step;
    hi[5 + 3 * k] = 2.0 * span;
    lo[6 + 3 * k] = 0.0;
    hi[6 + 3 * k] = 1.0;
    steps[4 + 3 * k] = 0.02 * w0;
    steps[5 + 3 * k] = 0.02 * w0;
    steps[6 + 3 * k] = 1e-4;
  }

  const SliceModel model{detunings, detunings[0], n_peaks};
  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    for (int i = 0; i < n; ++i) r[i] = model(p, i) - reflectance[i];
  };

  LsqOptions opts;
  opts.diff_steps = steps;
  const LsqResult lsq = least_squares(residual, n, p0, lo, hi, opts);
  if (!lsq.converged)
    throw FitError("fit_slice: no convergence after " + std::to_string(lsq.iterations) +
                       " iterations",
                   lsq.residual_norm);

  SliceFitResult out;
  out.background.offset = lsq.params[0];
  out.background.amplitude = lsq.params[1];
  out.background.period = lsq.params[2] > 0.0 ? 1.0 / lsq.params[2] : 0.0;
  out.background.phase = lsq.params[3];
  out.residual_norm = lsq.residual_norm;
  for (int k = 0; k < n_peaks; ++k)
    out.peaks.push_back(PeakFit{lsq.params[4 + 3 * k], lsq.params[5 + 3 * k],
                                lsq.params[6 + 3 * k]});
  std::sort(out.peaks.begin(), out.peaks.end(),
            [](const PeakFit& a, const PeakFit& b) { return a.center < b.center; });
  for (size_t a = 0; a + 1 < out.peaks.size(); ++a) {
    const double min_sep = 0.25 * std::max(out.peaks[a].fwhm, out.peaks[a + 1].fwhm);
    if (out.peaks[a + 1].center - out.peaks[a].center < min_sep) out.degeneracy_warning = true;
  }
  return out;
}

}  // namespace avcross::fit
