#include "avcross/fit/static_params.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "avcross/errors.hpp"
#include "avcross/model.hpp"
#include "avcross/spectra.hpp"
#include "avcross/units.hpp"

namespace avcross::fit {

void SpectrumGrid::validate() const {
  if (z_values.size() < 2 || detunings.size() < 2)
    throw ConfigError("spectrum grid needs at least 2 points per axis");
  if (reflectance.size() != z_values.size() * detunings.size())
    throw ConfigError("spectrum grid: reflectance must be |z| x |detunings|");
  for (size_t i = 1; i < z_values.size(); ++i)
    if (!(z_values[i] > z_values[i - 1])) throw ConfigError("z_values must be ascending");
  for (size_t i = 1; i < detunings.size(); ++i)
    if (!(detunings[i] > detunings[i - 1])) throw ConfigError("detunings must be ascending");
}

namespace {

struct SlicePeaks {
  double z = 0.0;
  std::vector<double> center, fwhm, depth;  // ascending in center
  bool good = false;
};

struct LineFit {
  double slope = 0.0, intercept = 0.0;
  double slope_err = 0.0, intercept_err = 0.0;
  int n = 0;
};

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  LineFit f;
  f.n = static_cast<int>(x.size());
  if (f.n < 2) throw CoverageError("line fit needs at least 2 points");
  double sx = 0, sy = 0;
  for (int i = 0; i < f.n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / f.n, my = sy / f.n;
  double sxx = 0, sxy = 0;
  for (int i = 0; i < f.n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw CoverageError("line fit is degenerate (all x equal)");
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0;
  for (int i = 0; i < f.n; ++i) {
    const double r = y[i] - (f.slope * x[i] + f.intercept);
    ss += r * r;
  }
  const double s2 = f.n > 2 ? ss / (f.n - 2) : 0.0;
  f.slope_err = std::sqrt(s2 / sxx);
  f.intercept_err = std::sqrt(s2 * (1.0 / f.n + mx * mx / sxx));
  return f;
}

struct QuadFit {
  double a = 0, b = 0, c = 0;  // y = a x^2 + b x + c
  double rms = 0;
};

QuadFit fit_quadratic(std::span<const double> x, std::span<const double> y) {
  const int n = static_cast<int>(x.size());
  if (n < 4) throw CoverageError("quadratic fit needs at least 4 points");
  Eigen::MatrixXd design(n, 3);
  Eigen::VectorXd rhs(n);
  for (int i = 0; i < n; ++i) {
    design(i, 0) = x[i] * x[i];
    design(i, 1) = x[i];
    design(i, 2) = 1.0;
    rhs[i] = y[i];
  }
  const Eigen::VectorXd sol = design.colPivHouseholderQr().solve(rhs);
  QuadFit q{sol[0], sol[1], sol[2], 0.0};
  q.rms = std::sqrt((design * sol - rhs).squaredNorm() / n);
  return q;
}

ValueWithError mean_with_error(std::span<const double> v) {
  const int n = static_cast<int>(v.size());
  double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0;
  for (double x : v) var += (x - m) * (x - m);
  var = n > 1 ? var / (n - 1) : 0.0;
  return {m, std::sqrt(var / n)};
}

// crop a slice to windows around candidate dips, then run the joint fit
SliceFitResult fit_slice_cropped(std::span<const double> detunings,
                                 std::span<const double> row, int n_peaks) {
  // cheap pre-scan for candidate windows (same smoothing as fit_slice)
  const int n = static_cast<int>(row.size());
  std::vector<double> smooth(n);
  for (int i = 0; i < n; ++i) {
    const int lo = std::max(0, i - 2), hi = std::min(n - 1, i + 2);
    double s = 0;
    for (int k = lo; k <= hi; ++k) s += row[k];
    smooth[i] = s / (hi - lo + 1);
  }
  std::vector<double> sorted_smooth = smooth;
  std::nth_element(sorted_smooth.begin(), sorted_smooth.begin() + n / 2, sorted_smooth.end());
  const double baseline = sorted_smooth[n / 2];

  struct Cand {
    int i;
    double prom;
  };
  std::vector<Cand> cands;
  for (int i = 1; i + 1 < n; ++i)
    if (smooth[i] <= smooth[i - 1] && smooth[i] <= smooth[i + 1] &&
        (smooth[i] < smooth[i - 1] || smooth[i] < smooth[i + 1]))
      cands.push_back({i, baseline - smooth[i]});
  std::stable_sort(cands.begin(), cands.end(),
                   [](const Cand& a, const Cand& b) { return a.prom > b.prom; });
  std::vector<Cand> picked;
  for (const auto& c : cands) {
    bool close = false;
    for (const auto& q : picked)
      if (std::abs(c.i - q.i) <= 2) close = true;
    if (!close) picked.push_back(c);
    if (static_cast<int>(picked.size()) == n_peaks) break;
  }
  if (static_cast<int>(picked.size()) < n_peaks)
    throw FitError("slice pre-scan found too few dips");

  std::vector<char> keep(n, 0);
  for (const auto& c : picked) {
    const double level = smooth[c.i] + 0.5 * c.prom;
    int l = c.i, r = c.i;
    while (l > 0 && smooth[l] < level) --l;
    while (r + 1 < n && smooth[r] < level) ++r;
    const double w = std::max(detunings[r] - detunings[l],
                              2.0 * (detunings[1] - detunings[0]));
    for (int i = 0; i < n; ++i)
      if (std::abs(detunings[i] - detunings[c.i]) <= 10.0 * w) keep[i] = 1;
  }
  std::vector<double> cx, cy;
  for (int i = 0; i < n; ++i)
    if (keep[i]) {
      cx.push_back(detunings[i]);
      cy.push_back(row[i]);
    }
  return fit_slice(cx, cy, n_peaks);
}

}  // namespace

StaticParams extract_static_params(const SpectrumGrid& grid, const Topology& topology) {
  grid.validate();
  const int n_modes = topology.n_modes;
  if (n_modes < 2 || n_modes > 3)
    throw ConfigError("extract_static_params supports 2 or 3 modes");
  for (auto [i, j] : topology.crossings)
    if (i < 0 || j < 0 || i >= n_modes || j >= n_modes || i == j)
      throw ConfigError("topology crossing pair references invalid mode indices");
  if (topology.crossings.empty()) throw ConfigError("topology needs at least one crossing");

  const int nz = static_cast<int>(grid.z_values.size());

  // 1. per-slice Lorentzian fits
  std::vector<SlicePeaks> slices(nz);
  int bad = 0;
  for (int iz = 0; iz < nz; ++iz) {
    slices[iz].z = grid.z_values[iz];
    std::span<const double> row(&grid.reflectance[iz * grid.detunings.size()],
                                grid.detunings.size());
    try {
      const SliceFitResult f = fit_slice_cropped(grid.detunings, row, n_modes);
      for (const auto& p : f.peaks) {
        slices[iz].center.push_back(p.center);
        slices[iz].fwhm.push_back(p.fwhm);
        slices[iz].depth.push_back(p.depth);
      }
      slices[iz].good = true;
    } catch (const Error&) {
      ++bad;
    }
  }
  if (bad > nz / 4)
    throw FitError("slice fits failed on " + std::to_string(bad) + " of " +
                   std::to_string(nz) + " membrane positions");

  std::vector<const SlicePeaks*> good;
  for (const auto& s : slices)
    if (s.good) good.push_back(&s);
  const int ng = static_cast<int>(good.size());
  if (ng < 12) throw CoverageError("too few usable slices for parameter extraction");

  // 2. provisional mode lines from the outer quarters; modes are identified
  // with the branch ranks on the low-z side, and the lines themselves decide
  // the rank of each mode elsewhere (branch order flips across a crossing)
  const int quarter = std::max(ng / 4, 2);
  std::vector<LineFit> left_lines(n_modes);
  for (int r = 0; r < n_modes; ++r) {
    std::vector<double> xl, yl;
    for (int k = 0; k < quarter; ++k) {
      xl.push_back(good[k]->z);
      yl.push_back(good[k]->center[r]);
    }
    left_lines[r] = fit_line(xl, yl);
  }

  // provisional slopes per mode
  std::vector<double> slope_prov(n_modes);
  for (int m = 0; m < n_modes; ++m) slope_prov[m] = left_lines[m].slope;
  for (auto [i, j] : topology.crossings) {
    const double ds = std::abs(slope_prov[i] - slope_prov[j]);
    const double scale = std::max(std::abs(slope_prov[i]), std::abs(slope_prov[j]));
    if (ds < 1e-3 * scale)
      throw ConfigError("crossing pair has degenerate slopes; branches cannot be assigned");
  }

  // 3. per-crossing separation analysis
  StaticParams out;
  out.crossings.resize(topology.crossings.size());
  struct CrossWindow {
    double z_star, length;
  };
  std::vector<CrossWindow> windows;
  for (size_t ic = 0; ic < topology.crossings.size(); ++ic) {
    const auto [mi, mj] = topology.crossings[ic];
    const LineFit &li = left_lines[mi], &lj = left_lines[mj];
    const double z_pred = (lj.intercept - li.intercept) / (li.slope - lj.slope);
    const double f_pred = li.slope * z_pred + li.intercept;

    // branch pair carrying this crossing: adjacent centers bracketing f_pred
    std::vector<double> zs, seps, upper_c, lower_c;
    for (const auto* s : good) {
      int r = 0;
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k + 1 < n_modes; ++k) {
        const double mid = 0.5 * (s->center[k] + s->center[k + 1]);
        if (std::abs(mid - f_pred) < best) {
          best = std::abs(mid - f_pred);
          r = k;
        }
      }
      zs.push_back(s->z);
      lower_c.push_back(s->center[r]);
      upper_c.push_back(s->center[r + 1]);
      seps.push_back(s->center[r + 1] - s->center[r]);
    }
    int imin = 0;
    for (int k = 1; k < static_cast<int>(seps.size()); ++k)
      if (seps[k] < seps[imin]) imin = k;
    if (imin == 0 || imin + 1 == static_cast<int>(seps.size()))
      throw CoverageError("grid does not bracket the crossing (minimum separation at the edge)");

    // the separation of a two-mode crossing obeys sep^2 = ds^2 (z-z*)^2 + 4t^2,
    // so fit sep^2 to a quadratic near the minimum
    std::vector<double> wz, ws2, wup, wlo;
    const double sep_cap = 2.0 * seps[imin];
    for (int k = std::max(0, imin - 15); k < std::min<int>(seps.size(), imin + 16); ++k) {
      if (seps[k] > sep_cap) continue;
      wz.push_back(zs[k]);
      ws2.push_back(seps[k] * seps[k]);
      wup.push_back(upper_c[k]);
      wlo.push_back(lower_c[k]);
    }
    if (wz.size() < 5) throw CoverageError("crossing region under-resolved in z");
    const QuadFit q = fit_quadratic(wz, ws2);
    if (q.a <= 0.0) throw FitError("separation minimum is not quadratic");
    const double z_star = -q.b / (2.0 * q.a);
    const double sep2_min = q.c - q.b * q.b / (4.0 * q.a);
    if (sep2_min <= 0.0) throw FitError("separation extrapolates through zero (no gap found)");
    const double t = 0.5 * std::sqrt(sep2_min);
    const double t_err = q.rms / (8.0 * t) / std::sqrt(static_cast<double>(wz.size()));

    // cross-check: vertex curvature of the two branches
    double t_curv = 0.0;
    {
      const QuadFit qu = fit_quadratic(wz, wup), ql = fit_quadratic(wz, wlo);
      const double conv = 2.0 * (qu.a - ql.a);  // curvature difference
      const double ds = slope_prov[mi] - slope_prov[mj];
      if (conv > 0.0) t_curv = ds * ds / (2.0 * conv);
    }

    out.crossings[ic].pair = topology.crossings[ic];
    out.crossings[ic].t = {t, t_err};
    out.crossings[ic].t_from_curvature = t_curv;
    out.crossings[ic].crossing_z = z_star;
    const double ds = std::abs(slope_prov[mi] - slope_prov[mj]);
    windows.push_back({z_star, 2.0 * t / ds});
  }

  // 4. asymptotic windows: 12 crossing lengths away from every crossing that
  // involves the mode
  const auto is_asymptotic = [&](int mode, double z) {
    for (size_t ic = 0; ic < topology.crossings.size(); ++ic) {
      const auto [mi, mj] = topology.crossings[ic];
      if (mi != mode && mj != mode) continue;
      if (std::abs(z - windows[ic].z_star) < 12.0 * windows[ic].length) return false;
    }
    return true;
  };

  // rank of mode m among the mode lines at position z (= its branch index
  // away from crossings)
  const auto rank_of = [&](int mode, double z) {
    std::vector<double> vals(n_modes);
    for (int m = 0; m < n_modes; ++m)
      vals[m] = left_lines[m].slope * z + left_lines[m].intercept;
    int rank = 0;
    for (int m = 0; m < n_modes; ++m)
      if (vals[m] < vals[mode] || (vals[m] == vals[mode] && m < mode)) ++rank;
    return rank;
  };

  out.modes.resize(n_modes);
  for (int m = 0; m < n_modes; ++m) {
    std::vector<double> xz, yc, yk, ykin;
    int left_count = 0, right_count = 0;
    for (const auto* s : good) {
      if (!is_asymptotic(m, s->z)) continue;
      const int r = rank_of(m, s->z);
      xz.push_back(s->z);
      yc.push_back(s->center[r]);
      yk.push_back(s->fwhm[r]);
      ykin.push_back(kappa_in_from_depth(s->depth[r], s->fwhm[r]));
      bool involved = false;
      double zs = 0;
      for (size_t ic = 0; ic < topology.crossings.size(); ++ic)
        if (topology.crossings[ic].first == m || topology.crossings[ic].second == m) {
          involved = true;
          zs = windows[ic].z_star;
        }
      if (!involved || s->z < zs)
        ++left_count;
      else
        ++right_count;
    }
    if (xz.size() < 8 || left_count < 4 || right_count < 4)
      throw CoverageError("grid does not span both asymptotic regions for mode " +
                          std::to_string(m));
    const LineFit lf = fit_line(xz, yc);
    out.modes[m].slope_dis = {lf.slope, lf.slope_err};
    out.modes[m].offset = {lf.intercept, lf.intercept_err};
    out.modes[m].kappa = mean_with_error(yk);
    out.modes[m].kappa_in = mean_with_error(ykin);
  }

  // 5. phase per crossing from the on-resonance dip ratio
  for (size_t ic = 0; ic < topology.crossings.size(); ++ic) {
    const auto [mi, mj] = topology.crossings[ic];
    // measured ratio at the slice nearest the crossing
    int iz_c = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < ng; ++k)
      if (std::abs(good[k]->z - windows[ic].z_star) < best) {
        best = std::abs(good[k]->z - windows[ic].z_star);
        iz_c = k;
      }
    const SlicePeaks& cs = *good[iz_c];
    const double f_pred =
        left_lines[mi].slope * windows[ic].z_star + left_lines[mi].intercept;
    int r = 0;
    double bestmid = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < n_modes; ++k) {
      const double mid = 0.5 * (cs.center[k] + cs.center[k + 1]);
      if (std::abs(mid - f_pred) < bestmid) {
        bestmid = std::abs(mid - f_pred);
        r = k;
      }
    }
    const double ratio_meas = cs.depth[r + 1] / cs.depth[r];

    // local two-mode model with everything but phi fixed
    const auto model_ratio = [&](double phi) {
      std::vector<OpticalMode> modes(2);
      modes[0] = {"a", out.modes[mi].kappa.value, out.modes[mi].kappa_in.value,
                  out.modes[mi].slope_dis.value, 0.0, out.modes[mi].offset.value};
      modes[1] = {"b", out.modes[mj].kappa.value, out.modes[mj].kappa_in.value,
                  out.modes[mj].slope_dis.value, 0.0, out.modes[mj].offset.value};
      const SystemModel local(
          std::move(modes), {CouplingTerm{"a", "b", out.crossings[ic].t.value, phi}},
          MechanicalOscillator{1.0, 1e-4, 1e-12, 0.0});
      DriveConfig drive;
      drive.power_in = 1e-6;
      const Eigen::VectorXd branches = eigen_branches(local, cs.z);
      const double kbar = 0.5 * (out.modes[mi].kappa.value + out.modes[mj].kappa.value);
      double depth_lo = 0, depth_hi = 0;
      for (int b = 0; b < 2; ++b) {
        double dmax = 0;
        for (int s = -10; s <= 10; ++s) {
          drive.detuning = branches[b] + 0.03 * kbar * s;
          dmax = std::max(dmax, 1.0 - reflection(local, drive, cs.z).power_ratio);
        }
        (b == 0 ? depth_lo : depth_hi) = dmax;
      }
      return depth_hi / depth_lo;
    };

    // scan [0, pi]; reflection is invariant under phi -> -phi
    double best_phi = 0, best_diff = std::numeric_limits<double>::infinity();
    const int n_scan = 97;
    for (int s = 0; s < n_scan; ++s) {
      const double phi = units::pi * s / (n_scan - 1);
      const double diff = std::abs(model_ratio(phi) - ratio_meas);
      if (diff < best_diff) {
        best_diff = diff;
        best_phi = phi;
      }
    }
    // golden-section refinement around the best scan point
    {
      double a = std::max(0.0, best_phi - units::pi / (n_scan - 1));
      double b = std::min(units::pi, best_phi + units::pi / (n_scan - 1));
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = std::abs(model_ratio(x1) - ratio_meas);
      double f2 = std::abs(model_ratio(x2) - ratio_meas);
      for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
          b = x2;
          x2 = x1;
          f2 = f1;
          x1 = b - gr * (b - a);
          f1 = std::abs(model_ratio(x1) - ratio_meas);
        } else {
          a = x1;
          x1 = x2;
          f1 = f2;
          x2 = a + gr * (b - a);
          f2 = std::abs(model_ratio(x2) - ratio_meas);
        }
      }
      best_phi = 0.5 * (a + b);
      best_diff = std::abs(model_ratio(best_phi) - ratio_meas);
    }
    if (best_diff > 0.2 * std::max(ratio_meas, 1e-6))
      throw ConfigError("measured dip ratio is outside the range achievable by any "
                        "coupling phase (model mismatch)");

    // uncertainty via the local derivative of the ratio
    const double dphi = 0.02;
    const double drdphi =
        (model_ratio(std::min(best_phi + dphi, units::pi)) -
         model_ratio(std::max(best_phi - dphi, 0.0))) /
        (std::min(best_phi + dphi, units::pi) - std::max(best_phi - dphi, 0.0));
    const double sigma_ratio = 0.02 * ratio_meas + best_diff;
    out.crossings[ic].phi = {best_phi,
                             std::abs(drdphi) > 0 ? std::abs(sigma_ratio / drdphi) : 0.0};
  }

  return out;
}

}  // namespace avcross::fit
