#include "avcross/spectra.hpp"

#include <algorithm>
#include <cmath>

#include "avcross/units.hpp"

namespace avcross {

Eigen::VectorXd eigen_branches(const SystemModel& model, double z_dis) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(model.mode_matrix(z_dis, 0.0),
                                                         Eigen::EigenvaluesOnly);
  return solver.eigenvalues();  // ascending
}

std::vector<Eigen::VectorXd> branch_sweep(const SystemModel& model,
                                          std::span<const double> z_values) {
  const int n = model.size();
  double t_scale = 0.0;
  for (const auto& c : model.couplings()) t_scale = std::max(t_scale, c.t);
  double dslope_max = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      dslope_max = std::max(dslope_max, std::abs(model.modes()[i].slope_dis -
                                                 model.modes()[j].slope_dis));

  std::vector<Eigen::VectorXd> out;
  out.reserve(z_values.size());
  Eigen::MatrixXcd prev_vecs;
  double prev_z = 0.0;
  // tracked branch k reads solver column order[k]; the order persists across
  // the sweep and only changes where branches (nearly) cross
  std::vector<int> order(n);
  for (int k = 0; k < n; ++k) order[k] = k;

  for (double z : z_values) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> solver(model.mode_matrix(z, 0.0));
    Eigen::VectorXd vals = solver.eigenvalues();
    Eigen::MatrixXcd vecs = solver.eigenvectors();

    double min_gap = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < n; ++k) min_gap = std::min(min_gap, vals[k + 1] - vals[k]);

    // the gap threshold: coupled branches never dip below 2t, so 1e-6 t stays
    // quiet for avoided crossings; decoupled branches can swap sorted order
    // between grid points, caught by the step-resolution term
    const double threshold =
        std::max(1e-6 * t_scale, 2.0 * std::abs(z - prev_z) * dslope_max);
    if (prev_vecs.size() != 0 && n > 1 && min_gap < threshold) {
      std::vector<int> new_order(n, -1);
      std::vector<bool> used(n, false);
      for (int k = 0; k < n; ++k) {
        int best = -1;
        double best_ov = -1.0;
        for (int j = 0; j < n; ++j) {
          if (used[j]) continue;
          const double ov = std::abs(prev_vecs.col(order[k]).dot(vecs.col(j)));
          if (ov > best_ov) {
            best_ov = ov;
            best = j;
          }
        }
        new_order[k] = best;
        used[best] = true;
      }
      order = new_order;
    }

    Eigen::VectorXd tracked(n);
    for (int k = 0; k < n; ++k) tracked[k] = vals[order[k]];
    out.push_back(tracked);
    prev_vecs = vecs;
    prev_z = z;
  }
  return out;
}

namespace {

// slope-difference scale used for curvature steps and extremum diagnostics
double max_slope_difference(const SystemModel& model) {
  double ds = 0.0;
  for (int i = 0; i < model.size(); ++i)
    for (int j = i + 1; j < model.size(); ++j)
      ds = std::max(ds, std::abs(model.modes()[i].slope_dis - model.modes()[j].slope_dis));
  return ds;
}

}  // namespace

CurvatureResult quadratic_coefficient(const SystemModel& model, double crossing_z) {
  if (model.size() < 2)
    throw ConfigError("quadratic_coefficient requires at least two modes");

  // Step choice: resolve the hyperbola vertex, h = min(0.01 t / |dslope|, 0.01 nm)
  double h = units::from_nm(0.01);
  for (const auto& c : model.couplings()) {
    if (c.t <= 0.0) continue;
    const double ds = std::abs(model.modes()[model.index_of(c.mode_a)].slope_dis -
                               model.modes()[model.index_of(c.mode_b)].slope_dis);
    if (ds > 0.0) h = std::min(h, 0.01 * c.t / ds);
  }

  const int n = model.size();
  const auto ev = [&](double z) { return eigen_branches(model, z); };
  const Eigen::VectorXd e0 = ev(crossing_z);

  // anticrossing pair: adjacent branches with minimal separation here
  int lower = 0;
  for (int k = 1; k + 1 < n; ++k)
    if (e0[k + 1] - e0[k] < e0[lower + 1] - e0[lower]) lower = k;

  // extremum diagnostic: branch separation must be stationary at crossing_z
  const double ds_scale = max_slope_difference(model);
  {
    const Eigen::VectorXd ep = ev(crossing_z + h), em = ev(crossing_z - h);
    const double dsep = ((ep[lower + 1] - ep[lower]) - (em[lower + 1] - em[lower])) / (2.0 * h);
    if (ds_scale > 0.0 && std::abs(dsep) > 0.05 * ds_scale)
      throw ConfigError("crossing_z is not an extremum of the branch separation "
                        "(|d sep/dz| = " + std::to_string(std::abs(dsep) / ds_scale) +
                        " of the slope scale)");
  }

  // central second differences with one Richardson step
  const auto d2 = [&](double step) {
    const Eigen::VectorXd ep = ev(crossing_z + step), em = ev(crossing_z - step);
    return Eigen::VectorXd(((ep + em) - 2.0 * e0) / (step * step));
  };
  const Eigen::VectorXd coarse = d2(h), fine = d2(0.5 * h);
  const Eigen::VectorXd curv = (4.0 * fine - coarse) / 3.0;

  CurvatureResult result;
  result.branch_curvatures.assign(curv.data(), curv.data() + n);
  result.lower_branch = lower;
  result.upper_branch = lower + 1;
  result.paper_convention = curv[lower + 1] - curv[lower];
  return result;
}

namespace detail {

Eigen::MatrixXcd susceptibility_denominator(const SystemModel& model, double detuning,
                                            double omega, double z_dis) {
  const int n = model.size();
  Eigen::MatrixXcd a = std::complex<double>(0.0, 1.0) * model.mode_matrix(z_dis, 0.0);
  for (int k = 0; k < n; ++k)
    a(k, k) += 0.5 * model.modes()[k].kappa - std::complex<double>(0.0, detuning + omega);
  return a;
}

Eigen::VectorXcd steady_state_amp(const SystemModel& model, double detuning,
                                  std::complex<double> a_in, double z_dis) {
  const Eigen::MatrixXcd a = susceptibility_denominator(model, detuning, 0.0, z_dis);
  const Eigen::VectorXcd drive_vec = model.sqrt_kappa_in().cast<std::complex<double>>() * a_in;
  return a.partialPivLu().solve(drive_vec);
}

}  // namespace detail

Eigen::MatrixXcd susceptibility(const SystemModel& model, const DriveConfig& drive,
                                double omega, double z_dis) {
  drive.validate();
  const Eigen::MatrixXcd a = detail::susceptibility_denominator(model, drive.detuning, omega, z_dis);
  return a.partialPivLu().inverse();
}

Eigen::VectorXcd steady_state(const SystemModel& model, const DriveConfig& drive, double z_dis) {
  drive.validate();
  const double a_in = std::sqrt(drive.photon_flux());
  return detail::steady_state_amp(model, drive.detuning, a_in, z_dis);
}

ReflectionResult reflection(const SystemModel& model, const DriveConfig& drive, double z_dis) {
  drive.validate();
  if (!(drive.photon_flux() > 0.0))
    throw ConfigError("reflection requires a nonzero drive flux", "drive.power_in_uw");
  const Eigen::VectorXcd a0 = detail::steady_state_amp(model, drive.detuning, 1.0, z_dis);
  const Eigen::VectorXcd v = model.sqrt_kappa_in().cast<std::complex<double>>();
  ReflectionResult r;
  r.amplitude_ratio = 1.0 - v.dot(a0);  // dot() conjugates the left argument
  r.power_ratio = std::norm(r.amplitude_ratio);
  return r;
}

}  // namespace avcross
