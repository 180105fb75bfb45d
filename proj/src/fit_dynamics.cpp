#include "avcross/fit/dynamics_fit.hpp"

#include <cmath>

#include "avcross/dynamics.hpp"
#include "avcross/errors.hpp"
#include "avcross/fit/least_squares.hpp"
#include "avcross/units.hpp"

namespace avcross::fit {

DynamicsFitResult fit_dynamics(std::span<const DynamicsPoint> measured,
                               const SystemModel& model, const DriveConfig& drive,
                               double z_dis, std::span<const FreeParam> free_params) {
  if (free_params.empty()) throw ConfigError("fit_dynamics: free_params must be non-empty");
  if (measured.size() < free_params.size() + 1)
    throw ConfigError("fit_dynamics: not enough data points");
  for (const auto& fp : free_params)
    if (fp.kind == FreeParam::Kind::SlopeOsc &&
        (fp.mode_index < 0 || fp.mode_index >= model.size()))
      throw ConfigError("fit_dynamics: SlopeOsc free parameter needs a valid mode index");

  const int nd = static_cast<int>(measured.size());
  const int np = static_cast<int>(free_params.size());

  std::vector<double> detunings(nd);
  for (int i = 0; i < nd; ++i) detunings[i] = measured[i].detuning;

  // weights: inverse variance when provided, otherwise unit RMS per series
  bool have_errors = true;
  for (const auto& m : measured)
    if (!(m.sigma_omega > 0.0) || !(m.sigma_gamma > 0.0)) have_errors = false;
  std::vector<double> w_om(nd), w_gm(nd);
  if (have_errors) {
    for (int i = 0; i < nd; ++i) {
      w_om[i] = 1.0 / measured[i].sigma_omega;
      w_gm[i] = 1.0 / measured[i].sigma_gamma;
    }
  } else {
    double rms_om = 0, rms_gm = 0;
    for (const auto& m : measured) {
      rms_om += m.delta_omega * m.delta_omega;
      rms_gm += m.delta_gamma * m.delta_gamma;
    }
    rms_om = std::sqrt(rms_om / nd);
    rms_gm = std::sqrt(rms_gm / nd);
    if (rms_om == 0.0) rms_om = 1.0;
    if (rms_gm == 0.0) rms_gm = 1.0;
    for (int i = 0; i < nd; ++i) {
      w_om[i] = 1.0 / rms_om;
      w_gm[i] = 1.0 / rms_gm;
    }
  }

  // parameter packing: start from the passed-in model/drive values
  Eigen::VectorXd p0(np), lo(np), hi(np), steps(np);
  for (int j = 0; j < np; ++j) {
    switch (free_params[j].kind) {
      case FreeParam::Kind::SlopeOsc:
        p0[j] = model.modes()[free_params[j].mode_index].slope_osc;
        lo[j] = -1e30;
        hi[j] = 1e30;
        steps[j] = units::from_mhz_per_nm(0.005);
        break;
      case FreeParam::Kind::ZDis:
        p0[j] = z_dis;
        lo[j] = -1e30;
        hi[j] = 1e30;
        steps[j] = units::from_nm(1e-3);
        break;
      case FreeParam::Kind::PowerIn:
        p0[j] = drive.power_in;
        lo[j] = 0.0;
        hi[j] = 1e30;
        steps[j] = std::max(1e-3 * drive.power_in, 1e-9);
        break;
    }
  }

  const auto apply = [&](const Eigen::VectorXd& p, std::vector<OpticalMode>& modes,
                         DriveConfig& d, double& z) {
    for (int j = 0; j < np; ++j) {
      switch (free_params[j].kind) {
        case FreeParam::Kind::SlopeOsc:
          modes[free_params[j].mode_index].slope_osc = p[j];
          break;
        case FreeParam::Kind::ZDis:
          z = p[j];
          break;
        case FreeParam::Kind::PowerIn:
          d.power_in = p[j];
          break;
      }
    }
  };

  const auto residual = [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
    std::vector<OpticalMode> modes = model.modes();
    DriveConfig d = drive;
    double z = z_dis;
    apply(p, modes, d, z);
    const SystemModel trial(modes, model.couplings(), model.mech(),
                            model.crossing_frequency());
    const auto sweep = spring_damping_sweep(trial, d, z, detunings);
    for (int i = 0; i < nd; ++i) {
      r[i] = w_om[i] * (sweep[i].delta_omega - measured[i].delta_omega);
      r[nd + i] = w_gm[i] * (sweep[i].delta_gamma - measured[i].delta_gamma);
    }
  };

  LsqOptions opts;
  opts.diff_steps = steps;
  opts.max_iterations = 300;
  const LsqResult lsq = least_squares(residual, 2 * nd, p0, lo, hi, opts);
  if (!lsq.converged)
    throw FitError("fit_dynamics: no convergence after " + std::to_string(lsq.iterations) +
                       " iterations",
                   lsq.residual_norm);

  DynamicsFitResult out;
  out.residual_norm = lsq.residual_norm;
  out.iterations = lsq.iterations;
  out.boundary_warning = lsq.at_bound;
  for (int j = 0; j < np; ++j) out.values.push_back({lsq.params[j], lsq.stderrs[j]});
  return out;
}

}  // namespace avcross::fit
