#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "avcross/model.hpp"

namespace avcross {

// Uniformly sampled time-domain solution of the classical equations of
// motion in the drive rotating frame. mech is the dimensionless amplitude c
// (z = c + c* in z_zpf units).
struct Trajectory {
  std::vector<double> times;
  Eigen::MatrixXcd optical;  // sample row x mode column
  std::vector<std::complex<double>> mech;
};

struct IntegrationSettings {
  double duration = 0.0;
  double dt = 0.0;  // sampling grid spacing; also the maximum internal step
  std::complex<double> c0 = 0.0;
  std::optional<Eigen::VectorXcd> a0;  // defaults to the static steady state
  double rel_tol = 1e-10;
  double abs_tol = 1e-9;
  // mechanical amplitude growth beyond this factor raises InstabilityError
  double instability_factor = 1e6;
};

// Largest admissible step 0.05 / max(kappa, |Delta| + max |M eigenvalue|):
// resolves the fastest optical scale left in the rotating frame.
double oracle_max_step(const SystemModel& model, const DriveConfig& drive, double z_dis);

Trajectory integrate(const SystemModel& model, const DriveConfig& drive, double z_dis,
                     const IntegrationSettings& settings);

// Memory-light run for long ringdowns: stores every stride-th mechanical
// sample and drops the optical channels.
struct MechRecord {
  double t0 = 0.0;
  double dt = 0.0;
  std::vector<std::complex<double>> c;
};

MechRecord integrate_mech(const SystemModel& model, const DriveConfig& drive, double z_dis,
                          const IntegrationSettings& settings, int stride);

struct RingdownEstimate {
  double omega = 0.0;  // |d arg c / dt|, rad/s
  double gamma = 0.0;  // -2 d log|c| / dt, rad/s
  double omega_err = 0.0;
  double gamma_err = 0.0;
};

// Frequency from a linear fit of the unwrapped phase, damping from a linear
// fit of log|c|. subtract_dc removes the static radiation-pressure offset by
// averaging over an integer number of estimated periods first.
RingdownEstimate ringdown_estimate(std::span<const std::complex<double>> c, double dt,
                                   bool subtract_dc = false);
RingdownEstimate ringdown_estimate(const Trajectory& trajectory, bool subtract_dc = false);

}  // namespace avcross
