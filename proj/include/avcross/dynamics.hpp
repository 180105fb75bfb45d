#pragma once

#include <complex>
#include <span>
#include <vector>

#include "avcross/model.hpp"

namespace avcross {

// Complex self-energy Sigma[omega] and the derived optical spring/damping.
struct SelfEnergyResult {
  std::complex<double> sigma;  // rad/s
  double delta_omega = 0.0;    // Re(sigma)
  double delta_gamma = 0.0;    // -2 Im(sigma)
};

SelfEnergyResult self_energy(const SystemModel& model, const DriveConfig& drive,
                             double z_dis, double omega);

// self_energy evaluated at omega = omega_m over a detuning grid.
std::vector<SelfEnergyResult> spring_damping_sweep(const SystemModel& model,
                                                   const DriveConfig& drive, double z_dis,
                                                   std::span<const double> detunings);

// Dimensionless displacement PSD, normalized so the undriven spectrum
// integrates (over cyclic frequency) to n_th. Multiply by z_zpf^2 for m^2/Hz.
struct BrownianPsd {
  std::vector<double> psd;        // NaN where unstable
  std::vector<bool> unstable;     // gamma_m + delta_gamma[omega] <= 0
  bool any_unstable = false;
};

BrownianPsd brownian_psd(const SystemModel& model, const DriveConfig& drive, double z_dis,
                         std::span<const double> omegas);

// Amplitude of the optical-spring modulation produced by laser amplitude
// modulation of depth beta: A_omega = beta * |delta_omega|, rad/s.
double modulation_response(const SystemModel& model, const DriveConfig& drive, double z_dis);

// Total intracavity photon number sum |a_0n|^2.
double photon_number(const SystemModel& model, const DriveConfig& drive, double z_dis);

}  // namespace avcross
