#include "avcross/dynamics.hpp"

#include <cmath>
#include <limits>

#include "avcross/spectra.hpp"
#include "avcross/units.hpp"

namespace avcross {

namespace {

// Per-(model, drive, z, detuning) state reused across frequencies.
struct SelfEnergyContext {
  Eigen::VectorXcd alpha;  // g_osc .* a_0
  const SystemModel* model;
  double detuning;
  double z_dis;

  SelfEnergyContext(const SystemModel& m, const DriveConfig& drive, double z, double delta)
      : model(&m), detuning(delta), z_dis(z) {
    const double a_in = std::sqrt(drive.photon_flux());
    const Eigen::VectorXcd a0 = detail::steady_state_amp(m, delta, a_in, z);
    alpha = m.g_osc().cast<std::complex<double>>().cwiseProduct(a0);
  }

  std::complex<double> sigma(double omega) const {
    const Eigen::MatrixXcd chi_p =
        detail::susceptibility_denominator(*model, detuning, omega, z_dis).partialPivLu().inverse();
    const Eigen::MatrixXcd chi_m =
        detail::susceptibility_denominator(*model, detuning, -omega, z_dis).partialPivLu().inverse();
    const Eigen::MatrixXcd x = chi_p - chi_m.adjoint();
    const std::complex<double> quad = alpha.dot(x * alpha);
    return std::complex<double>(0.0, -1.0) * quad;
  }
};

SelfEnergyResult pack(std::complex<double> sigma) {
  return SelfEnergyResult{sigma, sigma.real(), -2.0 * sigma.imag()};
}

}  // namespace

SelfEnergyResult self_energy(const SystemModel& model, const DriveConfig& drive, double z_dis,
                             double omega) {
  drive.validate();
  const SelfEnergyContext ctx(model, drive, z_dis, drive.detuning);
  return pack(ctx.sigma(omega));
}

std::vector<SelfEnergyResult> spring_damping_sweep(const SystemModel& model,
                                                   const DriveConfig& drive, double z_dis,
                                                   std::span<const double> detunings) {
  drive.validate();
  const double omega_m = model.mech().omega_m;
  std::vector<SelfEnergyResult> out;
  out.reserve(detunings.size());
  for (double delta : detunings) {
    const SelfEnergyContext ctx(model, drive, z_dis, delta);
    out.push_back(pack(ctx.sigma(omega_m)));
  }
  return out;
}

BrownianPsd brownian_psd(const SystemModel& model, const DriveConfig& drive, double z_dis,
                         std::span<const double> omegas) {
  drive.validate();
  const auto& mech = model.mech();
  const double n_th = mech.n_thermal();
  const SelfEnergyContext ctx(model, drive, z_dis, drive.detuning);

  BrownianPsd result;
  result.psd.reserve(omegas.size());
  result.unstable.reserve(omegas.size());
  for (double omega : omegas) {
    const std::complex<double> sigma = ctx.sigma(omega);
    const double delta_gamma = -2.0 * sigma.imag();
    if (mech.gamma_m + delta_gamma <= 0.0) {
      result.psd.push_back(std::numeric_limits<double>::quiet_NaN());
      result.unstable.push_back(true);
      result.any_unstable = true;
      continue;
    }
    const std::complex<double> chi_eff_inv =
        0.5 * mech.gamma_m + std::complex<double>(0.0, mech.omega_m - omega) +
        std::complex<double>(0.0, 1.0) * sigma;
    result.psd.push_back(n_th * mech.gamma_m / std::norm(chi_eff_inv));
    result.unstable.push_back(false);
  }
  return result;
}

double modulation_response(const SystemModel& model, const DriveConfig& drive, double z_dis) {
  drive.validate();
  if (!drive.modulation)
    throw ConfigError("modulation_response requires drive.modulation", "drive.modulation");
  const SelfEnergyResult se = self_energy(model, drive, z_dis, model.mech().omega_m);
  return drive.modulation->depth * std::abs(se.delta_omega);
}

double photon_number(const SystemModel& model, const DriveConfig& drive, double z_dis) {
  drive.validate();
  return steady_state(model, drive, z_dis).squaredNorm();
}

}  // namespace avcross
