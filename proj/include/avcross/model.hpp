#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "avcross/errors.hpp"

namespace avcross {

// One cavity basis mode in the rotating frame of the crossing point.
struct OpticalMode {
  std::string label;
  double kappa = 0.0;      // total linewidth, rad/s
  double kappa_in = 0.0;   // input-port coupling, rad/s, 0 <= kappa_in <= kappa
  double slope_dis = 0.0;  // detuning per static displacement, rad/s per m
  double slope_osc = 0.0;  // detuning per oscillatory displacement, rad/s per m
  double offset = 0.0;     // diagonal detuning at z = 0, rad/s

  double kappa_vac() const { return kappa - kappa_in; }
};

// Membrane-mediated tunneling between two modes; the matrix entry (a,b) is
// t*exp(i*phi) and (b,a) its conjugate.
struct CouplingTerm {
  std::string mode_a;
  std::string mode_b;
  double t = 0.0;    // rad/s, >= 0
  double phi = 0.0;  // radians, canonicalized to [0, 2*pi)
};

struct MechanicalOscillator {
  double omega_m = 0.0;      // bare resonance, rad/s
  double gamma_m = 0.0;      // intrinsic linewidth, rad/s
  double mass_eff = 0.0;     // kg
  double temperature = 0.0;  // K

  double z_zpf() const;       // sqrt(hbar / (2 m omega_m)), m
  double n_thermal() const;   // k_B T / (hbar omega_m)
  double quality() const { return omega_m / gamma_m; }
  void validate() const;
};

struct Modulation {
  double freq_hz = 0.0;  // amplitude-modulation frequency, Hz
  double depth = 0.0;    // modulation depth beta, [0, 1]
};

// Laser drive. detuning is measured from the crossing frequency.
struct DriveConfig {
  double detuning = 0.0;          // rad/s
  double power_in = 0.0;          // W, measured before the fiber
  double wavelength = 1064e-9;    // m
  double fiber_efficiency = 1.0;  // power transmission, (0, 1]
  std::optional<Modulation> modulation;

  // photons per second arriving at the cavity input
  double photon_flux() const;
  void validate() const;
};

// N optical modes + coupling graph + mechanical oscillator. Validated on
// construction; all per-mode vectors are ordered like modes().
class SystemModel {
 public:
  SystemModel(std::vector<OpticalMode> modes, std::vector<CouplingTerm> couplings,
              MechanicalOscillator mech, double crossing_frequency = 0.0);

  int size() const { return static_cast<int>(modes_.size()); }
  const std::vector<OpticalMode>& modes() const { return modes_; }
  const std::vector<CouplingTerm>& couplings() const { return couplings_; }
  const MechanicalOscillator& mech() const { return mech_; }
  double crossing_frequency() const { return crossing_frequency_; }

  int index_of(const std::string& label) const;

  // M(z_dis, z_osc): diagonal entry n is offset_n + slope_dis_n*z_dis +
  // slope_osc_n*z_osc; off-diagonal entries come from the coupling terms.
  // Hermitian by construction.
  Eigen::MatrixXcd mode_matrix(double z_dis, double z_osc) const;

  Eigen::VectorXd kappa_diag() const;
  Eigen::VectorXd sqrt_kappa_in() const;
  Eigen::VectorXd slope_dis_vec() const;
  Eigen::VectorXd slope_osc_vec() const;
  // per-phonon optomechanical coupling slope_osc_n * z_zpf, rad/s
  Eigen::VectorXd g_osc() const;

 private:
  std::vector<OpticalMode> modes_;
  std::vector<CouplingTerm> couplings_;
  MechanicalOscillator mech_;
  double crossing_frequency_ = 0.0;
};

}  // namespace avcross
