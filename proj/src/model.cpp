#include "avcross/model.hpp"

#include <cmath>
#include <iostream>
#include <set>

#include "avcross/units.hpp"

namespace avcross {

double MechanicalOscillator::z_zpf() const {
  return std::sqrt(units::hbar / (2.0 * mass_eff * omega_m));
}

double MechanicalOscillator::n_thermal() const {
  return units::k_boltzmann * temperature / (units::hbar * omega_m);
}

void MechanicalOscillator::validate() const {
  if (!(omega_m > 0.0)) throw ConfigError("omega_m must be positive", "mech.omega_m_khz");
  if (!(gamma_m > 0.0)) throw ConfigError("gamma_m must be positive", "mech.gamma_m_hz");
  if (!(mass_eff > 0.0)) throw ConfigError("mass_eff must be positive", "mech.mass_eff_ng");
  if (!(temperature >= 0.0)) throw ConfigError("temperature must be >= 0", "mech.temperature_k");
  if (!std::isfinite(z_zpf()) || !(z_zpf() > 0.0))
    throw ConfigError("derived z_zpf is not finite and positive", "mech");
}

double DriveConfig::photon_flux() const {
  const double photon_energy = units::planck_h * units::c_light / wavelength;
  return fiber_efficiency * power_in / photon_energy;
}

void DriveConfig::validate() const {
  if (!(power_in >= 0.0)) throw ConfigError("power_in must be >= 0", "drive.power_in_uw");
  if (!(wavelength > 0.0)) throw ConfigError("wavelength must be positive", "drive.wavelength_nm");
  if (!(fiber_efficiency > 0.0) || fiber_efficiency > 1.0)
    throw ConfigError("fiber_efficiency must be in (0, 1]", "drive.fiber_efficiency");
  if (modulation) {
    if (!(modulation->freq_hz >= 0.0))
      throw ConfigError("modulation frequency must be >= 0", "drive.modulation.mod_freq_hz");
    if (modulation->depth < 0.0 || modulation->depth > 1.0)
      throw ConfigError("modulation depth must be in [0, 1]", "drive.modulation.depth");
  }
}

namespace {

double canonical_phase(double phi) {
  phi = std::fmod(phi, units::two_pi);
  if (phi < 0.0) phi += units::two_pi;
  return phi;
}

}  // namespace

SystemModel::SystemModel(std::vector<OpticalMode> modes, std::vector<CouplingTerm> couplings,
                         MechanicalOscillator mech, double crossing_frequency)
    : modes_(std::move(modes)),
      couplings_(std::move(couplings)),
      mech_(mech),
      crossing_frequency_(crossing_frequency) {
  if (modes_.empty()) throw ConfigError("model needs at least one optical mode", "modes");
  std::set<std::string> labels;
  for (size_t n = 0; n < modes_.size(); ++n) {
    const auto& m = modes_[n];
    const std::string path = "modes[" + std::to_string(n) + "]";
    if (m.label.empty()) throw ConfigError("mode label must be non-empty", path + ".label");
    if (!labels.insert(m.label).second)
      throw ConfigError("duplicate mode label '" + m.label + "'", path + ".label");
    if (!(m.kappa > 0.0)) throw ConfigError("kappa must be positive", path + ".kappa_mhz");
    if (m.kappa_in < 0.0 || m.kappa_in > m.kappa)
      throw ConfigError("kappa_in must satisfy 0 <= kappa_in <= kappa", path + ".kappa_in_khz");
  }
  std::set<std::pair<std::string, std::string>> pairs;
  for (size_t k = 0; k < couplings_.size(); ++k) {
    auto& c = couplings_[k];
    const std::string path = "couplings[" + std::to_string(k) + "]";
    if (!labels.count(c.mode_a))
      throw ConfigError("coupling references unknown mode '" + c.mode_a + "'", path + ".pair");
    if (!labels.count(c.mode_b))
      throw ConfigError("coupling references unknown mode '" + c.mode_b + "'", path + ".pair");
    if (c.mode_a == c.mode_b)
      throw ConfigError("coupling pair must reference two distinct modes", path + ".pair");
    if (!(c.t >= 0.0)) throw ConfigError("tunneling magnitude t must be >= 0", path + ".t_mhz");
    c.phi = canonical_phase(c.phi);
    auto key = std::minmax(c.mode_a, c.mode_b);
    if (!pairs.insert(key).second)
      throw ConfigError("more than one coupling term for pair (" + key.first + ", " + key.second + ")",
                        path + ".pair");
  }
  mech_.validate();
  if (mech_.quality() < 100.0)
    std::cerr << "avcross: warning: mechanical Q = " << mech_.quality()
              << " < 100; the high-Q approximation used for the self-energy degrades\n";
}

int SystemModel::index_of(const std::string& label) const {
  for (int n = 0; n < size(); ++n)
    if (modes_[n].label == label) return n;
  throw ConfigError("unknown mode label '" + label + "'");
}

Eigen::MatrixXcd SystemModel::mode_matrix(double z_dis, double z_osc) const {
  const int n = size();
  Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    m(i, i) = modes_[i].offset + modes_[i].slope_dis * z_dis + modes_[i].slope_osc * z_osc;
  for (const auto& c : couplings_) {
    const int i = index_of(c.mode_a);
    const int j = index_of(c.mode_b);
    const std::complex<double> v = c.t * std::exp(std::complex<double>(0.0, c.phi));
    m(i, j) = v;
    m(j, i) = std::conj(v);
  }
  return m;
}

Eigen::VectorXd SystemModel::kappa_diag() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v[n] = modes_[n].kappa;
  return v;
}

Eigen::VectorXd SystemModel::sqrt_kappa_in() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v[n] = std::sqrt(modes_[n].kappa_in);
  return v;
}

Eigen::VectorXd SystemModel::slope_dis_vec() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v[n] = modes_[n].slope_dis;
  return v;
}

Eigen::VectorXd SystemModel::slope_osc_vec() const {
  Eigen::VectorXd v(size());
  for (int n = 0; n < size(); ++n) v[n] = modes_[n].slope_osc;
  return v;
}

Eigen::VectorXd SystemModel::g_osc() const {
  return slope_osc_vec() * mech_.z_zpf();
}

}  // namespace avcross
