#pragma once

#include <string>
#include <vector>

#include "avcross/model.hpp"
#include "avcross/units.hpp"

namespace fixtures {

using namespace avcross;
namespace u = avcross::units;

// membrane parameters quoted in the experiment description
inline MechanicalOscillator membrane(double quality = 1e5) {
  MechanicalOscillator m;
  m.omega_m = u::from_khz(354.6);
  m.gamma_m = m.omega_m / quality;
  m.mass_eff = u::from_ng(43.0);
  m.temperature = 0.5;
  return m;
}

inline DriveConfig drive_uw(double power_uw, double detuning = 0.0) {
  DriveConfig d;
  d.power_in = u::from_uw(power_uw);
  d.detuning = detuning;
  d.wavelength = u::from_nm(1064.0);
  d.fiber_efficiency = 0.6;
  return d;
}

inline OpticalMode mode(std::string label, double kappa_mhz, double kappa_in_khz,
                        double slope_dis_mhz_nm, double slope_osc_mhz_nm,
                        double offset_mhz = 0.0) {
  OpticalMode m;
  m.label = std::move(label);
  m.kappa = u::from_mhz(kappa_mhz);
  m.kappa_in = u::from_khz(kappa_in_khz);
  m.slope_dis = u::from_mhz_per_nm(slope_dis_mhz_nm);
  m.slope_osc = u::from_mhz_per_nm(slope_osc_mhz_nm);
  m.offset = u::from_mhz(offset_mhz);
  return m;
}

inline SystemModel single_mode(double kappa_mhz = 1.0, double kappa_in_khz = 47.0,
                               double slope_dis_mhz_nm = 0.0, double slope_osc_mhz_nm = 0.0,
                               double offset_mhz = 0.0, double quality = 1e5) {
  return SystemModel({mode("m", kappa_mhz, kappa_in_khz, slope_dis_mhz_nm,
                           slope_osc_mhz_nm, offset_mhz)},
                     {}, membrane(quality));
}

// two identical modes with opposite slopes, phi = pi/2: the idealized
// symmetric crossing
inline SystemModel symmetric_crossing(double t_mhz = 1.57, double kappa_mhz = 1.0,
                                      double kappa_in_khz = 50.0,
                                      double slope_mhz_nm = 1.87,
                                      double g_slope_mhz_nm = 1.40, double quality = 1e5) {
  return SystemModel({mode("L", kappa_mhz, kappa_in_khz, slope_mhz_nm, g_slope_mhz_nm),
                      mode("R", kappa_mhz, kappa_in_khz, -slope_mhz_nm, -g_slope_mhz_nm)},
                     {CouplingTerm{"L", "R", u::from_mhz(t_mhz), u::pi / 2}},
                     membrane(quality));
}

// the two-mode crossing characterized in the supplement's spectroscopy run
inline SystemModel spectroscopy_crossing(double quality = 1e5) {
  return SystemModel({mode("L", 1.0, 47.0, 2.1, 1.56), mode("R", 1.3, 5.0, -1.8, -1.66)},
                     {CouplingTerm{"L", "R", u::from_mhz(4.6), 1.6}}, membrane(quality));
}

// three-mode parameter set used for most of the measured dynamics; sigma is
// the R1-R2 splitting, which has no published value
inline SystemModel threemode(double sigma_mhz = 15.0, double quality = 1e5) {
  return SystemModel(
      {mode("L", 1.0, 74.0, 1.87, 1.40), mode("R1", 1.3, 7.0, -1.77, -1.46),
       mode("R2", 1.3, 4.0, -1.77, -0.65, sigma_mhz)},
      {CouplingTerm{"L", "R1", u::from_mhz(1.57), 1.9},
       CouplingTerm{"L", "R2", u::from_mhz(0.76), 1.1}},
      membrane(quality));
}

// isolated two-mode reductions of the three tabulated crossings
struct CrossingSpec {
  double slope_a_mhz_nm, slope_b_mhz_nm, t_mhz, curvature_mhz_nm2;
};

inline const std::vector<CrossingSpec>& tabulated_crossings() {
  static const std::vector<CrossingSpec> specs = {
      {2.13, -1.82, 4.57, 1.7},
      {1.87, -1.77, 1.57, 4.2},
      {1.87, -1.77, 0.76, 8.7},
  };
  return specs;
}

inline SystemModel crossing_model(const CrossingSpec& s) {
  return SystemModel({mode("a", 1.0, 47.0, s.slope_a_mhz_nm, s.slope_a_mhz_nm),
                      mode("b", 1.3, 5.0, s.slope_b_mhz_nm, s.slope_b_mhz_nm)},
                     {CouplingTerm{"a", "b", u::from_mhz(s.t_mhz), u::pi / 2}}, membrane());
}

}  // namespace fixtures
