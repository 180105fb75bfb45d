#include <cmath>
#include <random>

#include "avcross/dynamics.hpp"
#include "avcross/fit/least_squares.hpp"
#include "avcross/spectra.hpp"
#include "avcross/units.hpp"
#include "doctest.h"
#include "fixtures.hpp"

using namespace avcross;
namespace u = avcross::units;

namespace {

// scalar single-mode route, written independently from the matrix code:
// Sigma[w] = -i |alpha|^2 (chi_c[w] - chi_c*[-w]), chi_c[w] = 1/(k/2 - i(D + w))
std::complex<double> scalar_self_energy(double kappa, double kappa_in, double detuning,
                                        double offset, double slope_osc, double z_zpf,
                                        double flux, double omega) {
  const std::complex<double> i(0.0, 1.0);
  const double d_eff = detuning - offset;
  const auto chi = [&](double w) {
    return 1.0 / std::complex<double>(0.5 * kappa, -(d_eff + w));
  };
  const std::complex<double> a0 = std::sqrt(kappa_in) * std::sqrt(flux) * chi(0.0);
  const std::complex<double> alpha = slope_osc * z_zpf * a0;
  return -i * std::norm(alpha) * (chi(omega) - std::conj(chi(-omega)));
}

}  // namespace

TEST_CASE("no light, no back-action") {
  const auto model = fixtures::symmetric_crossing();
  const auto se = self_energy(model, fixtures::drive_uw(0.0), 0.0, model.mech().omega_m);
  CHECK(se.sigma == std::complex<double>(0.0, 0.0));
  CHECK(se.delta_omega == 0.0);
  CHECK(se.delta_gamma == 0.0);
}

TEST_CASE("self-energy fields are consistent") {
  const auto model = fixtures::threemode();
  const auto se = self_energy(model, fixtures::drive_uw(40.0, u::from_mhz(1.5)),
                              u::from_nm(0.3), model.mech().omega_m);
  CHECK(se.delta_omega == se.sigma.real());
  CHECK(se.delta_gamma == -2.0 * se.sigma.imag());
}

TEST_CASE("single-mode self-energy equals the scalar closed form") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const double kappa_mhz = 0.3 + 3.0 * uni(rng);
    const double kappa_in_khz = 1.0 + 900.0 * kappa_mhz * uni(rng) * 0.5;
    const double offset_mhz = 4.0 * (uni(rng) - 0.5);
    const double slope_osc = 3.0 * (uni(rng) - 0.5);
    const auto model = fixtures::single_mode(kappa_mhz, kappa_in_khz, 0.0, slope_osc,
                                             offset_mhz);
    auto drive = fixtures::drive_uw(1.0 + 150.0 * uni(rng), u::from_mhz(6.0 * (uni(rng) - 0.5)));
    const double omega_m = model.mech().omega_m * (0.5 + uni(rng));

    const auto se = self_energy(model, drive, 0.0, omega_m);
    const auto expect = scalar_self_energy(
        u::from_mhz(kappa_mhz), u::from_khz(kappa_in_khz), drive.detuning,
        u::from_mhz(offset_mhz), u::from_mhz_per_nm(slope_osc), model.mech().z_zpf(),
        drive.photon_flux(), omega_m);
    CHECK(std::abs(se.sigma - expect) <= 1e-12 * std::abs(expect));
  }
}

TEST_CASE("optical spring sign at the two branch resonances") {
  const auto model = fixtures::symmetric_crossing(4.6);
  const double t = u::from_mhz(4.6);
  const auto upper = self_energy(model, fixtures::drive_uw(40.0, t), 0.0, model.mech().omega_m);
  const auto lower = self_energy(model, fixtures::drive_uw(40.0, -t), 0.0, model.mech().omega_m);
  CHECK(upper.delta_omega > 0.0);
  CHECK(lower.delta_omega < 0.0);
}

TEST_CASE("two decoupled modes add their single-mode self-energies") {
  SystemModel pair({fixtures::mode("a", 1.0, 47.0, 0.0, 1.4, -2.0),
                    fixtures::mode("b", 1.3, 5.0, 0.0, -0.8, 2.0)},
                   {}, fixtures::membrane());
  SystemModel only_a({fixtures::mode("a", 1.0, 47.0, 0.0, 1.4, -2.0)}, {},
                     fixtures::membrane());
  SystemModel only_b({fixtures::mode("b", 1.3, 5.0, 0.0, -0.8, 2.0)}, {},
                     fixtures::membrane());
  const auto drive = fixtures::drive_uw(60.0, u::from_mhz(0.8));
  const double w = pair.mech().omega_m;
  const auto s_pair = self_energy(pair, drive, 0.0, w);
  const auto s_a = self_energy(only_a, drive, 0.0, w);
  const auto s_b = self_energy(only_b, drive, 0.0, w);
  CHECK(std::abs(s_pair.sigma - (s_a.sigma + s_b.sigma)) <=
        1e-12 * std::abs(s_a.sigma + s_b.sigma));
}

TEST_CASE("spring and damping are exactly linear in drive power") {
  const auto model = fixtures::threemode();
  const double z = u::from_nm(0.4);
  const auto s1 = self_energy(model, fixtures::drive_uw(40.0, u::from_mhz(1.2)), z,
                              model.mech().omega_m);
  const auto s2 = self_energy(model, fixtures::drive_uw(80.0, u::from_mhz(1.2)), z,
                              model.mech().omega_m);
  CHECK(s2.delta_omega / s1.delta_omega == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s2.delta_gamma / s1.delta_gamma == doctest::Approx(2.0).epsilon(1e-12));
  const double n1 = photon_number(model, fixtures::drive_uw(40.0, u::from_mhz(1.2)), z);
  const double n2 = photon_number(model, fixtures::drive_uw(80.0, u::from_mhz(1.2)), z);
  CHECK(n2 / n1 == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("self-energy vanishes far off resonance") {
  const auto model = fixtures::symmetric_crossing();
  const double kappa = u::from_mhz(1.0);
  const auto on = self_energy(model, fixtures::drive_uw(40.0, u::from_mhz(1.57)), 0.0,
                              model.mech().omega_m);
  const auto far = self_energy(model, fixtures::drive_uw(40.0, 1e4 * kappa), 0.0,
                               model.mech().omega_m);
  CHECK(std::abs(far.sigma) < 1e-6 * std::abs(on.sigma));
}

TEST_CASE("reflection spectra cannot distinguish conjugated coupling phases") {
  // r = 1 - v^T chi v is invariant under M -> M^T (the scalar equals its own
  // transpose); this is why extracted phases are reported in [0, pi]. The
  // self-energy does NOT share this symmetry once the mode linewidths differ.
  const auto base = fixtures::threemode();
  auto conj_couplings = base.couplings();
  for (auto& c : conj_couplings) c.phi = u::two_pi - c.phi;
  SystemModel conj(base.modes(), conj_couplings, base.mech());
  for (double delta_mhz : {-2.0, -0.7, 0.0, 1.1, 2.4}) {
    for (double z_nm : {0.0, 0.7}) {
      const auto a = reflection(base, fixtures::drive_uw(40.0, u::from_mhz(delta_mhz)),
                                u::from_nm(z_nm));
      const auto b = reflection(conj, fixtures::drive_uw(40.0, u::from_mhz(delta_mhz)),
                                u::from_nm(z_nm));
      CHECK(a.power_ratio == doctest::Approx(b.power_ratio).epsilon(1e-12));
    }
  }
}

TEST_CASE("idealized symmetric crossing: exact odd symmetry of Sigma about Delta = 0") {
  const auto model = fixtures::symmetric_crossing();
  const double w = model.mech().omega_m;
  std::vector<double> grid;
  for (int i = 1; i <= 24; ++i) grid.push_back(u::from_mhz(0.2 * i));
  double scale = 0.0;
  for (double d : grid)
    scale = std::max(scale,
                     std::abs(self_energy(model, fixtures::drive_uw(40.0, d), 0.0, w).sigma));
  for (double d : grid) {
    const auto plus = self_energy(model, fixtures::drive_uw(40.0, d), 0.0, w);
    const auto minus = self_energy(model, fixtures::drive_uw(40.0, -d), 0.0, w);
    CHECK(std::abs(plus.delta_omega + minus.delta_omega) <= 1e-9 * scale);
    CHECK(std::abs(plus.delta_gamma + minus.delta_gamma) <= 2e-9 * scale);
  }
}

TEST_CASE("spring feature is locally even about each branch resonance at the crossing") {
  // separated branches (t >> kappa) so the other branch's tail is small
  const auto model = fixtures::symmetric_crossing(5.0, 1.0, 50.0, 1.87, 1.40);
  const double t = u::from_mhz(5.0), kappa = u::from_mhz(1.0);
  const double w = model.mech().omega_m;
  for (double branch : {t, -t}) {
    double peak = 0.0, mismatch = 0.0;
    for (int i = 0; i <= 40; ++i) {
      const double x = kappa * i / 40.0;
      const auto p = self_energy(model, fixtures::drive_uw(40.0, branch + x), 0.0, w);
      const auto m = self_energy(model, fixtures::drive_uw(40.0, branch - x), 0.0, w);
      peak = std::max(peak, std::abs(p.delta_omega));
      mismatch = std::max(mismatch, std::abs(p.delta_omega - m.delta_omega));
    }
    CHECK(mismatch < 0.05 * peak);
  }
}

TEST_CASE("spring/damping sweep applies self_energy pointwise and decays at large detuning") {
  const auto model = fixtures::threemode();
  std::vector<double> grid;
  for (int i = 0; i <= 40; ++i) grid.push_back(u::from_mhz(-40.0 + 2.0 * i));
  const auto sweep = spring_damping_sweep(model, fixtures::drive_uw(40.0), 0.0, grid);
  REQUIRE(sweep.size() == grid.size());
  double mid = 0.0;
  for (const auto& s : sweep) mid = std::max(mid, std::abs(s.sigma));
  CHECK(std::abs(sweep.front().sigma) < 0.02 * mid);
  CHECK(std::abs(sweep.back().sigma) < 0.02 * mid);
  DriveConfig d = fixtures::drive_uw(40.0);
  d.detuning = grid[7];
  const auto single = self_energy(model, d, 0.0, model.mech().omega_m);
  CHECK(sweep[7].sigma == single.sigma);
}

TEST_CASE("Brownian spectrum of the bare oscillator") {
  const auto model = fixtures::single_mode();
  const auto& mech = model.mech();
  std::vector<double> omegas;
  const int npts = 801;
  for (int i = 0; i < npts; ++i)
    omegas.push_back(mech.omega_m + mech.gamma_m * (-30.0 + 60.0 * i / (npts - 1)));
  const auto psd = brownian_psd(model, fixtures::drive_uw(0.0), 0.0, omegas);
  REQUIRE(psd.any_unstable == false);

  // fit a Lorentzian |chi|^2 to recover center and width
  Eigen::VectorXd p0(3), lob(3), hib(3), steps(3);
  p0 << mech.omega_m + 0.3 * mech.gamma_m, 1.3 * mech.gamma_m,
      psd.psd[npts / 2] * 0.8;
  lob << omegas.front(), 0.01 * mech.gamma_m, 0.0;
  hib << omegas.back(), 100.0 * mech.gamma_m, 1e30;
  steps << 1e-3 * mech.gamma_m, 1e-3 * mech.gamma_m, 1e-4 * psd.psd[npts / 2];
  fit::LsqOptions opts;
  opts.diff_steps = steps;
  const auto res = fit::least_squares(
      [&](const Eigen::VectorXd& p, Eigen::VectorXd& r) {
        for (int i = 0; i < npts; ++i) {
          const double den = 0.25 * p[1] * p[1] + (omegas[i] - p[0]) * (omegas[i] - p[0]);
          r[i] = p[2] * (0.25 * p[1] * p[1]) / den - psd.psd[i];
        }
      },
      npts, p0, lob, hib, opts);
  CHECK(res.params[0] == doctest::Approx(mech.omega_m).epsilon(1e-4));
  CHECK(res.params[1] == doctest::Approx(mech.gamma_m).epsilon(1e-3));

  // normalization: integral over cyclic frequency recovers n_th
  double integral = 0.0;
  for (int i = 0; i + 1 < npts; ++i)
    integral += 0.5 * (psd.psd[i] + psd.psd[i + 1]) * (omegas[i + 1] - omegas[i]);
  integral /= u::two_pi;
  CHECK(integral == doctest::Approx(mech.n_thermal()).epsilon(0.03));
}

TEST_CASE("driven Brownian spectrum shifts by the optical spring") {
  const auto model = fixtures::symmetric_crossing(5.0);
  const auto& mech = model.mech();
  DriveConfig drive = fixtures::drive_uw(100.0, u::from_mhz(5.0) + mech.omega_m);
  const auto se = self_energy(model, drive, 0.0, mech.omega_m);
  REQUIRE(std::abs(se.delta_omega) < mech.gamma_m);  // weak-spring regime
  REQUIRE(std::abs(se.delta_omega) > 0.05 * mech.gamma_m);

  std::vector<double> omegas;
  const int npts = 4001;
  for (int i = 0; i < npts; ++i)
    omegas.push_back(mech.omega_m + mech.gamma_m * (-8.0 + 16.0 * i / (npts - 1)));
  const auto psd = brownian_psd(model, drive, 0.0, omegas);
  REQUIRE(!psd.any_unstable);
  int imax = 0;
  for (int i = 0; i < npts; ++i)
    if (psd.psd[i] > psd.psd[imax]) imax = i;
  const double shift = omegas[imax] - mech.omega_m;
  CHECK(std::abs(shift - se.delta_omega) <= 0.01 * mech.gamma_m);
}

TEST_CASE("peak frequency pattern is locally even about each resonance") {
  const auto model = fixtures::symmetric_crossing(5.0);
  const auto& mech = model.mech();
  const double t = u::from_mhz(5.0), kappa = u::from_mhz(1.0);
  const auto peak_shift = [&](double delta) {
    DriveConfig d = fixtures::drive_uw(2.0, delta);
    return self_energy(model, d, 0.0, mech.omega_m).delta_omega;
  };
  for (double branch : {t, -t}) {
    double peak = 0.0, mismatch = 0.0;
    for (int i = 0; i <= 20; ++i) {
      const double x = kappa * i / 20.0;
      peak = std::max(peak, std::abs(peak_shift(branch + x)));
      mismatch = std::max(mismatch,
                          std::abs(peak_shift(branch + x) - peak_shift(branch - x)));
    }
    CHECK(mismatch < 0.05 * peak);
  }
}

TEST_CASE("anti-damped grid points are flagged, not evaluated") {
  const auto model = fixtures::symmetric_crossing(1.57, 1.0, 500.0, 1.87, 1.40, 1e5);
  // strong blue-detuned drive on the upper branch for anti-damping
  DriveConfig drive = fixtures::drive_uw(4000.0, u::from_mhz(1.57) + model.mech().omega_m);
  std::vector<double> omegas;
  for (int i = 0; i < 101; ++i)
    omegas.push_back(model.mech().omega_m * (0.98 + 0.04 * i / 100.0));
  const auto psd = brownian_psd(model, drive, 0.0, omegas);
  REQUIRE(psd.any_unstable);
  bool saw_nan = false;
  for (size_t i = 0; i < psd.psd.size(); ++i)
    if (psd.unstable[i]) {
      saw_nan = true;
      CHECK(std::isnan(psd.psd[i]));
    }
  CHECK(saw_nan);
}

TEST_CASE("modulation response") {
  const auto model = fixtures::threemode();
  SUBCASE("requires a modulation config") {
    CHECK_THROWS_AS(modulation_response(model, fixtures::drive_uw(40.0), 0.0), ConfigError);
  }
  SUBCASE("zero depth gives zero response") {
    DriveConfig d = fixtures::drive_uw(40.0, u::from_mhz(1.5));
    d.modulation = Modulation{75.0, 0.0};
    CHECK(modulation_response(model, d, 0.0) == 0.0);
  }
  SUBCASE("equals beta |delta_omega|") {
    DriveConfig d = fixtures::drive_uw(40.0, u::from_mhz(1.5));
    d.modulation = Modulation{75.0, 0.77};
    const auto se = self_energy(model, d, 0.0, model.mech().omega_m);
    CHECK(modulation_response(model, d, 0.0) ==
          doctest::Approx(0.77 * std::abs(se.delta_omega)).epsilon(1e-12));
  }
}

TEST_CASE("modulation response shapes at and away from the crossing") {
  const auto model = fixtures::threemode();
  const double kappa = u::from_mhz(1.0);
  const auto a_omega = [&](double z, double delta) {
    DriveConfig d = fixtures::drive_uw(80.0, delta);
    d.modulation = Modulation{75.0, 0.77};
    return modulation_response(model, d, z);
  };

  SUBCASE("quadratic point: response is maximal on the cavity resonance") {
    const auto branches = eigen_branches(model, 0.0);
    // scan the whole crossing region; the global maximum must sit on a branch
    double best_delta = 0.0, best = -1.0;
    for (int i = 0; i <= 600; ++i) {
      const double delta = branches[0] - 3.0 * kappa +
                           (branches[1] - branches[0] + 6.0 * kappa) * i / 600.0;
      const double a = a_omega(0.0, delta);
      if (a > best) {
        best = a;
        best_delta = delta;
      }
    }
    const double dist = std::min(std::abs(best_delta - branches[0]),
                                 std::abs(best_delta - branches[1]));
    CHECK(dist < 0.1 * kappa);
  }

  SUBCASE("linear regime: response has a local minimum on the resonance") {
    const double z = u::from_nm(3.0);
    const auto branches = eigen_branches(model, z);
    const double res = branches[1];  // the positive-slope branch at z = 3 nm
    const double on = a_omega(z, res);
    CHECK(on < a_omega(z, res + 0.4 * kappa));
    CHECK(on < a_omega(z, res - 0.4 * kappa));
    CHECK(on < 0.2 * a_omega(z, res + 0.4 * kappa));
  }
}

TEST_CASE("photon number is independent of the coupling phase for symmetric drive") {
  for (int i = 0; i <= 16; ++i) {
    const double phi = u::two_pi * i / 16.0;
    SystemModel model({fixtures::mode("L", 1.0, 50.0, 1.87, 1.4),
                       fixtures::mode("R", 1.0, 50.0, -1.87, -1.4)},
                      {CouplingTerm{"L", "R", u::from_mhz(1.57), phi}}, fixtures::membrane());
    const double n = photon_number(model, fixtures::drive_uw(40.0), 0.0);
    const double n_ref = photon_number(fixtures::symmetric_crossing(1.57, 1.0, 50.0),
                                       fixtures::drive_uw(40.0), 0.0);
    CHECK(n == doctest::Approx(n_ref).epsilon(1e-9));
  }
}
