#include "avcross/oracle.hpp"

#include <cmath>

#include "avcross/errors.hpp"
#include "avcross/spectra.hpp"
#include "avcross/units.hpp"

namespace avcross {

namespace {

using cplx = std::complex<double>;

// da/dt = -(kappa/2 + i(M - Delta)) a - i g z a + sqrt(kappa_in) a_in
// dc/dt = -(gamma/2 + i omega_m) c - i a^dag g a          with z = c + c*
struct EquationsOfMotion {
  int n_modes;
  std::vector<cplx> linear;  // row-major n x n
  std::vector<cplx> drive;
  std::vector<double> g;
  cplx mech_pole;

  EquationsOfMotion(const SystemModel& model, const DriveConfig& dr, double z_dis) {
    n_modes = model.size();
    const Eigen::MatrixXcd m = model.mode_matrix(z_dis, 0.0);
    linear.resize(n_modes * n_modes);
    for (int i = 0; i < n_modes; ++i)
      for (int j = 0; j < n_modes; ++j) {
        cplx v = cplx(0.0, -1.0) * m(i, j);
        if (i == j) v += cplx(-0.5 * model.modes()[i].kappa, dr.detuning);
        linear[i * n_modes + j] = v;
      }
    const double a_in = std::sqrt(dr.photon_flux());
    drive.resize(n_modes);
    for (int i = 0; i < n_modes; ++i)
      drive[i] = std::sqrt(model.modes()[i].kappa_in) * a_in;
    const Eigen::VectorXd gv = model.g_osc();
    g.assign(gv.data(), gv.data() + n_modes);
    mech_pole = cplx(-0.5 * model.mech().gamma_m, -model.mech().omega_m);
  }

  int dim() const { return n_modes + 1; }

  void operator()(const cplx* y, cplx* dy) const {
    const cplx c = y[n_modes];
    const double z = 2.0 * c.real();
    double force = 0.0;
    for (int i = 0; i < n_modes; ++i) {
      const cplx* row = &linear[i * n_modes];
      cplx acc = drive[i];
      for (int j = 0; j < n_modes; ++j) acc += row[j] * y[j];
      acc -= cplx(0.0, g[i] * z) * y[i];
      dy[i] = acc;
      force += g[i] * std::norm(y[i]);
    }
    dy[n_modes] = mech_pole * c - cplx(0.0, force);
  }
};

// Dormand-Prince 5(4) tableau
constexpr double A21 = 1.0 / 5;
constexpr double A31 = 3.0 / 40, A32 = 9.0 / 40;
constexpr double A41 = 44.0 / 45, A42 = -56.0 / 15, A43 = 32.0 / 9;
constexpr double A51 = 19372.0 / 6561, A52 = -25360.0 / 2187, A53 = 64448.0 / 6561,
                 A54 = -212.0 / 729;
constexpr double A61 = 9017.0 / 3168, A62 = -355.0 / 33, A63 = 46732.0 / 5247,
                 A64 = 49.0 / 176, A65 = -5103.0 / 18656;
constexpr double B1 = 35.0 / 384, B3 = 500.0 / 1113, B4 = 125.0 / 192,
                 B5 = -2187.0 / 6784, B6 = 11.0 / 84;
constexpr double E1 = 71.0 / 57600, E3 = -71.0 / 16695, E4 = 71.0 / 1920,
                 E5 = -17253.0 / 339200, E6 = 22.0 / 525, E7 = -1.0 / 40;

// Adaptive integration on a uniform sample grid; sample(i, t, y) is called at
// every grid time including t = 0.
template <typename SampleFn>
void integrate_core(const EquationsOfMotion& eom, std::vector<cplx> y,
                    const IntegrationSettings& s, SampleFn&& sample) {
  const int dim = eom.dim();
  const long n_samples = std::lround(s.duration / s.dt);
  std::vector<cplx> k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim),
      ytmp(dim), ynew(dim), yerr(dim);

  // anti-damped runs grow the mechanical amplitude until the detuning
  // nonlinearity kicks in; flag the run well before that
  const double mech_limit = s.instability_factor * std::max(std::abs(y[dim - 1]), 1.0);

  sample(0L, 0.0, y.data());
  eom(y.data(), k1.data());

  double t = 0.0;
  double h = s.dt;
  for (long i = 1; i <= n_samples; ++i) {
    const double t_target = i * s.dt;
    while (t < t_target) {
      const double h_step = std::min(h, t_target - t);
      // stages
      for (int d = 0; d < dim; ++d) ytmp[d] = y[d] + h_step * A21 * k1[d];
      eom(ytmp.data(), k2.data());
      for (int d = 0; d < dim; ++d)
        ytmp[d] = y[d] + h_step * (A31 * k1[d] + A32 * k2[d]);
      eom(ytmp.data(), k3.data());
      for (int d = 0; d < dim; ++d)
        ytmp[d] = y[d] + h_step * (A41 * k1[d] + A42 * k2[d] + A43 * k3[d]);
      eom(ytmp.data(), k4.data());
      for (int d = 0; d < dim; ++d)
        ytmp[d] = y[d] + h_step * (A51 * k1[d] + A52 * k2[d] + A53 * k3[d] + A54 * k4[d]);
      eom(ytmp.data(), k5.data());
      for (int d = 0; d < dim; ++d)
        ytmp[d] = y[d] + h_step * (A61 * k1[d] + A62 * k2[d] + A63 * k3[d] + A64 * k4[d] +
                                   A65 * k5[d]);
      eom(ytmp.data(), k6.data());
      for (int d = 0; d < dim; ++d)
        ynew[d] = y[d] + h_step * (B1 * k1[d] + B3 * k3[d] + B4 * k4[d] + B5 * k5[d] +
                                   B6 * k6[d]);
      eom(ynew.data(), k7.data());  // FSAL
      double err2 = 0.0;
      for (int d = 0; d < dim; ++d) {
        yerr[d] = h_step * (E1 * k1[d] + E3 * k3[d] + E4 * k4[d] + E5 * k5[d] +
                            E6 * k6[d] + E7 * k7[d]);
        const double scale =
            s.abs_tol + s.rel_tol * std::max(std::abs(y[d]), std::abs(ynew[d]));
        const double e = std::abs(yerr[d]) / scale;
        err2 += e * e;
      }
      const double err = std::sqrt(err2 / dim);
      if (err <= 1.0) {
        t += h_step;
        y.swap(ynew);
        k1.swap(k7);
        bool finite = true;
        for (const auto& v : y)
          finite = finite && std::isfinite(v.real()) && std::isfinite(v.imag());
        if (!finite || std::abs(y[dim - 1]) > mech_limit)
          throw InstabilityError("time-domain integration diverged at t = " +
                                     std::to_string(t) + " s",
                                 t);
        const double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
        h = std::min(s.dt, h_step * std::clamp(grow, 0.2, 5.0));
      } else {
        h = h_step * std::clamp(0.9 * std::pow(err, -0.2), 0.2, 0.9);
        if (h < 1e-6 * s.dt)
          throw Error("integration step size underflow (tolerances too tight)");
        // k1 still valid for the retried step
      }
    }
    t = t_target;
    sample(i, t, y.data());
  }
}

std::vector<cplx> initial_state(const SystemModel& model, const DriveConfig& drive,
                                double z_dis, const IntegrationSettings& s) {
  const int n = model.size();
  std::vector<cplx> y(n + 1);
  if (s.a0) {
    if (s.a0->size() != n) throw ConfigError("initial optical amplitude size mismatch");
    for (int i = 0; i < n; ++i) y[i] = (*s.a0)[i];
  } else {
    const Eigen::VectorXcd a0 = steady_state(model, drive, z_dis);
    for (int i = 0; i < n; ++i) y[i] = a0[i];
  }
  y[n] = s.c0;
  return y;
}

void check_settings(const SystemModel& model, const DriveConfig& drive, double z_dis,
                    const IntegrationSettings& s) {
  drive.validate();
  if (!(s.dt > 0.0)) throw ConfigError("integration dt must be positive");
  if (!(s.duration >= s.dt)) throw ConfigError("integration duration must cover at least one dt");
  const double bound = oracle_max_step(model, drive, z_dis);
  if (s.dt > bound)
    throw ConfigError("dt = " + std::to_string(s.dt) + " s violates the step invariant (max " +
                      std::to_string(bound) + " s)");
}

}  // namespace

double oracle_max_step(const SystemModel& model, const DriveConfig& drive, double z_dis) {
  double kappa_max = 0.0;
  for (const auto& m : model.modes()) kappa_max = std::max(kappa_max, m.kappa);
  const Eigen::VectorXd ev = eigen_branches(model, z_dis);
  const double ev_max = std::max(std::abs(ev[0]), std::abs(ev[ev.size() - 1]));
  return 0.05 / std::max(kappa_max, std::abs(drive.detuning) + ev_max);
}

Trajectory integrate(const SystemModel& model, const DriveConfig& drive, double z_dis,
                     const IntegrationSettings& settings) {
  check_settings(model, drive, z_dis, settings);
  const int n = model.size();
  const long n_samples = std::lround(settings.duration / settings.dt);

  Trajectory traj;
  traj.times.resize(n_samples + 1);
  traj.optical.resize(n_samples + 1, n);
  traj.mech.resize(n_samples + 1);

  const EquationsOfMotion eom(model, drive, z_dis);
  integrate_core(eom, initial_state(model, drive, z_dis, settings), settings,
                 [&](long i, double t, const cplx* y) {
                   traj.times[i] = t;
                   for (int m = 0; m < n; ++m) traj.optical(i, m) = y[m];
                   traj.mech[i] = y[n];
                 });
  return traj;
}

MechRecord integrate_mech(const SystemModel& model, const DriveConfig& drive, double z_dis,
                          const IntegrationSettings& settings, int stride) {
  check_settings(model, drive, z_dis, settings);
  if (stride < 1) throw ConfigError("stride must be >= 1");
  const int n = model.size();

  MechRecord rec;
  rec.dt = settings.dt * stride;
  const EquationsOfMotion eom(model, drive, z_dis);
  integrate_core(eom, initial_state(model, drive, z_dis, settings), settings,
                 [&](long i, double, const cplx* y) {
                   if (i % stride == 0) rec.c.push_back(y[n]);
                 });
  return rec;
}

namespace {

struct LineStats {
  double slope, slope_err;
};

// weighted linear fit of y against sample index; weights ~ |c|^2 so a decayed
// tail (where any residual offset dominates the phase) contributes nothing
LineStats line_through(std::span<const double> y, std::span<const double> w, double dt) {
  const int n = static_cast<int>(y.size());
  double sw = 0, swx = 0, swy = 0;
  for (int i = 0; i < n; ++i) {
    sw += w[i];
    swx += w[i] * i;
    swy += w[i] * y[i];
  }
  const double mx = swx / sw, my = swy / sw;
  double sxx = 0, sxy = 0, sw2 = 0;
  for (int i = 0; i < n; ++i) {
    sxx += w[i] * (i - mx) * (i - mx);
    sxy += w[i] * (i - mx) * (y[i] - my);
    sw2 += w[i] * w[i];
  }
  const double slope = sxy / sxx;
  double ss = 0;
  for (int i = 0; i < n; ++i) {
    const double r = (y[i] - my) - slope * (i - mx);
    ss += w[i] * r * r;
  }
  const double n_eff = sw * sw / sw2;  // Kish effective sample count
  const double s2 = n_eff > 2.0 ? ss / sw * n_eff / (n_eff - 2.0) : 0.0;
  return {slope / dt, std::sqrt(s2 / sxx) / dt};
}

}  // namespace

RingdownEstimate ringdown_estimate(std::span<const std::complex<double>> c, double dt,
                                   bool subtract_dc) {
  const int n = static_cast<int>(c.size());
  if (n < 32) throw ConfigError("ringdown_estimate: too few samples");
  if (!(dt > 0.0)) throw ConfigError("ringdown_estimate: dt must be positive");

  double max_amp = 0.0;
  for (const auto& v : c) max_amp = std::max(max_amp, std::abs(v));
  if (max_amp <= 0.0) throw FitError("ringdown_estimate: signal is identically zero");

  // first-pass frequency from the mean wrapped phase increment
  double mean_dphi = 0.0;
  for (int i = 1; i < n; ++i) {
    double d = std::arg(c[i]) - std::arg(c[i - 1]);
    if (d > units::pi) d -= units::two_pi;
    if (d <= -units::pi) d += units::two_pi;
    mean_dphi += d;
  }
  mean_dphi /= (n - 1);
  const double omega0 = std::abs(mean_dphi) / dt;
  if (omega0 <= 0.0) throw FitError("ringdown_estimate: no oscillation detected");
  const double period_samples = units::two_pi / (omega0 * dt);
  if (n * dt * omega0 < 10.0 * units::two_pi)
    throw ConfigError("ringdown_estimate: trajectory shorter than 10 mechanical periods");

  // amplitude floor within the first 10 periods
  const int first = std::min<int>(n, static_cast<int>(10.0 * period_samples));
  for (int i = 0; i < first; ++i)
    if (std::abs(c[i]) < 1e-12 * max_amp)
      throw FitError("ringdown_estimate: amplitude fell below the numerical floor "
                     "within 10 periods");

  std::vector<std::complex<double>> work(c.begin(), c.end());
  if (subtract_dc) {
    const long k_per = std::lround(std::floor(n / period_samples));
    const long m = std::min<long>(n, std::lround(k_per * period_samples));
    std::complex<double> mean(0.0, 0.0);
    for (long i = 0; i < m; ++i) mean += work[i];
    mean /= static_cast<double>(m);
    for (auto& v : work) v -= mean;
  }

  std::vector<double> phase(n), logamp(n), weight(n);
  double acc = std::arg(work[0]);
  phase[0] = acc;
  for (int i = 1; i < n; ++i) {
    double d = std::arg(work[i]) - std::arg(work[i - 1]);
    if (d > units::pi) d -= units::two_pi;
    if (d <= -units::pi) d += units::two_pi;
    acc += d;
    phase[i] = acc;
  }
  for (int i = 0; i < n; ++i) {
    const double a = std::abs(work[i]);
    if (a <= 0.0) throw FitError("ringdown_estimate: zero amplitude sample");
    logamp[i] = std::log(a);
    weight[i] = a * a;
  }

  const LineStats ph = line_through(phase, weight, dt);
  const LineStats am = line_through(logamp, weight, dt);

  RingdownEstimate est;
  est.omega = std::abs(ph.slope);
  est.omega_err = ph.slope_err;
  est.gamma = -2.0 * am.slope;
  est.gamma_err = 2.0 * am.slope_err;
  return est;
}

RingdownEstimate ringdown_estimate(const Trajectory& trajectory, bool subtract_dc) {
  if (trajectory.times.size() < 2) throw ConfigError("ringdown_estimate: empty trajectory");
  const double dt = trajectory.times[1] - trajectory.times[0];
  return ringdown_estimate(trajectory.mech, dt, subtract_dc);
}

}  // namespace avcross
