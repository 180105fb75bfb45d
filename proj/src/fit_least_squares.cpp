#include "avcross/fit/least_squares.hpp"

#include <cmath>

#include "avcross/errors.hpp"

namespace avcross::fit {

namespace {

double cost_of(const Eigen::VectorXd& r) { return 0.5 * r.squaredNorm(); }

Eigen::VectorXd clamp_to_box(Eigen::VectorXd p, const Eigen::VectorXd& lo,
                             const Eigen::VectorXd& hi) {
  for (int j = 0; j < p.size(); ++j) p[j] = std::min(std::max(p[j], lo[j]), hi[j]);
  return p;
}

}  // namespace

LsqResult least_squares(const ResidualFn& fn, int residual_size, Eigen::VectorXd p0,
                        Eigen::VectorXd lower, Eigen::VectorXd upper,
                        const LsqOptions& options) {
  const int n = static_cast<int>(p0.size());
  const int m = residual_size;
  if (lower.size() != n || upper.size() != n)
    throw ConfigError("least_squares: bounds size mismatch");
  if (options.diff_steps.size() != n)
    throw ConfigError("least_squares: diff_steps must be provided per parameter");

  Eigen::VectorXd p = clamp_to_box(std::move(p0), lower, upper);
  Eigen::VectorXd r(m), r_trial(m), r_plus(m), r_minus(m);
  fn(p, r);
  double cost = cost_of(r);

  Eigen::MatrixXd jac(m, n);
  double lambda = options.initial_lambda;
  LsqResult result;
  result.converged = false;

  const auto jacobian = [&](const Eigen::VectorXd& at) {
    for (int j = 0; j < n; ++j) {
      const double h = options.diff_steps[j];
      // keep differencing inside the box near active bounds
      Eigen::VectorXd pp = at, pm = at;
      pp[j] = std::min(at[j] + h, upper[j]);
      pm[j] = std::max(at[j] - h, lower[j]);
      const double denom = pp[j] - pm[j];
      if (denom <= 0.0) {
        jac.col(j).setZero();
        continue;
      }
      fn(pp, r_plus);
      fn(pm, r_minus);
      jac.col(j) = (r_plus - r_minus) / denom;
    }
  };

  int it = 0;
  for (; it < options.max_iterations; ++it) {
    jacobian(p);
    const Eigen::VectorXd grad = jac.transpose() * r;
    // gradient test on the scaled gradient: parameters carry physical
    // magnitudes (rad/s, meters), so normalize each component by its scale
    double scaled_grad = 0.0;
    for (int j = 0; j < n; ++j)
      scaled_grad = std::max(scaled_grad,
                             std::abs(grad[j]) * (std::abs(p[j]) + options.diff_steps[j]));
    if (scaled_grad < options.gtol * std::max(cost, 1e-300)) {
      result.converged = true;
      break;
    }

    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (int j = 0; j < n; ++j) a(j, j) += lambda * std::max(jtj(j, j), 1e-30);
      const Eigen::VectorXd step = a.ldlt().solve(-grad);
      const Eigen::VectorXd p_trial = clamp_to_box(p + step, lower, upper);
      fn(p_trial, r_trial);
      const double cost_trial = cost_of(r_trial);
      if (cost_trial < cost) {
        // relative step/cost tests on the accepted move
        double max_rel_step = 0.0;
        for (int j = 0; j < n; ++j) {
          const double scale = std::abs(p[j]) + options.diff_steps[j];
          max_rel_step = std::max(max_rel_step, std::abs(p_trial[j] - p[j]) / scale);
        }
        const double rel_drop = (cost - cost_trial) / std::max(cost, 1e-300);
        p = p_trial;
        r = r_trial;
        cost = cost_trial;
        lambda = std::max(lambda / 3.0, 1e-14);
        accepted = true;
        if (rel_drop < options.ftol || max_rel_step < options.xtol) {
          result.converged = true;
        }
      } else {
        lambda *= 4.0;
      }
    }
    if (!accepted) {
      // no downhill direction left at any damping: treat as converged
      result.converged = true;
      break;
    }
    if (result.converged) break;
  }

  result.params = p;
  result.residual_norm = std::sqrt(2.0 * cost);
  result.iterations = it + 1;

  for (int j = 0; j < n; ++j)
    if (p[j] <= lower[j] || p[j] >= upper[j]) result.at_bound = true;

  // parameter covariance from the final Jacobian
  jacobian(p);
  const int dof = m - n;
  result.covariance = Eigen::MatrixXd::Zero(n, n);
  result.stderrs = Eigen::VectorXd::Zero(n);
  if (dof > 0) {
    const double s2 = r.squaredNorm() / dof;
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::MatrixXd inv = jtj.completeOrthogonalDecomposition().pseudoInverse();
    result.covariance = s2 * inv;
    for (int j = 0; j < n; ++j)
      result.stderrs[j] = std::sqrt(std::max(result.covariance(j, j), 0.0));
  }
  return result;
}

}  // namespace avcross::fit
