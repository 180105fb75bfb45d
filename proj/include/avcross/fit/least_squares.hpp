#pragma once

#include <Eigen/Dense>
#include <functional>

namespace avcross::fit {

// Residual evaluator: fills r (fixed length) for parameter vector p.
using ResidualFn = std::function<void(const Eigen::VectorXd& p, Eigen::VectorXd& r)>;

struct LsqOptions {
  int max_iterations = 200;
  double ftol = 1e-12;   // relative cost reduction
  double xtol = 1e-12;   // relative step size
  double gtol = 1e-14;   // gradient infinity norm, relative to cost scale
  double initial_lambda = 1e-3;
  // absolute central-difference steps per parameter; mandatory so that
  // parameters with physical magnitudes (rad/s, meters) differentiate sanely
  Eigen::VectorXd diff_steps;
};

struct LsqResult {
  Eigen::VectorXd params;
  Eigen::VectorXd stderrs;      // from residual covariance; 0 if dof <= 0
  Eigen::MatrixXd covariance;
  double residual_norm = 0.0;   // ||r|| at the solution
  int iterations = 0;
  bool converged = false;
  bool at_bound = false;        // some parameter ended on a bound
};

// Dense bounded least squares: Levenberg-Marquardt damping with box
// projection, numerical Jacobians by central differences. Deterministic for
// identical inputs.
LsqResult least_squares(const ResidualFn& fn, int residual_size, Eigen::VectorXd p0,
                        Eigen::VectorXd lower, Eigen::VectorXd upper,
                        const LsqOptions& options);

}  // namespace avcross::fit
