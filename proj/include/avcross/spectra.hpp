#pragma once

#include <Eigen/Dense>
#include <complex>
#include <span>
#include <utility>
#include <vector>

#include "avcross/model.hpp"

namespace avcross {

// Real eigenfrequencies of mode_matrix(model, z_dis, 0), ascending.
Eigen::VectorXd eigen_branches(const SystemModel& model, double z_dis);

// Branch frequencies over a z sweep with continuity enforced: sorted order,
// switching to eigenvector-overlap matching where branches come closer than
// 1e-6 of the coupling scale (true crossings of decoupled branches).
std::vector<Eigen::VectorXd> branch_sweep(const SystemModel& model,
                                          std::span<const double> z_values);

struct CurvatureResult {
  std::vector<double> branch_curvatures;  // d^2 lambda_k / dz^2, rad/s per m^2
  double paper_convention = 0.0;  // curvature difference of the anticrossing pair
  int lower_branch = 0;           // the pair the convention refers to
  int upper_branch = 1;
};

// Second derivatives of the eigenvalue branches at a separation extremum.
// For an isolated two-mode crossing, paper_convention equals
// (slope_dis_i - slope_dis_j)^2 / (2 t).
CurvatureResult quadratic_coefficient(const SystemModel& model, double crossing_z);

// chi_c[omega] = (kappa/2 + i(M(z_dis) - Delta - omega))^{-1}
Eigen::MatrixXcd susceptibility(const SystemModel& model, const DriveConfig& drive,
                                double omega, double z_dis);

// Steady intracavity amplitudes chi_c[0] * sqrt(kappa_in) * a_in, with a_in
// real positive; |a_n|^2 is in photons.
Eigen::VectorXcd steady_state(const SystemModel& model, const DriveConfig& drive,
                              double z_dis);

struct ReflectionResult {
  std::complex<double> amplitude_ratio;  // a_refl / a_in
  double power_ratio = 0.0;              // |amplitude_ratio|^2
};

// Coherent sum of the mode reflections: 1 - sqrt(kappa_in)^T chi_c[0] sqrt(kappa_in).
ReflectionResult reflection(const SystemModel& model, const DriveConfig& drive,
                            double z_dis);

namespace detail {

// Shared building block: kappa/2 + i(M - (Delta + omega)). The susceptibility
// is its inverse; solvers reuse the factorization.
Eigen::MatrixXcd susceptibility_denominator(const SystemModel& model, double detuning,
                                            double omega, double z_dis);

// steady_state with an explicit complex input amplitude (phase-rotation
// properties are checked through this hook).
Eigen::VectorXcd steady_state_amp(const SystemModel& model, double detuning,
                                  std::complex<double> a_in, double z_dis);

}  // namespace detail

}  // namespace avcross
