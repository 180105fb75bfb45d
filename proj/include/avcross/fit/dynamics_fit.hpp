#pragma once

#include <span>
#include <vector>

#include "avcross/fit/static_params.hpp"
#include "avcross/model.hpp"

namespace avcross::fit {

// One measured spring/damping point.
struct DynamicsPoint {
  double detuning = 0.0;     // rad/s
  double delta_omega = 0.0;  // rad/s
  double delta_gamma = 0.0;  // rad/s
  double sigma_omega = 0.0;  // optional 1-sigma errors; 0 means unknown
  double sigma_gamma = 0.0;
};

struct FreeParam {
  enum class Kind { SlopeOsc, ZDis, PowerIn };
  Kind kind = Kind::ZDis;
  int mode_index = -1;  // for SlopeOsc
};

struct DynamicsFitResult {
  std::vector<ValueWithError> values;  // one per free parameter, input order
  double residual_norm = 0.0;
  int iterations = 0;
  bool boundary_warning = false;
};

// Bounded nonlinear least squares of (delta_omega, delta_gamma)(Delta) against
// the coupled-mode self-energy. Fixed parameters come from `model`, `drive`
// and `z_dis`; free parameters start from those same values. Residuals are
// weighted by the supplied errors, or by each series' RMS when absent.
DynamicsFitResult fit_dynamics(std::span<const DynamicsPoint> measured,
                               const SystemModel& model, const DriveConfig& drive,
                               double z_dis, std::span<const FreeParam> free_params);

}  // namespace avcross::fit
