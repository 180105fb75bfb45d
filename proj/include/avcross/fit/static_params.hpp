#pragma once

#include <utility>
#include <vector>

#include "avcross/fit/slice.hpp"

namespace avcross::fit {

// Reflection map R(z, Delta). Row-major: reflectance[iz * n_delta + id].
struct SpectrumGrid {
  std::vector<double> z_values;     // m, ascending
  std::vector<double> detunings;    // rad/s, ascending
  std::vector<double> reflectance;  // power ratio, noise may exceed 1

  double at(size_t iz, size_t id) const { return reflectance[iz * detunings.size() + id]; }
  void validate() const;
};

// What the caller knows about the mode structure: how many modes are visible
// and which pairs anticross.
struct Topology {
  int n_modes = 2;
  std::vector<std::pair<int, int>> crossings = {{0, 1}};  // mode indices
};

struct ValueWithError {
  double value = 0.0;
  double error = 0.0;
};

struct ModeStaticParams {
  ValueWithError kappa;      // rad/s
  ValueWithError kappa_in;   // rad/s
  ValueWithError slope_dis;  // rad/s per m
  ValueWithError offset;     // line intercept at z = 0, rad/s
};

struct CrossingStaticParams {
  std::pair<int, int> pair;
  ValueWithError t;    // rad/s, from half the minimum branch separation
  ValueWithError phi;  // radians in [0, pi] (reflection cannot distinguish phi from -phi)
  double t_from_curvature = 0.0;  // cross-check from the vertex quadratic
  double crossing_z = 0.0;        // m
};

// Modes are reported in ascending branch order on the low-z side of the grid.
struct StaticParams {
  std::vector<ModeStaticParams> modes;
  std::vector<CrossingStaticParams> crossings;
};

// Full static pipeline: per-slice Lorentzian fits, linear slope fits in the
// asymptotic windows, tunneling rate from the minimum branch separation (with
// a vertex-quadratic cross-check), phase from the on-resonance dip ratio,
// kappa/kappa_in averaged over asymptotic slices.
StaticParams extract_static_params(const SpectrumGrid& grid, const Topology& topology);

}  // namespace avcross::fit
