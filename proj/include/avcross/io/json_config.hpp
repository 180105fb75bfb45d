#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "avcross/model.hpp"

namespace avcross::io {

// JSON schema with explicit unit-suffixed field names; see README for the
// full layout. Internal quantities are SI/angular, converted here.
nlohmann::json model_to_json(const SystemModel& model);
SystemModel model_from_json(const nlohmann::json& j, const std::string& path = "model");

nlohmann::json drive_to_json(const DriveConfig& drive);
DriveConfig drive_from_json(const nlohmann::json& j, const std::string& path = "drive");

struct AxisSpec {
  double min = 0.0;
  double max = 0.0;
  int points = 2;

  std::vector<double> grid() const;  // uniform, inclusive of both ends
};

struct PsdSpec {
  std::optional<double> center_khz;  // default: omega_m
  double span_hz = 200.0;
  int points = 401;
};

struct OracleSpec {
  AxisSpec detunings_mhz{-4.0, 4.0, 21};
  std::vector<double> z_positions_nm = {0.0};
  double c0 = 1e4;               // initial mechanical amplitude, z_zpf units
  double duration_gammas = 20.0; // integration window in units of 1/gamma_m
  double dt_safety = 0.8;        // fraction of the admissible max step
  double transient_kappas = 10.0;
  double tolerance = 0.05;       // relative agreement criterion
};

struct FitSpec {
  int n_modes = 2;
  std::vector<std::pair<int, int>> crossings = {{0, 1}};
  std::vector<std::string> free_params;  // "z_dis" | "power_in" | "slope_osc:<mode>"
};

// Top-level run configuration shared by all CLI commands.
struct RunConfig {
  SystemModel model;
  DriveConfig drive;
  std::optional<AxisSpec> z_nm;
  std::optional<AxisSpec> delta_mhz;
  PsdSpec psd;
  OracleSpec oracle;
  FitSpec fit;
  double z_dis_nm = 0.0;
  std::uint64_t seed = 0;
  std::string out_dir = "out";

  // raw config file bytes and their git-style hash, for output stamping
  std::string source_text;
  std::string sha1;
};

RunConfig load_run_config(const std::filesystem::path& path);

// metadata sidecar written next to every output file set
nlohmann::json run_metadata(const RunConfig& config, const std::string& command);

}  // namespace avcross::io
