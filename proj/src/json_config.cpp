#include "avcross/io/json_config.hpp"

#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "avcross/errors.hpp"
#include "avcross/io/sha1.hpp"
#include "avcross/units.hpp"

using nlohmann::json;

namespace avcross::io {

namespace {

const json& require(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError("expected an object", path);
  const auto it = j.find(key);
  if (it == j.end()) throw ConfigError("missing required field", path + "." + key);
  return *it;
}

double require_number(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_number()) throw ConfigError("expected a number", path + "." + key);
  return v.get<double>();
}

double number_or(const json& j, const std::string& key, double fallback,
                 const std::string& path) {
  if (!j.is_object() || !j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError("expected a number", path + "." + key);
  return v.get<double>();
}

std::string require_string(const json& j, const std::string& key, const std::string& path) {
  const json& v = require(j, key, path);
  if (!v.is_string()) throw ConfigError("expected a string", path + "." + key);
  return v.get<std::string>();
}

}  // namespace

json model_to_json(const SystemModel& model) {
  json j;
  j["modes"] = json::array();
  for (const auto& m : model.modes()) {
    j["modes"].push_back({{"label", m.label},
                          {"kappa_mhz", units::to_mhz(m.kappa)},
                          {"kappa_in_khz", units::to_khz(m.kappa_in)},
                          {"slope_dis_mhz_per_nm", units::to_mhz_per_nm(m.slope_dis)},
                          {"slope_osc_mhz_per_nm", units::to_mhz_per_nm(m.slope_osc)},
                          {"offset_mhz", units::to_mhz(m.offset)}});
  }
  j["couplings"] = json::array();
  for (const auto& c : model.couplings()) {
    j["couplings"].push_back({{"pair", {c.mode_a, c.mode_b}},
                              {"t_mhz", units::to_mhz(c.t)},
                              {"phi_rad", c.phi}});
  }
  const auto& mech = model.mech();
  j["mech"] = {{"omega_m_khz", units::to_khz(mech.omega_m)},
               {"gamma_m_hz", units::to_hz(mech.gamma_m)},
               {"mass_eff_ng", units::to_ng(mech.mass_eff)},
               {"temperature_k", mech.temperature}};
  j["crossing_frequency_thz"] = model.crossing_frequency() / (units::two_pi * 1e12);
  return j;
}

SystemModel model_from_json(const json& j, const std::string& path) {
  const json& jmodes = require(j, "modes", path);
  if (!jmodes.is_array() || jmodes.empty())
    throw ConfigError("must be a non-empty array", path + ".modes");

  std::vector<OpticalMode> modes;
  for (size_t i = 0; i < jmodes.size(); ++i) {
    const std::string p = path + ".modes[" + std::to_string(i) + "]";
    const json& jm = jmodes[i];
    OpticalMode m;
    m.label = require_string(jm, "label", p);
    m.kappa = units::from_mhz(require_number(jm, "kappa_mhz", p));
    m.kappa_in = units::from_khz(require_number(jm, "kappa_in_khz", p));
    m.slope_dis = units::from_mhz_per_nm(number_or(jm, "slope_dis_mhz_per_nm", 0.0, p));
    m.slope_osc = units::from_mhz_per_nm(number_or(jm, "slope_osc_mhz_per_nm", 0.0, p));
    m.offset = units::from_mhz(number_or(jm, "offset_mhz", 0.0, p));
    modes.push_back(std::move(m));
  }

  std::vector<CouplingTerm> couplings;
  if (j.contains("couplings")) {
    const json& jc = j.at("couplings");
    if (!jc.is_array()) throw ConfigError("expected an array", path + ".couplings");
    for (size_t i = 0; i < jc.size(); ++i) {
      const std::string p = path + ".couplings[" + std::to_string(i) + "]";
      const json& pair = require(jc[i], "pair", p);
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_string() || !pair[1].is_string())
        throw ConfigError("pair must be [label, label]", p + ".pair");
      CouplingTerm c;
      c.mode_a = pair[0].get<std::string>();
      c.mode_b = pair[1].get<std::string>();
      c.t = units::from_mhz(require_number(jc[i], "t_mhz", p));
      c.phi = number_or(jc[i], "phi_rad", 0.0, p);
      couplings.push_back(std::move(c));
    }
  }

  const json& jmech = require(j, "mech", path);
  const std::string pm = path + ".mech";
  MechanicalOscillator mech;
  mech.omega_m = units::from_khz(require_number(jmech, "omega_m_khz", pm));
  mech.gamma_m = units::from_hz(require_number(jmech, "gamma_m_hz", pm));
  mech.mass_eff = units::from_ng(require_number(jmech, "mass_eff_ng", pm));
  mech.temperature = require_number(jmech, "temperature_k", pm);

  const double crossing =
      units::two_pi * 1e12 * number_or(j, "crossing_frequency_thz", 0.0, path);
  return SystemModel(std::move(modes), std::move(couplings), mech, crossing);
}

json drive_to_json(const DriveConfig& drive) {
  json j = {{"detuning_mhz", units::to_mhz(drive.detuning)},
            {"power_in_uw", units::to_uw(drive.power_in)},
            {"wavelength_nm", units::to_nm(drive.wavelength)},
            {"fiber_efficiency", drive.fiber_efficiency}};
  if (drive.modulation)
    j["modulation"] = {{"mod_freq_hz", drive.modulation->freq_hz},
                       {"depth", drive.modulation->depth}};
  return j;
}

DriveConfig drive_from_json(const json& j, const std::string& path) {
  DriveConfig d;
  d.detuning = units::from_mhz(number_or(j, "detuning_mhz", 0.0, path));
  d.power_in = units::from_uw(number_or(j, "power_in_uw", 0.0, path));
  d.wavelength = units::from_nm(number_or(j, "wavelength_nm", 1064.0, path));
  d.fiber_efficiency = number_or(j, "fiber_efficiency", 1.0, path);
  if (j.is_object() && j.contains("modulation") && !j.at("modulation").is_null()) {
    const std::string pm = path + ".modulation";
    Modulation m;
    m.freq_hz = require_number(j.at("modulation"), "mod_freq_hz", pm);
    m.depth = require_number(j.at("modulation"), "depth", pm);
    d.modulation = m;
  }
  d.validate();
  return d;
}

std::vector<double> AxisSpec::grid() const {
  if (points < 2) throw ConfigError("axis needs at least 2 points");
  if (!(max > min)) throw ConfigError("axis range is empty");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i) g[i] = min + (max - min) * i / (points - 1);
  return g;
}

namespace {

AxisSpec axis_from_json(const json& j, const std::string& path) {
  AxisSpec a;
  a.min = require_number(j, "min", path);
  a.max = require_number(j, "max", path);
  const json& p = require(j, "points", path);
  if (!p.is_number_integer()) throw ConfigError("points must be an integer", path + ".points");
  a.points = p.get<int>();
  if (a.points < 2) throw ConfigError("resolution must be >= 2 points", path + ".points");
  if (!(a.max > a.min)) throw ConfigError("range is empty", path);
  return a;
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();

  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }

  json jmodel;
  if (j.contains("model_file")) {
    const auto model_path =
        path.parent_path() / require_string(j, "model_file", "config");
    std::ifstream min(model_path);
    if (!min) throw ConfigError("cannot open model file '" + model_path.string() + "'");
    try {
      jmodel = json::parse(min);
    } catch (const json::parse_error& e) {
      throw ParseError(model_path.string() + ": " + e.what());
    }
  } else {
    jmodel = require(j, "model", "config");
  }

  RunConfig cfg{
      model_from_json(jmodel, "model"),
      j.contains("drive") ? drive_from_json(j.at("drive"), "drive") : DriveConfig{},
      {}, {}, {}, {}, {}, 0.0, 0, "out", {}, {}};

  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.contains("z_nm")) cfg.z_nm = axis_from_json(s.at("z_nm"), "sweep.z_nm");
    if (s.contains("delta_mhz"))
      cfg.delta_mhz = axis_from_json(s.at("delta_mhz"), "sweep.delta_mhz");
    if (s.contains("psd_hz")) {
      const json& p = s.at("psd_hz");
      if (p.contains("center_khz")) cfg.psd.center_khz = require_number(p, "center_khz", "sweep.psd_hz");
      cfg.psd.span_hz = number_or(p, "span_hz", cfg.psd.span_hz, "sweep.psd_hz");
      cfg.psd.points = static_cast<int>(number_or(p, "points", cfg.psd.points, "sweep.psd_hz"));
      if (cfg.psd.points < 2) throw ConfigError("resolution must be >= 2 points", "sweep.psd_hz.points");
    }
  }

  if (j.contains("oracle")) {
    const json& o = j.at("oracle");
    if (o.contains("detunings_mhz"))
      cfg.oracle.detunings_mhz = axis_from_json(o.at("detunings_mhz"), "oracle.detunings_mhz");
    if (o.contains("z_positions_nm")) {
      if (!o.at("z_positions_nm").is_array())
        throw ConfigError("expected an array", "oracle.z_positions_nm");
      cfg.oracle.z_positions_nm = o.at("z_positions_nm").get<std::vector<double>>();
    }
    cfg.oracle.c0 = number_or(o, "c0", cfg.oracle.c0, "oracle");
    cfg.oracle.duration_gammas = number_or(o, "duration_gammas", cfg.oracle.duration_gammas, "oracle");
    cfg.oracle.dt_safety = number_or(o, "dt_safety", cfg.oracle.dt_safety, "oracle");
    cfg.oracle.transient_kappas = number_or(o, "transient_kappas", cfg.oracle.transient_kappas, "oracle");
    cfg.oracle.tolerance = number_or(o, "tolerance", cfg.oracle.tolerance, "oracle");
  }

  if (j.contains("fit")) {
    const json& f = j.at("fit");
    if (f.contains("topology")) {
      const json& t = f.at("topology");
      cfg.fit.n_modes = static_cast<int>(require_number(t, "n_modes", "fit.topology"));
      if (t.contains("crossings")) {
        cfg.fit.crossings.clear();
        for (const auto& c : t.at("crossings")) {
          if (!c.is_array() || c.size() != 2)
            throw ConfigError("crossings must be pairs of mode indices", "fit.topology.crossings");
          cfg.fit.crossings.emplace_back(c[0].get<int>(), c[1].get<int>());
        }
      }
    }
    if (f.contains("free_params"))
      cfg.fit.free_params = f.at("free_params").get<std::vector<std::string>>();
  }

  cfg.z_dis_nm = number_or(j, "z_dis_nm", 0.0, "config");
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned())
      throw ConfigError("seed must be an unsigned integer", "config.seed");
    cfg.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("out_dir")) cfg.out_dir = require_string(j, "out_dir", "config");

  cfg.source_text = text;
  cfg.sha1 = git_blob_sha1(text);
  return cfg;
}

json run_metadata(const RunConfig& config, const std::string& command) {
  return json{{"command", command},
              {"config_sha1", config.sha1},
              {"seed", config.seed},
              {"model", model_to_json(config.model)},
              {"drive", drive_to_json(config.drive)}};
}

}  // namespace avcross::io
