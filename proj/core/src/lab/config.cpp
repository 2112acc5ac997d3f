#include "mpal/lab/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mpal/geometry.hpp"
#include "mpal/lab/toml.hpp"
#include "mpal/resolvent.hpp"

namespace mpal::lab {

namespace {

void check_keys(const nlohmann::json& j, const std::string& where, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError(where + ": expected a table");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

template <typename T>
T get(const nlohmann::json& j, const std::string& key, const std::string& where, T fallback) {
  if (!j.contains(key)) return fallback;
  const auto& v = j.at(key);
  try {
    if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw ConfigError("");
      const double x = v.get<double>();
      if (!std::isfinite(x)) throw ConfigError("");
      return x;
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw ConfigError("");
      if constexpr (std::is_unsigned_v<T>) {
        if (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0) {
          throw ConfigError("");
        }
      }
      return v.get<T>();
    } else {
      return v.get<T>();
    }
  } catch (const std::exception&) {
    throw ConfigError(where + "." + key + ": invalid value " + v.dump());
  }
}

std::vector<std::int64_t> get_radii(const nlohmann::json& j, const std::string& key,
                                    const std::string& where) {
  if (!j.contains(key)) return {};
  const auto& v = j.at(key);
  if (!v.is_array()) throw ConfigError(where + "." + key + ": expected an array of integers");
  std::vector<std::int64_t> out;
  for (const auto& e : v) {
    if (!e.is_number_integer() || e.get<std::int64_t>() < 1) {
      throw ConfigError(where + "." + key + ": radii must be positive integers");
    }
    out.push_back(e.get<std::int64_t>());
  }
  return out;
}

ModelConfig model_from_json(const nlohmann::json& j) {
  const std::string w = "model";
  check_keys(j, w, {"N", "d", "v", "interaction", "bump", "grid_inverse_step", "eta", "m", "p", "Q", "L0"});
  ModelConfig def;
  ModelConfig c;
  c.N = get<int>(j, "N", w, def.N);
  c.d = get<int>(j, "d", w, def.d);
  c.v = get<double>(j, "v", w, def.v);
  if (j.contains("interaction")) {
    const auto& u = j.at("interaction");
    check_keys(u, w + ".interaction", {"r0", "u0", "u3"});
    c.interaction.r0 = get<double>(u, "r0", w + ".interaction", def.interaction.r0);
    c.interaction.u0 = get<double>(u, "u0", w + ".interaction", def.interaction.u0);
    c.interaction.u3 = get<double>(u, "u3", w + ".interaction", def.interaction.u3);
  }
  if (j.contains("bump")) {
    const auto& b = j.at("bump");
    check_keys(b, w + ".bump", {"radius", "height", "r1"});
    c.bump.radius = get<double>(b, "radius", w + ".bump", def.bump.radius);
    c.bump.height = get<double>(b, "height", w + ".bump", def.bump.height);
    c.bump.r1 = get<double>(b, "r1", w + ".bump", def.bump.r1);
  }
  c.grid_inverse_step = get<int>(j, "grid_inverse_step", w, def.grid_inverse_step);
  c.eta = get<double>(j, "eta", w, def.eta);
  c.m = get<double>(j, "m", w, def.m);
  c.p = get<double>(j, "p", w, def.p);
  c.Q = get<double>(j, "Q", w, def.Q);
  c.L0 = get<std::int64_t>(j, "L0", w, def.L0);

  if (c.N < 1 || c.N > 8) throw ConfigError("model.N must be in [1, 8]");
  if (c.d < 1 || c.d > 3) throw ConfigError("model.d must be in [1, 3]");
  if (!(c.v > 0)) throw ConfigError("model.v must be positive");
  if (c.grid_inverse_step < 1) throw ConfigError("model.grid_inverse_step must be >= 1");
  if (!(c.eta > 0)) throw ConfigError("model.eta must be positive");
  if (!(c.m > 0)) throw ConfigError("model.m must be positive");
  if (!(c.Q >= 0)) throw ConfigError("model.Q must be >= 0");
  if (c.L0 < 2) throw ConfigError("model.L0 must be >= 2");
  if (!(c.bump.radius > 0) || !(c.bump.height > 0) || !(c.bump.r1 > 0)) {
    throw ConfigError("model.bump values must be positive");
  }
  if (!c.moment_condition_holds()) {
    throw ConfigError("model: moment condition 2p > 3 N d alpha + alpha Q violated");
  }
  return c;
}

}  // namespace

const char* to_string(Pipeline p) {
  switch (p) {
    case Pipeline::Validate: return "validate";
    case Pipeline::Classify: return "classify";
    case Pipeline::Survey: return "survey";
    case Pipeline::Spectral: return "spectral";
    case Pipeline::Moment: return "moment";
    case Pipeline::Full: return "full";
  }
  return "full";
}

Pipeline pipeline_from_string(const std::string& name) {
  for (auto p : {Pipeline::Validate, Pipeline::Classify, Pipeline::Survey, Pipeline::Spectral,
                 Pipeline::Moment, Pipeline::Full}) {
    if (name == to_string(p)) return p;
  }
  throw ConfigError("unknown pipeline '" + name + "'");
}

std::vector<double> ExperimentConfig::energies() const {
  return energy_grid(energy_lo, energy_high(), energy_points);
}

std::int64_t ExperimentConfig::spectral_box() const {
  return spectral_radius.value_or(scale_sequence(model.L0, k_max)[k_max]);
}

std::vector<std::int64_t> ExperimentConfig::tail_radii_or_default() const {
  if (!tail_radii.empty()) return tail_radii;
  return scale_sequence(model.L0, k_max).values;
}

std::vector<std::int64_t> ExperimentConfig::moment_radii_or_default() const {
  if (!moment_radii.empty()) return moment_radii;
  const auto s = scale_sequence(model.L0, k_max);
  if (k_max == 0) return {s[0]};
  return {s.values.begin() + 1, s.values.end()};
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  check_keys(j, "config",
             {"pipeline", "model", "scales", "ensemble", "energy_grid", "spectral", "moment", "outputs", "run"});
  ExperimentConfig c;
  if (j.contains("pipeline")) {
    if (!j.at("pipeline").is_string()) throw ConfigError("config.pipeline: expected a string");
    c.pipeline = pipeline_from_string(j.at("pipeline").get<std::string>());
  }
  c.model = model_from_json(j.value("model", nlohmann::json::object()));
  if (j.contains("scales")) {
    const auto& s = j.at("scales");
    check_keys(s, "scales", {"k_max"});
    c.k_max = get<std::size_t>(s, "k_max", "scales", c.k_max);
  }
  if (c.k_max > 6) throw ConfigError("scales.k_max must be <= 6");
  try {
    (void)scale_sequence(c.model.L0, c.k_max);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("scales: ") + e.what());
  }
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    check_keys(e, "ensemble", {"n_samples", "master_seed"});
    c.n_samples = get<std::size_t>(e, "n_samples", "ensemble", c.n_samples);
    c.master_seed = get<std::uint64_t>(e, "master_seed", "ensemble", c.master_seed);
  }
  if (j.contains("energy_grid")) {
    const auto& e = j.at("energy_grid");
    check_keys(e, "energy_grid", {"points", "lo", "hi"});
    c.energy_points = get<std::size_t>(e, "points", "energy_grid", c.energy_points);
    c.energy_lo = get<double>(e, "lo", "energy_grid", c.energy_lo);
    if (e.contains("hi") && !e.at("hi").is_null()) c.energy_hi = get<double>(e, "hi", "energy_grid", 0.0);
  }
  if (c.energy_lo < 0.0 || c.energy_high() > c.model.eta || c.energy_lo > c.energy_high()) {
    throw ConfigError("energy_grid: must satisfy 0 <= lo <= hi <= eta");
  }
  if (j.contains("spectral")) {
    const auto& s = j.at("spectral");
    check_keys(s, "spectral", {"box_radius", "tail_radii"});
    if (s.contains("box_radius")) {
      c.spectral_radius = get<std::int64_t>(s, "box_radius", "spectral", 0);
      if (*c.spectral_radius < 2) throw ConfigError("spectral.box_radius must be >= 2");
    }
    c.tail_radii = get_radii(s, "tail_radii", "spectral");
  }
  if (j.contains("moment")) {
    const auto& m = j.at("moment");
    check_keys(m, "moment", {"box_radii", "K_radius", "t_samples", "t_max"});
    c.moment_radii = get_radii(m, "box_radii", "moment");
    c.K_radius = get<std::int64_t>(m, "K_radius", "moment", c.K_radius);
    c.t_samples = get<std::size_t>(m, "t_samples", "moment", c.t_samples);
    c.t_max = get<double>(m, "t_max", "moment", c.t_max);
    if (c.K_radius < 1) throw ConfigError("moment.K_radius must be >= 1");
    if (!(c.t_max >= 0)) throw ConfigError("moment.t_max must be >= 0");
  }
  if (j.contains("outputs")) {
    const auto& o = j.at("outputs");
    check_keys(o, "outputs", {"dir"});
    c.out_dir = get<std::string>(o, "dir", "outputs", c.out_dir);
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    check_keys(r, "run", {"quarantine_limit"});
    c.quarantine_limit = get<double>(r, "quarantine_limit", "run", c.quarantine_limit);
  }
  return c;
}

nlohmann::json config_to_json(const ExperimentConfig& c) {
  nlohmann::json j;
  j["pipeline"] = to_string(c.pipeline);
  j["model"] = c.model;
  j["scales"] = {{"k_max", c.k_max}, {"values", scale_sequence(c.model.L0, c.k_max).values}};
  j["ensemble"] = {{"n_samples", c.n_samples}, {"master_seed", c.master_seed}};
  j["energy_grid"] = {{"points", c.energy_points}, {"lo", c.energy_lo}, {"hi", c.energy_high()}};
  j["spectral"] = {{"box_radius", c.spectral_box()}, {"tail_radii", c.tail_radii_or_default()}};
  j["moment"] = {{"box_radii", c.moment_radii_or_default()},
                 {"K_radius", c.K_radius},
                 {"t_samples", c.t_samples},
                 {"t_max", c.t_max}};
  j["run"] = {{"quarantine_limit", c.quarantine_limit}};
  return j;
}

nlohmann::json parse_config_text(const std::string& text, const std::string& hint) {
  bool json = false;
  if (hint == ".json") {
    json = true;
  } else if (hint != ".toml") {
    const auto first = text.find_first_not_of(" \t\r\n");
    json = first != std::string::npos && text[first] == '{';
  }
  try {
    return json ? nlohmann::json::parse(text) : parse_toml(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return config_from_json(parse_config_text(ss.str(), path.extension().string()));
}

}  // namespace mpal::lab
