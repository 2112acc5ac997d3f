#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpal/disorder.hpp"

namespace mpal::lab {

enum class Pipeline { Validate, Classify, Survey, Spectral, Moment, Full };

const char* to_string(Pipeline p);
Pipeline pipeline_from_string(const std::string& name);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  Pipeline pipeline = Pipeline::Full;
  ModelConfig model;

  std::size_t k_max = 1;  // scales L_0..L_{k_max} are surveyed

  std::size_t n_samples = 20;
  std::uint64_t master_seed = 20100701;

  // Energy grid on [lo, hi]; hi defaults to eta.
  std::size_t energy_points = 16;
  double energy_lo = 0.0;
  std::optional<double> energy_hi;

  // Spectral pipeline: box radius (default L_{k_max}) and tail radii (default L_0..L_{k_max}).
  std::optional<std::int64_t> spectral_radius;
  std::vector<std::int64_t> tail_radii;

  // Moment pipeline: box radii (default L_1..L_{k_max}), K = Λ_{K_radius}(0), sampled times.
  std::vector<std::int64_t> moment_radii;
  std::int64_t K_radius = 1;
  std::size_t t_samples = 20;
  double t_max = 1000.0;

  std::string out_dir = "out";
  double quarantine_limit = 0.1;

  double energy_high() const { return energy_hi.value_or(model.eta); }
  std::vector<double> energies() const;
  std::int64_t spectral_box() const;
  std::vector<std::int64_t> tail_radii_or_default() const;
  std::vector<std::int64_t> moment_radii_or_default() const;
};

/// Strict schema: unknown keys and ill-typed or out-of-range values raise ConfigError.
ExperimentConfig config_from_json(const nlohmann::json& j);
/// Effective configuration, every field explicit. The output directory is left out so
/// that result bodies do not depend on where they are written.
nlohmann::json config_to_json(const ExperimentConfig& config);

/// JSON or TOML, by extension (.json/.toml) or, failing that, by the first character.
nlohmann::json parse_config_text(const std::string& text, const std::string& hint = "");
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace mpal::lab
