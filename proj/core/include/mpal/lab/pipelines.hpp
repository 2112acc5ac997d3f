#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mpal/dynamics.hpp"
#include "mpal/lab/config.hpp"
#include "mpal/lab/manifest.hpp"
#include "mpal/spectral.hpp"

namespace mpal::lab {

/// Exit codes of run() and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInvalidConfig = 2;
inline constexpr int kExitQuarantine = 3;
inline constexpr int kExitMissingArtifacts = 4;

struct RunOptions {
  std::optional<std::filesystem::path> out_dir;  // overrides the config
  std::optional<Pipeline> pipeline;              // overrides the config
  std::size_t workers = 1;
  bool allow_invalid = false;
};

struct RunResult {
  int exit_code = kExitOk;
  RunManifest manifest;
  nlohmann::json error;  // null on success
  std::filesystem::path out_dir;
};

RunResult run(const ExperimentConfig& config, const RunOptions& options);

/// Seed of sample i: mix of the master seed and i.
std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t i);

struct SpectralSample {
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  std::int64_t box_radius = 0;
  std::size_t dim = 0;
  double lowest_eigenvalue = 0.0;
  std::vector<EigenPair> pairs;
  std::vector<nlohmann::json> lines;       // eigen report lines
  std::size_t edi_evaluated = 0;
  std::size_t edi_skipped = 0;
  double edi_max_ratio = 0.0;
  std::size_t lemma_checked = 0;   // centers whose L_0 cube fits in the box
  std::size_t lemma_singular = 0;  // of those, classified S at E_n
  std::string error;
};

/// Eigenanalysis of one disorder sample on Λ_R(0) in the window [0, eta].
SpectralSample spectral_sample(const ModelConfig& model, std::int64_t box_radius,
                               std::uint64_t seed, const std::vector<std::int64_t>& tail_radii,
                               std::size_t sample_index = 0);

struct MomentPoint {
  std::int64_t box_radius = 0;
  std::size_t n_pairs = 0;
  double bound = 0.0;
  AnnulusReport annuli;
  std::vector<std::pair<double, double>> sampled;  // (t, moment_at)
  std::size_t violations = 0;  // sampled values above the bound
};

struct MomentSample {
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  std::vector<MomentPoint> points;  // one per box radius
  std::string error;
};

/// Correlator bound, annular split and sampled moments of one disorder sample on each box
/// Λ_R(0). All boxes share one field realization.
MomentSample moment_sample(const ModelConfig& model, const std::vector<std::int64_t>& radii,
                           std::int64_t K_radius, std::size_t t_samples, double t_max,
                           const ScaleSequence& scales, std::uint64_t seed,
                           std::size_t sample_index = 0);

nlohmann::json to_json_line(const MomentSample& sample, const MomentPoint& point, double Q,
                            double eta, std::int64_t K_radius);

}  // namespace mpal::lab
