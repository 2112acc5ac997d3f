#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpal::lab {

/// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::string file_digest(const std::filesystem::path& path);

const char* software_version();

struct RunManifest {
  std::string config_hash;
  std::string version;
  std::string pipeline;
  std::uint64_t master_seed = 0;
  std::vector<std::uint64_t> sample_seeds;
  std::size_t workers = 1;
  std::string out_dir;
  std::string started_utc;
  double elapsed_seconds = 0.0;
  std::map<std::string, double> stage_seconds;
  std::map<std::string, std::string> digests;  // artifact file name -> FNV-1a hex
  std::size_t quarantined = 0;
  std::size_t attempted = 0;
  int exit_code = 0;
};

void to_json(nlohmann::json& j, const RunManifest& m);
void from_json(const nlohmann::json& j, RunManifest& m);

}  // namespace mpal::lab
