#include "mpal/lab/manifest.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#ifndef MPAL_VERSION
#define MPAL_VERSION "0.0.0"
#endif

namespace mpal::lab {

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return hex64(fnv1a64(ss.str()));
}

const char* software_version() { return MPAL_VERSION; }

void to_json(nlohmann::json& j, const RunManifest& m) {
  j = nlohmann::json{{"config_hash", m.config_hash},
                     {"version", m.version},
                     {"pipeline", m.pipeline},
                     {"master_seed", m.master_seed},
                     {"sample_seeds", m.sample_seeds},
                     {"workers", m.workers},
                     {"out_dir", m.out_dir},
                     {"timing", {{"started_utc", m.started_utc},
                                 {"elapsed_seconds", m.elapsed_seconds},
                                 {"stages", m.stage_seconds}}},
                     {"digests", m.digests},
                     {"quarantined", m.quarantined},
                     {"attempted", m.attempted},
                     {"exit_code", m.exit_code}};
}

void from_json(const nlohmann::json& j, RunManifest& m) {
  m.config_hash = j.at("config_hash").get<std::string>();
  m.version = j.at("version").get<std::string>();
  m.pipeline = j.at("pipeline").get<std::string>();
  m.master_seed = j.at("master_seed").get<std::uint64_t>();
  m.sample_seeds = j.at("sample_seeds").get<std::vector<std::uint64_t>>();
  m.workers = j.value("workers", std::size_t{1});
  m.out_dir = j.value("out_dir", std::string{});
  if (j.contains("timing")) {
    const auto& t = j.at("timing");
    m.started_utc = t.value("started_utc", std::string{});
    m.elapsed_seconds = t.value("elapsed_seconds", 0.0);
    m.stage_seconds = t.value("stages", std::map<std::string, double>{});
  }
  m.digests = j.at("digests").get<std::map<std::string, std::string>>();
  m.quarantined = j.value("quarantined", std::size_t{0});
  m.attempted = j.value("attempted", std::size_t{0});
  m.exit_code = j.value("exit_code", 0);
}

}  // namespace mpal::lab
