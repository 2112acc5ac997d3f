#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace mpal::lab {

/// Linear-interpolation quantile (NaN for an empty sample).
double quantile(std::vector<double> values, double q);

struct ReportResult {
  int exit_code = 0;
  std::vector<std::string> missing;  // absent artifact files
  std::vector<std::string> written;
  nlohmann::json error;              // null on success
};

/// Reads a completed run directory and writes summary tables (CSV) and summary.txt
/// into it. Missing artifacts are listed and give exit code 4.
ReportResult report(const std::filesystem::path& run_dir);

}  // namespace mpal::lab
