// Command-line front end: one subcommand per pipeline plus `report`.
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include <CLI11.hpp>

#include "mpal/lab/config.hpp"
#include "mpal/lab/pipelines.hpp"
#include "mpal/lab/report.hpp"

namespace {

std::size_t default_workers() {
  if (const char* env = std::getenv("MPAL_WORKERS")) {
    try {
      const long n = std::stol(env);
      if (n > 0) return static_cast<std::size_t>(n);
    } catch (const std::exception&) {
    }
    std::cerr << "ignoring MPAL_WORKERS='" << env << "'\n";
  }
  return 1;
}

void print_error(const nlohmann::json& error, int code) {
  nlohmann::json e = error.is_null() ? nlohmann::json::object() : error;
  e["exit_code"] = code;
  std::cerr << e.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Monte-Carlo laboratory for the multi-particle continuum Anderson model"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::size_t workers = default_workers();
  bool allow_invalid = false;

  const std::pair<const char*, mpal::lab::Pipeline> pipelines[] = {
      {"validate", mpal::lab::Pipeline::Validate}, {"classify", mpal::lab::Pipeline::Classify},
      {"survey", mpal::lab::Pipeline::Survey},     {"spectral", mpal::lab::Pipeline::Spectral},
      {"moment", mpal::lab::Pipeline::Moment},     {"full", mpal::lab::Pipeline::Full}};
  for (const auto& [name, pipeline] : pipelines) {
    auto* sub = app.add_subcommand(name, std::string("run the ") + name + " pipeline");
    sub->add_option("--config", config_path, "experiment config (TOML or JSON)");
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option("--workers", workers, "worker threads (default: MPAL_WORKERS or 1)")
        ->check(CLI::PositiveNumber);
    sub->add_flag("--allow-invalid", allow_invalid, "run even if assumption checks fail");
  }
  auto* rep = app.add_subcommand("report", "summarize a completed run directory");
  rep->add_option("--out", out_dir, "run directory")->required();
  rep->add_option("--config", config_path, "ignored; accepted for uniformity");
  rep->add_option("--workers", workers, "ignored");
  rep->add_flag("--allow-invalid", allow_invalid, "ignored");

  CLI11_PARSE(app, argc, argv);

  if (rep->parsed()) {
    const auto r = mpal::lab::report(out_dir);
    if (r.exit_code != 0) {
      print_error(r.error, r.exit_code);
      return r.exit_code;
    }
    for (const auto& f : r.written) std::cout << out_dir << "/" << f << '\n';
    return 0;
  }

  mpal::lab::RunOptions options;
  options.workers = workers;
  options.allow_invalid = allow_invalid;
  if (!out_dir.empty()) options.out_dir = out_dir;
  for (const auto& [name, pipeline] : pipelines) {
    if (app.got_subcommand(name)) options.pipeline = pipeline;
  }

  mpal::lab::ExperimentConfig config;
  try {
    if (!config_path.empty()) config = mpal::lab::load_config(config_path);
  } catch (const mpal::lab::ConfigError& e) {
    print_error({{"error", "invalid config"}, {"detail", e.what()}}, mpal::lab::kExitInvalidConfig);
    return mpal::lab::kExitInvalidConfig;
  }

  const auto result = mpal::lab::run(config, options);
  if (result.exit_code != 0) {
    print_error(result.error, result.exit_code);
    return result.exit_code;
  }
  nlohmann::json summary{{"out_dir", result.out_dir.string()},
                         {"pipeline", result.manifest.pipeline},
                         {"config_hash", result.manifest.config_hash},
                         {"digests", result.manifest.digests}};
  std::cout << summary.dump(2) << '\n';
  return 0;
}
