#include "mpal/lab/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "mpal/disorder.hpp"
#include "mpal/format.hpp"

namespace mpal::lab {

namespace fs = std::filesystem;

double quantile(std::vector<double> values, double q) {
  if (values.empty()) return NAN;
  std::sort(values.begin(), values.end());
  const double pos = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<nlohmann::json> read_lines(const fs::path& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) out.push_back(nlohmann::json::parse(line));
  }
  return out;
}

std::vector<std::string> expected_files(const std::string& pipeline) {
  std::vector<std::string> files{"config.json", "quarantine.json"};
  const bool all = pipeline == "full";
  if (all || pipeline == "validate") files.push_back("validation.json");
  if (all || pipeline == "classify") files.push_back("classify.csv");
  if (all || pipeline == "survey") {
    files.push_back("survey.csv");
    files.push_back("survey_summary.json");
  }
  if (all || pipeline == "spectral") {
    files.push_back("eigen_report.jsonl");
    files.push_back("spectral_samples.csv");
    files.push_back("spectral_summary.json");
  }
  if (all || pipeline == "moment") {
    files.push_back("moment.jsonl");
    files.push_back("moment_summary.json");
  }
  return files;
}

class Outputs {
 public:
  explicit Outputs(fs::path dir, ReportResult& r) : dir_(std::move(dir)), r_(r) {}
  void write(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << body;
    r_.written.push_back(name);
  }

 private:
  fs::path dir_;
  ReportResult& r_;
};

std::string fmt(double x) { return format_double(x); }

}  // namespace

ReportResult report(const fs::path& run_dir) {
  ReportResult result;
  const auto manifest_path = run_dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    result.missing.push_back("manifest.json");
    result.exit_code = 4;
    result.error = {{"error", "missing artifacts"}, {"missing", result.missing}};
    return result;
  }
  try {
    const auto manifest = nlohmann::json::parse(slurp(manifest_path));
    const auto pipeline = manifest.at("pipeline").get<std::string>();
    for (const auto& f : expected_files(pipeline)) {
      if (!fs::exists(run_dir / f)) result.missing.push_back(f);
    }
    if (!result.missing.empty()) {
      result.exit_code = 4;
      result.error = {{"error", "missing artifacts"}, {"missing", result.missing}};
      return result;
    }
    const auto config = nlohmann::json::parse(slurp(run_dir / "config.json"));
    ModelConfig model = config.at("model").get<ModelConfig>();
    Outputs out(run_dir, result);
    std::ostringstream text;
    text << "run " << run_dir.string() << "\n";
    text << "pipeline " << pipeline << ", config hash " << manifest.at("config_hash").get<std::string>()
         << ", version " << manifest.at("version").get<std::string>() << "\n";
    text << "quarantined " << manifest.value("quarantined", 0) << " of "
         << manifest.value("attempted", 0) << " sample tasks\n";

    if (fs::exists(run_dir / "validation.json")) {
      const auto v = nlohmann::json::parse(slurp(run_dir / "validation.json"));
      text << "\nassumption checks: " << (v.at("all_passed").get<bool>() ? "all passed" : "FAILED") << "\n";
      for (const auto& c : v.at("checks")) {
        text << "  " << c.at("name").get<std::string>() << ": "
             << (c.at("passed").get<bool>() ? "pass" : "fail") << "  " << c.at("detail").get<std::string>()
             << "\n";
      }
    }

    if (fs::exists(run_dir / "survey_summary.json")) {
      const auto s = nlohmann::json::parse(slurp(run_dir / "survey_summary.json"));
      std::string table = "k,L_k,rate,wilson_lo,wilson_hi,bound\n";
      std::vector<double> rates, Ls;
      text << "\npair survey (both cubes singular at some grid energy)\n";
      for (const auto& r : s.at("rows")) {
        table += std::to_string(r.at("k").get<std::size_t>()) + ',' +
                 std::to_string(r.at("L_k").get<std::int64_t>()) + ',' + fmt(r.at("rate").get<double>()) +
                 ',' + fmt(r.at("wilson_lo").get<double>()) + ',' + fmt(r.at("wilson_hi").get<double>()) +
                 ',' + fmt(r.at("bound").get<double>()) + '\n';
        rates.push_back(r.at("rate").get<double>());
        Ls.push_back(static_cast<double>(r.at("L_k").get<std::int64_t>()));
        text << "  k=" << r.at("k") << " L=" << r.at("L_k") << " failures " << r.at("failures") << "/"
             << r.at("samples") << " rate " << fmt(r.at("rate").get<double>()) << " wilson ["
             << fmt(r.at("wilson_lo").get<double>()) << ", " << fmt(r.at("wilson_hi").get<double>())
             << "] bound L^-2p " << fmt(r.at("bound").get<double>()) << "\n";
      }
      out.write("survey_table.csv", table);

      // Tail sums of the rates against L^{-(2p - 2 N d alpha)} with the smallest c that dominates.
      const double expo = 2.0 * model.p - 2.0 * model.N * model.d * ModelConfig::alpha;
      std::vector<double> tails(rates.size(), 0.0);
      for (std::size_t k = rates.size(); k-- > 0;) tails[k] = rates[k] + (k + 1 < rates.size() ? tails[k + 1] : 0.0);
      double c_fit = 0.0;
      for (std::size_t k = 0; k < tails.size(); ++k) c_fit = std::max(c_fit, tails[k] * std::pow(Ls[k], expo));
      std::string ub = "k,L_k,tail_sum,reference,c_fit,monotone\n";
      bool mono = true;
      for (std::size_t k = 0; k < tails.size(); ++k) {
        if (k > 0 && !(tails[k] < tails[k - 1])) mono = false;
        ub += std::to_string(k) + ',' + fmt(Ls[k]) + ',' + fmt(tails[k]) + ',' + fmt(std::pow(Ls[k], -expo)) +
              ',' + fmt(c_fit) + ',' + (mono ? "1" : "0") + '\n';
      }
      out.write("union_bound.csv", ub);
      text << "  tail sums strictly decreasing in k: " << (mono ? "yes" : "no") << "\n";
    }

    if (fs::exists(run_dir / "eigen_report.jsonl")) {
      std::vector<double> masses;
      std::size_t pairs = 0;
      for (const auto& line : read_lines(run_dir / "eigen_report.jsonl")) {
        ++pairs;
        if (!line.at("m_hat").is_null()) masses.push_back(line.at("m_hat").get<double>());
      }
      double lo = 0.0, hi = 1.0;
      if (!masses.empty()) {
        lo = *std::min_element(masses.begin(), masses.end());
        hi = *std::max_element(masses.begin(), masses.end());
        if (hi == lo) {
          lo -= 0.5;
          hi += 0.5;
        }
      }
      constexpr int bins = 20;
      std::vector<std::size_t> counts(bins, 0);
      for (double m : masses) {
        auto b = static_cast<int>(std::floor((m - lo) / (hi - lo) * bins));
        counts[static_cast<std::size_t>(std::clamp(b, 0, bins - 1))]++;
      }
      std::string hist = "bin_lo,bin_hi,count\n";
      for (int b = 0; b < bins; ++b) {
        hist += fmt(lo + (hi - lo) * b / bins) + ',' + fmt(lo + (hi - lo) * (b + 1) / bins) + ',' +
                std::to_string(counts[static_cast<std::size_t>(b)]) + '\n';
      }
      out.write("mhat_histogram.csv", hist);
      text << "\nspectral: " << pairs << " eigenpairs in the window, " << masses.size()
           << " decay fits";
      if (!masses.empty()) text << ", median m_hat " << fmt(quantile(masses, 0.5));
      text << "\n";
      if (fs::exists(run_dir / "spectral_summary.json")) {
        const auto s = nlohmann::json::parse(slurp(run_dir / "spectral_summary.json"));
        text << "  lowest eigenvalue min " << s.at("lowest_eigenvalue_min").dump() << ", median "
             << s.at("lowest_eigenvalue_median").dump() << "\n";
        for (const auto& t : s.at("tail_checks")) {
          text << "  centers in B_" << t.at("L_j") << ": " << t.at("eligible") << ", tail outside L="
               << t.at("L_j_plus_2") << " at most 1/4: " << t.at("tail_at_most_quarter") << "\n";
        }
      }
    }

    if (fs::exists(run_dir / "moment.jsonl")) {
      std::map<std::int64_t, std::vector<double>> bounds;
      std::map<std::int64_t, std::map<std::string, std::vector<double>>> annuli;
      std::map<std::int64_t, std::map<std::string, double>> comparison;
      std::map<std::int64_t, std::size_t> decaying;
      for (const auto& line : read_lines(run_dir / "moment.jsonl")) {
        const auto L = line.at("L").get<std::int64_t>();
        bounds[L].push_back(line.at("bound").get<double>());
        decaying[L] += line.at("annuli_decaying").get<bool>() ? 1 : 0;
        for (const auto& row : line.at("per_annulus")) {
          const auto label = row.at("label").get<std::string>();
          annuli[L][label].push_back(row.at("subtotal").get<double>());
          comparison[L][label] = row.at("comparison").get<double>();
        }
      }
      std::string series = "L_k,mean,p10,p90\n";
      std::string ann = "L_k,label,mean_subtotal,comparison\n";
      text << "\ncorrelator bound by box radius\n";
      for (const auto& [L, b] : bounds) {
        double mean = 0.0;
        for (double x : b) mean += x;
        mean /= static_cast<double>(b.size());
        series += std::to_string(L) + ',' + fmt(mean) + ',' + fmt(quantile(b, 0.1)) + ',' +
                  fmt(quantile(b, 0.9)) + '\n';
        text << "  L=" << L << " mean " << fmt(mean) << " p10 " << fmt(quantile(b, 0.1)) << " p90 "
             << fmt(quantile(b, 0.9)) << ", annular subtotals decaying in " << decaying[L] << "/"
             << b.size() << " samples\n";
        for (const auto& [label, v] : annuli[L]) {
          double mv = 0.0;
          for (double x : v) mv += x;
          mv /= static_cast<double>(v.size());
          ann += std::to_string(L) + ',' + label + ',' + fmt(mv) + ',' + fmt(comparison[L][label]) + '\n';
        }
      }
      out.write("moment_series.csv", series);
      out.write("annular_series.csv", ann);
    }
    out.write("summary.txt", text.str());
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.error = {{"error", "report failed"}, {"detail", e.what()}};
  }
  return result;
}

}  // namespace mpal::lab
