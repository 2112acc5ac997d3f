#include "mpal/lab/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "mpal/eigensolver.hpp"
#include "mpal/format.hpp"
#include "mpal/hamiltonian.hpp"
#include "mpal/lab/report.hpp"
#include "mpal/parallel.hpp"
#include "mpal/resolvent.hpp"

namespace mpal::lab {

namespace fs = std::filesystem;

std::uint64_t sample_seed(std::uint64_t master_seed, std::size_t i) {
  return mix_seed(master_seed, i);
}

namespace {

double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::string quoted(const LatticePoint& p) { return '"' + p.to_string() + '"'; }

std::string utc_now() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

MultiCube origin_cube(const ModelConfig& model, std::int64_t radius) {
  return MultiCube{LatticePoint::origin(model.N, model.d), radius};
}

nlohmann::json point_json(const LatticePoint& p) {
  return std::vector<std::int64_t>(p.coords().begin(), p.coords().end());
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(fs::path dir) : dir_(std::move(dir)) {}

  void write(const std::string& name, const std::string& body) {
    std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (dir_ / name).string());
    out << body;
    out.close();
    digests_[name] = hex64(fnv1a64(body));
  }
  const std::map<std::string, std::string>& digests() const { return digests_; }

 private:
  fs::path dir_;
  std::map<std::string, std::string> digests_;
};

struct Quarantine {
  std::size_t attempted = 0;
  nlohmann::json entries = nlohmann::json::array();

  void add(const std::string& stage, std::size_t index, std::uint64_t seed, const std::string& what) {
    entries.push_back({{"stage", stage}, {"sample_idx", index}, {"seed", seed}, {"error", what}});
  }
};

// Classification of Λ_{L_k}(0) for k = 0..k_max at every grid energy.
std::string run_classify(const ExperimentConfig& c, std::size_t workers, Quarantine& q) {
  const auto scales = scale_sequence(c.model.L0, c.k_max);
  const auto energies = c.energies();
  std::vector<std::string> bodies(c.n_samples);
  std::vector<std::string> errors(c.n_samples);
  parallel_for_index(c.n_samples, workers, [&](std::size_t i) {
    const auto seed = sample_seed(c.master_seed, i);
    std::ostringstream os;
    try {
      const auto region =
          required_field_region(origin_cube(c.model, scales[c.k_max]), c.model.bump.r1);
      const auto field = sample_field(seed, region, c.model.v);
      for (std::size_t k = 0; k <= c.k_max; ++k) {
        const auto op = assemble(origin_cube(c.model, scales[k]), field, c.model);
        std::optional<SpectrumInfo> spectrum;
        if (op.dim() <= 2000) spectrum = SpectrumInfo::of(op);
        for (double E : energies) {
          os << k << ',' << scales[k] << ',' << seed << ',' << i << ',' << format_double(E) << ',';
          try {
            const auto verdict =
                classify_cube(op, E, c.model.m, spectrum ? &*spectrum : nullptr);
            os << to_string(verdict.verdict) << ',' << format_double(verdict.witness.norm) << ','
               << format_double(verdict.threshold) << ',' << quoted(verdict.witness.source) << ','
               << quoted(verdict.witness.target) << '\n';
          } catch (const ResonantEnergy& e) {
            os << "R,," << format_double(std::exp(-c.model.m * static_cast<double>(scales[k])))
               << ",,\n";
          }
        }
      }
      bodies[i] = os.str();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });
  std::string out = "k,L_k,seed,sample_idx,E,verdict,max_norm,threshold,witness_v,witness_y\n";
  for (std::size_t i = 0; i < c.n_samples; ++i) {
    ++q.attempted;
    if (!errors[i].empty()) {
      q.add("classify", i, sample_seed(c.master_seed, i), errors[i]);
      continue;
    }
    out += bodies[i];
  }
  return out;
}

std::pair<std::string, std::string> run_survey(const ExperimentConfig& c, std::size_t workers,
                                               Quarantine& q) {
  const auto scales = scale_sequence(c.model.L0, c.k_max);
  const auto energies = c.energies();
  std::ostringstream csv;
  write_survey_csv_header(csv);
  nlohmann::json summary;
  summary["energy_grid"] = energies;
  summary["m"] = c.model.m;
  summary["p"] = c.model.p;
  summary["rows"] = nlohmann::json::array();
  PairSurveyOptions opts;
  opts.workers = workers;
  for (std::size_t k = 0; k <= c.k_max; ++k) {
    const auto row = pair_survey(c.model, scales, k, energies, c.model.m, c.n_samples,
                                 c.master_seed, opts);
    write_survey_csv_rows(csv, row);
    for (const auto& s : row.rows) {
      ++q.attempted;
      if (!s.error.empty()) q.add("survey", s.sample_index, s.seed, s.error);
    }
    summary["rows"].push_back({{"k", row.k},
                               {"L_k", row.L},
                               {"x", point_json(row.x)},
                               {"y", point_json(row.y)},
                               {"samples", row.samples},
                               {"failures", row.failures},
                               {"resonant", row.resonant},
                               {"quarantined", row.quarantined},
                               {"rate", row.rate},
                               {"wilson_lo", row.wilson.lo},
                               {"wilson_hi", row.wilson.hi},
                               {"bound", row.bound}});
  }
  return {csv.str(), summary.dump(2) + "\n"};
}

struct SpectralOutputs {
  std::string report;
  std::string samples_csv;
  std::string summary;
};

SpectralOutputs run_spectral(const ExperimentConfig& c, std::size_t workers, Quarantine& q) {
  const std::int64_t R = c.spectral_box();
  const auto tail_scales = scale_sequence(c.model.L0, c.k_max + 2);
  std::vector<std::int64_t> radii = c.tail_radii_or_default();
  for (auto s : tail_scales.values) radii.push_back(s);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());

  std::vector<SpectralSample> samples(c.n_samples);
  parallel_for_index(c.n_samples, workers, [&](std::size_t i) {
    samples[i] = spectral_sample(c.model, R, sample_seed(c.master_seed, i), radii, i);
  });

  SpectralOutputs out;
  std::string report;
  std::string csv = "sample_idx,seed,box_radius,dim,n_pairs,lowest_eigenvalue\n";
  std::vector<double> masses, lowest;
  std::size_t pairs_total = 0, edi_eval = 0, edi_skip = 0, lemma_checked = 0, lemma_s = 0;
  double edi_max = 0.0;
  std::vector<std::size_t> eligible(tail_scales.size(), 0), good(tail_scales.size(), 0);
  std::vector<std::size_t> counts(tail_scales.size(), 0);
  for (const auto& s : samples) {
    ++q.attempted;
    if (!s.error.empty()) {
      q.add("spectral", s.sample_index, s.seed, s.error);
      continue;
    }
    csv += std::to_string(s.sample_index) + ',' + std::to_string(s.seed) + ',' +
           std::to_string(s.box_radius) + ',' + std::to_string(s.dim) + ',' +
           std::to_string(s.pairs.size()) + ',' + format_double(s.lowest_eigenvalue) + '\n';
    lowest.push_back(s.lowest_eigenvalue);
    for (const auto& line : s.lines) report += line.dump() + '\n';
    pairs_total += s.pairs.size();
    edi_eval += s.edi_evaluated;
    edi_skip += s.edi_skipped;
    edi_max = std::max(edi_max, s.edi_max_ratio);
    lemma_checked += s.lemma_checked;
    lemma_s += s.lemma_singular;
    for (std::size_t n = 0; n < s.pairs.size(); ++n) {
      const auto& line = s.lines[n];
      if (!line["m_hat"].is_null()) masses.push_back(line["m_hat"].get<double>());
      const auto center_norm = s.pairs[n].primary_center().norm();
      for (std::size_t j = 0; j < tail_scales.size(); ++j) {
        if (center_norm <= tail_scales[j]) ++counts[j];
        if (j + 2 >= tail_scales.size() || center_norm > tail_scales[j]) continue;
        ++eligible[j];
        const double tail = line["tail_mass_by_R"][std::to_string(tail_scales[j + 2])].get<double>();
        if (tail <= 0.25) ++good[j];
      }
    }
  }
  nlohmann::json summary;
  summary["box_radius"] = R;
  summary["window"] = {0.0, c.model.eta};
  summary["samples"] = c.n_samples;
  summary["pairs_total"] = pairs_total;
  summary["m_hat_fitted"] = masses.size();
  summary["m_hat_median"] = masses.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(masses, 0.5));
  summary["lowest_eigenvalue_min"] =
      lowest.empty() ? nlohmann::json(nullptr) : nlohmann::json(*std::min_element(lowest.begin(), lowest.end()));
  summary["lowest_eigenvalue_median"] =
      lowest.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(lowest, 0.5));
  auto& tails = summary["tail_checks"] = nlohmann::json::array();
  for (std::size_t j = 0; j + 2 < tail_scales.size(); ++j) {
    tails.push_back({{"j", j},
                     {"L_j", tail_scales[j]},
                     {"L_j_plus_2", tail_scales[j + 2]},
                     {"eligible", eligible[j]},
                     {"tail_at_most_quarter", good[j]}});
  }
  auto& cc = summary["center_counts"] = nlohmann::json::array();
  std::vector<double> xs, ys;
  for (std::size_t j = 0; j < tail_scales.size(); ++j) {
    if (tail_scales[j] > R) break;
    cc.push_back({{"radius", tail_scales[j]}, {"count", counts[j]}});
    xs.push_back(static_cast<double>(tail_scales[j]));
    ys.push_back(static_cast<double>(counts[j]));
  }
  const double slope = loglog_slope(xs, ys);
  summary["center_count_slope"] = std::isfinite(slope) ? nlohmann::json(slope) : nlohmann::json(nullptr);
  summary["center_count_slope_cap"] = ModelConfig::alpha * c.model.N * c.model.d + 0.5;
  summary["edi"] = {{"evaluated", edi_eval}, {"skipped", edi_skip}, {"max_ratio", edi_max}};
  summary["lemma_shape"] = {{"checked", lemma_checked}, {"singular", lemma_s}};
  out.report = std::move(report);
  out.samples_csv = std::move(csv);
  out.summary = summary.dump(2) + "\n";
  return out;
}

std::pair<std::string, std::string> run_moment(const ExperimentConfig& c, std::size_t workers,
                                               Quarantine& q) {
  const auto radii = c.moment_radii_or_default();
  const auto scales = scale_sequence(c.model.L0, c.k_max + 2);
  std::vector<MomentSample> samples(c.n_samples);
  parallel_for_index(c.n_samples, workers, [&](std::size_t i) {
    samples[i] = moment_sample(c.model, radii, c.K_radius, c.t_samples, c.t_max, scales,
                               sample_seed(c.master_seed, i), i);
  });
  std::string lines;
  std::map<std::int64_t, std::vector<double>> bounds;
  std::map<std::int64_t, std::size_t> decaying, violations;
  for (const auto& s : samples) {
    ++q.attempted;
    if (!s.error.empty()) {
      q.add("moment", s.sample_index, s.seed, s.error);
      continue;
    }
    for (const auto& p : s.points) {
      lines += to_json_line(s, p, c.model.Q, c.model.eta, c.K_radius).dump() + '\n';
      bounds[p.box_radius].push_back(p.bound);
      decaying[p.box_radius] += p.annuli.decaying() ? 1 : 0;
      violations[p.box_radius] += p.violations;
    }
  }
  nlohmann::json summary;
  summary["Q"] = c.model.Q;
  summary["eta"] = c.model.eta;
  summary["K_radius"] = c.K_radius;
  auto& rows = summary["rows"] = nlohmann::json::array();
  for (auto R : radii) {
    const auto& b = bounds[R];
    double mean = 0.0;
    for (double x : b) mean += x;
    if (!b.empty()) mean /= static_cast<double>(b.size());
    rows.push_back({{"L", R},
                    {"samples", b.size()},
                    {"mean_bound", mean},
                    {"p10", b.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(b, 0.1))},
                    {"p90", b.empty() ? nlohmann::json(nullptr) : nlohmann::json(quantile(b, 0.9))},
                    {"annuli_decaying", decaying[R]},
                    {"domination_violations", violations[R]}});
  }
  return {lines, summary.dump(2) + "\n"};
}

}  // namespace

SpectralSample spectral_sample(const ModelConfig& model, std::int64_t box_radius,
                               std::uint64_t seed, const std::vector<std::int64_t>& tail_radii,
                               std::size_t sample_index) {
  SpectralSample out;
  out.sample_index = sample_index;
  out.seed = seed;
  out.box_radius = box_radius;
  try {
    const MultiCube box = origin_cube(model, box_radius);
    const auto field = sample_field(seed, required_field_region(box, model.bump.r1), model.v);
    const auto op = assemble(box, field, model);
    out.dim = op.dim();
    WindowOptions wopts;
    // Dense and iterative solvers are compared on roughly one small sample in twenty.
    wopts.cross_check = op.dim() <= wopts.solver.dense_cap && seed % 20 == 0;
    out.pairs = eigenpairs_in_window(op, 0.0, model.eta, wopts);
    out.lowest_eigenvalue = lowest_eigensystem(op.matrix, 1).values[0];

    constexpr std::int64_t inner_radius = 8;
    std::map<LatticePoint, FiniteVolumeOperator> inner_ops;
    for (const auto& pair : out.pairs) {
      auto line = eigen_report_line(op.grid, pair, tail_radii);
      line["sample_idx"] = sample_index;
      line["seed"] = seed;
      const auto& x = pair.primary_center();

      if (box_radius >= inner_radius) {
        std::vector<std::int64_t> u(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
          u[i] = std::clamp(x[i], -(box_radius - inner_radius), box_radius - inner_radius);
        }
        const LatticePoint uc(model.N, model.d, u);
        const MultiCube inner{uc, inner_radius};
        if (cube_regions(inner).interior.contains_cell(x)) {
          auto it = inner_ops.find(uc);
          if (it == inner_ops.end()) it = inner_ops.emplace(uc, assemble(inner, field, model)).first;
          const auto edi = edi_check(op, pair, it->second, x);
          if (edi.skipped) {
            ++out.edi_skipped;
          } else {
            ++out.edi_evaluated;
            if (std::isfinite(edi.ratio)) out.edi_max_ratio = std::max(out.edi_max_ratio, edi.ratio);
            line["edi_ratio"] = std::isfinite(edi.ratio) ? nlohmann::json(edi.ratio) : nlohmann::json("inf");
          }
        }
      }

      if (x.norm() + model.L0 <= box_radius) {
        const auto small = assemble(MultiCube{x, model.L0}, field, model);
        try {
          const auto v = classify_cube(small, pair.energy, model.m);
          ++out.lemma_checked;
          if (v.verdict == Verdict::Singular) ++out.lemma_singular;
          line["center_cube_verdict"] = to_string(v.verdict);
        } catch (const ResonantEnergy&) {
          line["center_cube_verdict"] = "R";
        }
      }
      out.lines.push_back(std::move(line));
    }
  } catch (const std::exception& e) {
    out.pairs.clear();
    out.lines.clear();
    out.error = e.what();
  }
  return out;
}

MomentSample moment_sample(const ModelConfig& model, const std::vector<std::int64_t>& radii,
                           std::int64_t K_radius, std::size_t t_samples, double t_max,
                           const ScaleSequence& scales, std::uint64_t seed,
                           std::size_t sample_index) {
  MomentSample out;
  out.sample_index = sample_index;
  out.seed = seed;
  try {
    if (radii.empty()) return out;
    const auto largest = *std::max_element(radii.begin(), radii.end());
    const auto field = sample_field(
        seed, required_field_region(origin_cube(model, largest), model.bump.r1), model.v);
    const auto obs = MomentObservable::make(model.Q, origin_cube(model, K_radius), model.eta, model);
    for (auto R : radii) {
      if (K_radius > R) throw std::invalid_argument("moment: K is larger than the box");
      const auto op = assemble(origin_cube(model, R), field, model);
      const auto pairs = eigenpairs_in_window(op, 0.0, model.eta);
      const auto cb = correlator_bound(op, pairs, obs);
      MomentPoint p;
      p.box_radius = R;
      p.n_pairs = pairs.size();
      p.bound = cb.bound;
      p.annuli = annular_decomposition_report(cb.rows, scales, model.N, model.m);
      std::mt19937_64 rng(mix_seed(seed, static_cast<std::uint64_t>(R)));
      for (std::size_t s = 0; s < t_samples; ++s) {
        const double t = t_max * unit_uniform(rng);
        const double value = moment_at(op.grid, pairs, obs, TimePhase{t});
        if (value > cb.bound * (1.0 + 1e-12) + 1e-14) ++p.violations;
        p.sampled.emplace_back(t, value);
      }
      out.points.push_back(std::move(p));
    }
  } catch (const std::exception& e) {
    out.points.clear();
    out.error = e.what();
  }
  return out;
}

nlohmann::json to_json_line(const MomentSample& sample, const MomentPoint& point, double Q,
                            double eta, std::int64_t K_radius) {
  nlohmann::json j;
  j["L"] = point.box_radius;
  j["sample_idx"] = sample.sample_index;
  j["seed"] = sample.seed;
  j["Q"] = Q;
  j["eta"] = eta;
  j["K"] = {{"center", "origin"}, {"radius", K_radius}};
  j["n_pairs"] = point.n_pairs;
  j["bound"] = point.bound;
  j["per_annulus"] = point.annuli;
  j["annuli_decaying"] = point.annuli.decaying();
  auto& st = j["sampled_t"] = nlohmann::json::array();
  for (const auto& [t, v] : point.sampled) st.push_back({{"t", t}, {"value", v}});
  j["domination_violations"] = point.violations;
  return j;
}

RunResult run(const ExperimentConfig& config_in, const RunOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig c = config_in;
  if (options.pipeline) c.pipeline = *options.pipeline;
  RunResult result;
  result.out_dir = options.out_dir.value_or(fs::path(c.out_dir));
  const nlohmann::json echoed = config_to_json(c);

  RunManifest& m = result.manifest;
  m.config_hash = hex64(fnv1a64(echoed.dump()));
  m.version = software_version();
  m.pipeline = to_string(c.pipeline);
  m.master_seed = c.master_seed;
  for (std::size_t i = 0; i < c.n_samples; ++i) m.sample_seeds.push_back(sample_seed(c.master_seed, i));
  m.workers = std::max<std::size_t>(1, options.workers);
  m.out_dir = result.out_dir.string();
  m.started_utc = utc_now();

  auto finish = [&](int code) {
    m.exit_code = code;
    result.exit_code = code;
    m.elapsed_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (fs::is_directory(result.out_dir)) {
      std::ofstream mf(result.out_dir / "manifest.json", std::ios::binary | std::ios::trunc);
      mf << nlohmann::json(m).dump(2) << '\n';
    }
    return result;
  };

  std::error_code ec;
  fs::create_directories(result.out_dir, ec);
  if (ec) {
    result.error = {{"error", "cannot create output directory"}, {"path", result.out_dir.string()}};
    return finish(kExitFailure);
  }
  ArtifactWriter writer(result.out_dir);
  Quarantine quarantine;
  auto timed = [&](const std::string& stage, auto&& body) {
    const auto s0 = std::chrono::steady_clock::now();
    body();
    m.stage_seconds[stage] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - s0).count();
  };

  try {
    writer.write("config.json", echoed.dump(2) + "\n");
    const auto validation = validate_assumptions(c.model);
    const bool all = c.pipeline == Pipeline::Full;
    if (all || c.pipeline == Pipeline::Validate || !validation.all_passed()) {
      writer.write("validation.json", nlohmann::json(validation).dump(2) + "\n");
    }
    if (!validation.all_passed() && !options.allow_invalid) {
      nlohmann::json failed = nlohmann::json::array();
      for (const auto& chk : validation.checks) {
        if (!chk.passed) failed.push_back({{"name", chk.name}, {"detail", chk.detail}});
      }
      result.error = {{"error", "assumption validation failed"}, {"failed", failed}};
      m.digests = writer.digests();
      return finish(kExitInvalidConfig);
    }
    const std::size_t w = m.workers;
    if (all || c.pipeline == Pipeline::Classify) {
      timed("classify", [&] { writer.write("classify.csv", run_classify(c, w, quarantine)); });
    }
    if (all || c.pipeline == Pipeline::Survey) {
      timed("survey", [&] {
        auto [csv, summary] = run_survey(c, w, quarantine);
        writer.write("survey.csv", csv);
        writer.write("survey_summary.json", summary);
      });
    }
    if (all || c.pipeline == Pipeline::Spectral) {
      timed("spectral", [&] {
        auto outs = run_spectral(c, w, quarantine);
        writer.write("eigen_report.jsonl", outs.report);
        writer.write("spectral_samples.csv", outs.samples_csv);
        writer.write("spectral_summary.json", outs.summary);
      });
    }
    if (all || c.pipeline == Pipeline::Moment) {
      timed("moment", [&] {
        auto [lines, summary] = run_moment(c, w, quarantine);
        writer.write("moment.jsonl", lines);
        writer.write("moment_summary.json", summary);
      });
    }
    writer.write("quarantine.json", quarantine.entries.dump(2) + "\n");
  } catch (const ConfigError& e) {
    result.error = {{"error", "invalid config"}, {"detail", e.what()}};
    m.digests = writer.digests();
    return finish(kExitInvalidConfig);
  } catch (const std::exception& e) {
    result.error = {{"error", "run failed"}, {"detail", e.what()}};
    m.digests = writer.digests();
    return finish(kExitFailure);
  }
  m.digests = writer.digests();
  m.attempted = quarantine.attempted;
  m.quarantined = quarantine.entries.size();
  int code = kExitOk;
  if (m.attempted > 0 &&
      static_cast<double>(m.quarantined) > c.quarantine_limit * static_cast<double>(m.attempted)) {
    result.error = {{"error", "quarantine limit exceeded"},
                    {"quarantined", m.quarantined},
                    {"attempted", m.attempted}};
    code = kExitQuarantine;
  }
  return finish(code);
}

}  // namespace mpal::lab
