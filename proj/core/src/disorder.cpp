#include "mpal/disorder.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace mpal {

std::size_t LatticeBox::site_count() const {
  if (lo.size() != hi.size()) throw std::invalid_argument("LatticeBox: lo/hi size mismatch");
  std::size_t n = 1;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (hi[i] < lo[i]) return 0;
    n *= static_cast<std::size_t>(hi[i] - lo[i] + 1);
  }
  return n;
}

bool LatticeBox::contains(std::span<const std::int64_t> site) const {
  if (site.size() != lo.size()) return false;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    if (site[i] < lo[i] || site[i] > hi[i]) return false;
  }
  return true;
}

std::size_t LatticeBox::offset(std::span<const std::int64_t> site) const {
  std::size_t off = 0;
  for (std::size_t i = 0; i < lo.size(); ++i) {
    off = off * static_cast<std::size_t>(hi[i] - lo[i] + 1) +
          static_cast<std::size_t>(site[i] - lo[i]);
  }
  return off;
}

double AlloyField::amplitude(std::span<const std::int64_t> site) const {
  if (!region.contains(site)) throw std::out_of_range("AlloyField: site outside sampled region");
  return amplitudes[region.offset(site)];
}

AlloyField sample_field(std::uint64_t seed, const LatticeBox& region, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) throw std::invalid_argument("sample_field: v must be > 0");
  const auto count = region.site_count();
  if (region.dim() < 1 || count == 0) throw std::invalid_argument("sample_field: empty region");
  AlloyField field{region, std::vector<double>(count), seed, v};
  // mt19937_64 output is fixed by the standard; the 53-bit conversion keeps the
  // amplitudes identical across standard libraries.
  std::mt19937_64 rng(seed);
  for (auto& a : field.amplitudes) {
    a = v * (static_cast<double>(rng() >> 11) * 0x1.0p-53);
  }
  return field;
}

AlloyField constant_field(const LatticeBox& region, double value, double v) {
  const auto count = region.site_count();
  if (region.dim() < 1 || count == 0) throw std::invalid_argument("constant_field: empty region");
  return AlloyField{region, std::vector<double>(count, value), 0, v};
}

void to_json(nlohmann::json& j, const AlloyField& field) {
  nlohmann::json region = nlohmann::json::array();
  for (int i = 0; i < field.region.dim(); ++i) {
    region.push_back({field.region.lo[static_cast<std::size_t>(i)],
                      field.region.hi[static_cast<std::size_t>(i)]});
  }
  j = nlohmann::json{{"seed", field.seed},
                     {"v", field.v},
                     {"region", region},
                     {"amplitudes", field.amplitudes}};
}

void from_json(const nlohmann::json& j, AlloyField& field) {
  field.seed = j.at("seed").get<std::uint64_t>();
  field.v = j.at("v").get<double>();
  field.region.lo.clear();
  field.region.hi.clear();
  for (const auto& axis : j.at("region")) {
    field.region.lo.push_back(axis.at(0).get<std::int64_t>());
    field.region.hi.push_back(axis.at(1).get<std::int64_t>());
  }
  field.amplitudes = j.at("amplitudes").get<std::vector<double>>();
  if (field.amplitudes.size() != field.region.site_count()) {
    throw std::invalid_argument("AlloyField JSON: amplitude count does not match region");
  }
}

double BumpFunction::value(std::span<const double> z) const {
  for (double c : z) {
    if (std::abs(c) > radius) return 0.0;
  }
  return height;
}

double BumpFunction::cell_value(std::span<const double> z) const {
  for (double c : z) {
    if (!(c > -radius && c <= radius)) return 0.0;
  }
  return height;
}

double InteractionSpec::upper_bound(int particles) const {
  const double l = particles;
  return u0 * l * (l - 1) / 2.0 + u3 * l * (l - 1) * (l - 2) / 6.0;
}

bool ModelConfig::moment_condition_holds() const {
  return 2.0 * p > 3.0 * N * d * alpha + alpha * Q;
}

void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{
      {"N", c.N},
      {"d", c.d},
      {"v", c.v},
      {"interaction", {{"r0", c.interaction.r0}, {"u0", c.interaction.u0}, {"u3", c.interaction.u3}}},
      {"bump", {{"radius", c.bump.radius}, {"height", c.bump.height}, {"r1", c.bump.r1}}},
      {"grid_inverse_step", c.grid_inverse_step},
      {"eta", c.eta},
      {"m", c.m},
      {"p", c.p},
      {"Q", c.Q},
      {"L0", c.L0}};
}

void from_json(const nlohmann::json& j, ModelConfig& c) {
  const ModelConfig def;
  c.N = j.value("N", def.N);
  c.d = j.value("d", def.d);
  c.v = j.value("v", def.v);
  if (j.contains("interaction")) {
    const auto& u = j.at("interaction");
    c.interaction.r0 = u.value("r0", def.interaction.r0);
    c.interaction.u0 = u.value("u0", def.interaction.u0);
    c.interaction.u3 = u.value("u3", def.interaction.u3);
  }
  if (j.contains("bump")) {
    const auto& b = j.at("bump");
    c.bump.radius = b.value("radius", def.bump.radius);
    c.bump.height = b.value("height", def.bump.height);
    c.bump.r1 = b.value("r1", def.bump.r1);
  }
  c.grid_inverse_step = j.value("grid_inverse_step", def.grid_inverse_step);
  c.eta = j.value("eta", def.eta);
  c.m = j.value("m", def.m);
  c.p = j.value("p", def.p);
  c.Q = j.value("Q", def.Q);
  c.L0 = j.value("L0", def.L0);
}

double single_potential(std::span<const double> x, const AlloyField& field,
                        const BumpFunction& bump) {
  const auto d = x.size();
  if (static_cast<int>(d) != field.region.dim()) {
    throw std::invalid_argument("single_potential: dimension mismatch");
  }
  // Sites with -r < x_i - s_i <= r on every axis.
  std::vector<std::int64_t> first(d), last(d);
  for (std::size_t i = 0; i < d; ++i) {
    first[i] = static_cast<std::int64_t>(std::ceil(x[i] - bump.radius));
    last[i] = static_cast<std::int64_t>(std::ceil(x[i] + bump.radius)) - 1;
    if (last[i] < first[i]) return 0.0;
  }
  std::vector<std::int64_t> site = first;
  std::vector<double> offset(d);
  double total = 0.0;
  while (true) {
    for (std::size_t i = 0; i < d; ++i) offset[i] = x[i] - static_cast<double>(site[i]);
    const double phi = bump.cell_value(offset);
    if (phi != 0.0) {
      if (!field.region.contains(site)) {
        throw std::out_of_range("single_potential: point not covered by the field region");
      }
      total += field.amplitudes[field.region.offset(site)] * phi;
    }
    std::size_t pos = d;
    bool done = true;
    while (pos-- > 0) {
      if (++site[pos] <= last[pos]) {
        done = false;
        break;
      }
      site[pos] = first[pos];
    }
    if (done) break;
  }
  return total;
}

namespace {

double particle_distance(std::span<const double> x, int dim, int i, int j) {
  double r = 0.0;
  for (int a = 0; a < dim; ++a) {
    r = std::max(r, std::abs(x[static_cast<std::size_t>(i * dim + a)] -
                             x[static_cast<std::size_t>(j * dim + a)]));
  }
  return r;
}

}  // namespace

double interaction_energy(std::span<const double> x, int dim, const InteractionSpec& spec) {
  if (dim < 1 || x.size() % static_cast<std::size_t>(dim) != 0) {
    throw std::invalid_argument("interaction_energy: bad configuration size");
  }
  const int l = static_cast<int>(x.size()) / dim;
  double total = 0.0;
  for (int i = 0; i < l; ++i) {
    for (int j = i + 1; j < l; ++j) {
      const bool ij = particle_distance(x, dim, i, j) <= spec.r0;
      if (ij) total += spec.u0;
      if (spec.u3 == 0.0 || !ij) continue;
      for (int k = j + 1; k < l; ++k) {
        if (particle_distance(x, dim, i, k) <= spec.r0 &&
            particle_distance(x, dim, j, k) <= spec.r0) {
          total += spec.u3;
        }
      }
    }
  }
  return total;
}

double total_potential(std::span<const double> x, int dim, const AlloyField& field,
                       const BumpFunction& bump, const InteractionSpec& spec) {
  double total = interaction_energy(x, dim, spec);
  const auto l = x.size() / static_cast<std::size_t>(dim);
  for (std::size_t j = 0; j < l; ++j) {
    total += single_potential(x.subspan(j * static_cast<std::size_t>(dim),
                                        static_cast<std::size_t>(dim)),
                              field, bump);
  }
  return total;
}

double subconfiguration_distance(std::span<const double> x, int dim, const PartitionIndex& J) {
  double rho = std::numeric_limits<double>::infinity();
  for (int i = 0; i < J.particles(); ++i) {
    if (!J.contains(i)) continue;
    for (int j = 0; j < J.particles(); ++j) {
      if (J.contains(j)) continue;
      rho = std::min(rho, particle_distance(x, dim, i, j));
    }
  }
  return rho;
}

std::vector<double> subconfiguration(std::span<const double> x, int dim, const PartitionIndex& J) {
  std::vector<double> out;
  for (int j = 0; j < J.particles(); ++j) {
    if (!J.contains(j)) continue;
    const auto p = x.subspan(static_cast<std::size_t>(j * dim), static_cast<std::size_t>(dim));
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

bool ValidationReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& c) { return c.passed; });
}

const AssumptionCheck& ValidationReport::at(const std::string& name) const {
  for (const auto& c : checks) {
    if (c.name == name) return c;
  }
  throw std::out_of_range("ValidationReport: no check named " + name);
}

void to_json(nlohmann::json& j, const ValidationReport& report) {
  j = nlohmann::json::object();
  j["all_passed"] = report.all_passed();
  auto& arr = j["checks"] = nlohmann::json::array();
  for (const auto& c : report.checks) {
    arr.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
}

std::size_t covering_violations(const BumpFunction& bump, int dim, std::int64_t L,
                                int grid_inverse_step) {
  if (dim < 1 || L < 1 || grid_inverse_step < 1) {
    throw std::invalid_argument("covering_violations: bad arguments");
  }
  const std::int64_t n = grid_inverse_step;
  const std::int64_t span = L * n - 1;  // nodes i/n with |i| < L n
  const double reach = bump.radius * static_cast<double>(n);
  // The bump factorizes over axes, so sum_s phi(x - s) = height * prod_axis count(i_axis).
  std::vector<std::int64_t> counts;
  counts.reserve(static_cast<std::size_t>(2 * span + 1));
  for (std::int64_t i = -span; i <= span; ++i) {
    std::int64_t c = 0;
    for (std::int64_t s = -(L - 1); s <= L - 1; ++s) {
      if (static_cast<double>(std::abs(i - s * n)) <= reach) ++c;
    }
    counts.push_back(c);
  }
  std::size_t violations = 0;
  std::vector<std::size_t> idx(static_cast<std::size_t>(dim), 0);
  const std::size_t per_axis = counts.size();
  while (true) {
    double sum = bump.height;
    for (auto k : idx) sum *= static_cast<double>(counts[k]);
    if (sum < 1.0) ++violations;
    std::size_t pos = idx.size();
    bool done = true;
    while (pos-- > 0) {
      if (++idx[pos] < per_axis) {
        done = false;
        break;
      }
      idx[pos] = 0;
    }
    if (done) break;
  }
  return violations;
}

namespace {

std::string fmt(double value) {
  std::ostringstream os;
  os.precision(6);
  os << value;
  return os.str();
}

AssumptionCheck check_interaction(const ModelConfig& c, std::mt19937_64& rng) {
  AssumptionCheck out{"E1", true, ""};
  const auto& u = c.interaction;
  if (!(u.r0 >= 0.0) || !(u.u0 >= 0.0) || !(u.u3 >= 0.0) || !std::isfinite(u.r0) ||
      !std::isfinite(u.u0) || !std::isfinite(u.u3)) {
    out.passed = false;
    out.detail = "interaction parameters must be finite and non-negative";
    return out;
  }
  const double bound = u.upper_bound(c.N);
  std::uniform_int_distribution<int> coord(-8, 8);
  std::size_t range_violations = 0, bound_violations = 0, tested_splits = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> x(static_cast<std::size_t>(c.N * c.d));
    for (auto& xi : x) xi = 0.5 * coord(rng);
    const double U = interaction_energy(x, c.d, u);
    if (U < 0.0 || U > bound) ++bound_violations;
    if (c.N < 2) continue;
    const auto mask = 1u + static_cast<std::uint32_t>(rng() % ((1u << c.N) - 2u));
    const PartitionIndex J(c.N, mask);
    if (subconfiguration_distance(x, c.d, J) > u.r0) {
      ++tested_splits;
      const double split = U - interaction_energy(subconfiguration(x, c.d, J), c.d, u) -
                           interaction_energy(subconfiguration(x, c.d, J.complement()), c.d, u);
      if (split != 0.0) ++range_violations;
    }
  }
  out.passed = range_violations == 0 && bound_violations == 0;
  out.detail = "sup U <= " + fmt(bound) + "; range splits tested " +
               std::to_string(tested_splits) + ", violations " +
               std::to_string(range_violations) + "; bound violations " +
               std::to_string(bound_violations);
  return out;
}

std::vector<double> amplitude_draws(const ModelConfig& c, std::uint64_t seed) {
  constexpr std::int64_t draws = 100000;
  return sample_field(seed, LatticeBox{{0}, {draws - 1}}, c.v).amplitudes;
}

AssumptionCheck check_amplitudes(const ModelConfig& c, const std::vector<double>& draws) {
  AssumptionCheck out{"E2", true, ""};
  const auto [mn, mx] = std::minmax_element(draws.begin(), draws.end());
  std::ostringstream detail;
  detail << "min " << *mn << ", max " << *mx << ", v " << c.v;
  out.passed = *mn >= 0.0 && *mx <= c.v;
  for (double frac : {1e-1, 1e-2, 1e-3}) {
    const double eps = frac * c.v;
    const auto hits = std::count_if(draws.begin(), draws.end(), [&](double a) { return a <= eps; });
    detail << "; P(V<=" << eps << ")~" << static_cast<double>(hits) / draws.size();
    if (hits == 0) out.passed = false;
  }
  out.detail = detail.str();
  return out;
}

AssumptionCheck check_holder(const ModelConfig& c, std::vector<double> draws) {
  AssumptionCheck out{"E3", true, ""};
  std::sort(draws.begin(), draws.end());
  const double n = static_cast<double>(draws.size());
  std::vector<double> log_eps, log_gap;
  std::ostringstream detail;
  for (double frac : {0.4, 0.2, 0.1, 0.05}) {
    const double eps = frac * std::min(1.0, c.v);
    // sup_y #{a : y < a <= y + eps} / n, attained with y + eps at a sample.
    std::size_t best = 0, lo = 0;
    for (std::size_t hi = 0; hi < draws.size(); ++hi) {
      while (draws[lo] <= draws[hi] - eps) ++lo;
      best = std::max(best, hi - lo + 1);
    }
    const double gap = static_cast<double>(best) / n;
    detail << "gap(" << eps << ")=" << gap << " ";
    log_eps.push_back(std::log(eps));
    log_gap.push_back(std::log(gap));
  }
  const double k = static_cast<double>(log_eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < log_eps.size(); ++i) {
    sx += log_eps[i], sy += log_gap[i], sxx += log_eps[i] * log_eps[i];
    sxy += log_eps[i] * log_gap[i];
  }
  const double b = (k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double a = std::exp((sy - b * sx) / k);
  detail << "fitted b=" << b << " a=" << a << " (uniform law: b=1, a=1/v=" << 1.0 / c.v << ")";
  out.passed = std::isfinite(a) && b >= 0.5;
  out.detail = detail.str();
  return out;
}

}  // namespace

ValidationReport validate_assumptions(const ModelConfig& c, std::uint64_t seed) {
  ValidationReport report;
  if (c.N < 1 || c.d < 1 || c.grid_inverse_step < 1 || !(c.v > 0.0)) {
    report.checks.push_back({"structure", false, "N, d, 1/h must be >= 1 and v > 0"});
    return report;
  }
  std::mt19937_64 rng(seed);
  report.checks.push_back(check_interaction(c, rng));

  const auto draws = amplitude_draws(c, seed);
  report.checks.push_back(check_amplitudes(c, draws));
  report.checks.push_back(check_holder(c, draws));

  {
    const auto& b = c.bump;
    const bool ok = b.radius > 0.0 && b.height >= 0.0 && std::isfinite(b.height) &&
                    b.support_diameter() <= b.r1;
    report.checks.push_back({"E4", ok,
                             "diam(supp phi) = " + fmt(b.support_diameter()) + ", r1 = " +
                                 fmt(b.r1) + ", height = " + fmt(b.height)});
  }
  {
    std::size_t violations = 0;
    for (std::int64_t L = 1; L <= 6; ++L) {
      violations += covering_violations(c.bump, c.d, L, c.grid_inverse_step);
    }
    report.checks.push_back({"E5", violations == 0,
                             "covering violations at grid nodes (h = 1/" +
                                 std::to_string(c.grid_inverse_step) +
                                 ", L = 1..6): " + std::to_string(violations)});
  }
  report.checks.push_back({"L0>=r1", static_cast<double>(c.L0) >= c.bump.r1 && c.L0 >= 2,
                           "L0 = " + std::to_string(c.L0) + ", r1 = " + fmt(c.bump.r1)});
  {
    const double rhs = 3.0 * c.N * c.d * ModelConfig::alpha + ModelConfig::alpha * c.Q;
    report.checks.push_back({"moment_condition", c.moment_condition_holds(),
                             "2p = " + fmt(2.0 * c.p) + " vs 3Nd*alpha + alpha*Q = " + fmt(rhs)});
  }
  return report;
}

}  // namespace mpal
