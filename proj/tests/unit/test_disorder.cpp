#include <doctest.h>

#include <stdexcept>

#include <algorithm>
#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "mpal/disorder.hpp"

using namespace mpal;

namespace {

LatticeBox box1(std::int64_t lo, std::int64_t hi) { return LatticeBox{{lo}, {hi}}; }

}  // namespace

TEST_CASE("sample_field: range, mean and determinism") {
  const auto region = box1(0, 99999);
  const auto f = sample_field(42, region, 1.0);
  REQUIRE(f.amplitudes.size() == 100000);
  double mean = 0.0;
  for (double a : f.amplitudes) {
    CHECK_MESSAGE((a >= 0.0 && a <= 1.0), a);
    mean += a;
  }
  mean /= 1e5;
  CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
  const auto g = sample_field(42, region, 1.0);
  CHECK(f == g);
  CHECK_FALSE(sample_field(43, region, 1.0) == f);
  CHECK_THROWS_AS(sample_field(1, region, 0.0), std::invalid_argument);
}

TEST_CASE("sample_field: empirical CDF gap within eps/v plus sampling error") {
  const double v = 2.0;
  auto a = sample_field(7, box1(0, 99999), v).amplitudes;
  std::sort(a.begin(), a.end());
  const double n = static_cast<double>(a.size());
  // DKW at 99.9%: sup |F_hat - F| <= sqrt(ln(2/0.001)/(2n)) ~ 0.0062, applied twice.
  const double slack = 2.0 * std::sqrt(std::log(2.0 / 0.001) / (2.0 * n));
  for (double eps : {0.1, 0.01}) {
    double gap = 0.0;
    for (std::size_t i = 0; i < a.size(); i += 97) {
      const double y = a[i];
      const auto hi = std::upper_bound(a.begin(), a.end(), y + eps) - a.begin();
      const auto lo = std::upper_bound(a.begin(), a.end(), y) - a.begin();
      gap = std::max(gap, static_cast<double>(hi - lo) / n);
    }
    CHECK(gap <= eps / v + slack);
  }
}

TEST_CASE("field JSON round-trip is bit exact") {
  const auto f = sample_field(99, LatticeBox{{-2, -1}, {3, 4}}, 10.0);
  const nlohmann::json j = f;
  const auto back = nlohmann::json::parse(j.dump()).get<AlloyField>();
  CHECK(back == f);
}

TEST_CASE("single_potential examples") {
  const BumpFunction bump;
  const auto region = box1(-5, 5);
  const auto zero = constant_field(region, 0.0, 1.0);
  for (double x : {-3.2, 0.0, 0.5, 2.49}) CHECK(single_potential(std::span<const double>(&x, 1), zero, bump) == 0.0);

  auto f = constant_field(region, 0.0, 1.0);
  const std::int64_t origin[] = {0};
  f.amplitudes[region.offset(origin)] = 0.7;
  double x = 0.3;
  CHECK(single_potential(std::span<const double>(&x, 1), f, bump) == 0.7);
  // Half-integer ties go to the smaller site.
  x = 0.5;
  CHECK(single_potential(std::span<const double>(&x, 1), f, bump) == 0.7);
  x = -0.5;
  CHECK(single_potential(std::span<const double>(&x, 1), f, bump) == 0.0);
  x = 7.0;
  CHECK_THROWS_AS(single_potential(std::span<const double>(&x, 1), f, bump), std::out_of_range);
}

TEST_CASE("literal bump and representative") {
  const BumpFunction bump;
  const double edge[] = {0.5, -0.5};
  CHECK(bump.value(edge) == 1.0);
  CHECK(bump.cell_value(edge) == 0.0);
  const double inside[] = {0.5, 0.25};
  CHECK(bump.cell_value(inside) == 1.0);
  CHECK(bump.support_diameter() == 1.0);
}

TEST_CASE("covering condition (E5) is exact for the default bump, d <= 2, L <= 6") {
  const BumpFunction bump;
  for (int d = 1; d <= 2; ++d) {
    for (std::int64_t L = 1; L <= 6; ++L) {
      CHECK(covering_violations(bump, d, L, 1) == 0);
      CHECK(covering_violations(bump, d, L, 2) == 0);
    }
  }
  // Grids finer than 1/2 place nodes within 1/2 of the cube edge but beyond the last site's bump.
  CHECK(covering_violations(bump, 1, 3, 3) > 0);
}

TEST_CASE("interaction_energy examples") {
  InteractionSpec spec{1.0, 5.0, 0.0};
  const double close[] = {0.0, 0.5};
  CHECK(interaction_energy(close, 1, spec) == 5.0);
  const double far[] = {0.0, 3.0};
  CHECK(interaction_energy(far, 1, spec) == 0.0);
  const double edge[] = {0.0, 1.0};
  CHECK(interaction_energy(edge, 1, spec) == 5.0);
  CHECK(spec.upper_bound(3) == 15.0);
}

TEST_CASE("interaction decomposes across separated sub-configurations") {
  InteractionSpec spec{1.0, 2.0, 0.5};
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  std::size_t tested = 0;
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(3 * 2);
    for (auto& c : x) c = u(rng);
    for (std::uint32_t m = 1; m < 7; ++m) {
      const PartitionIndex J(3, m);
      if (!(subconfiguration_distance(x, 2, J) > spec.r0)) continue;
      ++tested;
      const auto a = subconfiguration(x, 2, J);
      const auto b = subconfiguration(x, 2, J.complement());
      CHECK(interaction_energy(x, 2, spec) - interaction_energy(a, 2, spec) - interaction_energy(b, 2, spec) ==
            doctest::Approx(0.0).epsilon(1e-15));
    }
  }
  CHECK(tested > 100);
}

TEST_CASE("total_potential examples and monotone coupling") {
  const BumpFunction bump;
  InteractionSpec none{1.0, 0.0, 0.0};
  const auto region = box1(-3, 3);
  const double x0[] = {0.1, 1.2};
  CHECK(total_potential(x0, 1, constant_field(region, 0.0, 1.0), bump, none) == 0.0);

  auto f = constant_field(region, 0.0, 1.0);
  const std::int64_t s0[] = {0}, s1[] = {1};
  f.amplitudes[region.offset(s0)] = 0.3;
  f.amplitudes[region.offset(s1)] = 0.4;
  InteractionSpec strong{1.0, 5.0, 0.0};
  const double x[] = {0.2, 0.9};
  CHECK(total_potential(x, 1, f, bump, strong) == doctest::Approx(5.7).epsilon(1e-15));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.4, 2.4);
  const auto g = sample_field(17, region, 1.0);
  auto h = g;
  for (auto& a : h.amplitudes) a += 0.25;
  for (int t = 0; t < 1000; ++t) {
    const double y[] = {u(rng), u(rng)};
    const double tp = total_potential(y, 1, g, bump, strong);
    CHECK(tp >= interaction_energy(y, 1, strong));
    CHECK(interaction_energy(y, 1, strong) >= 0.0);
    CHECK(total_potential(y, 1, h, bump, strong) >= tp);
  }
}

TEST_CASE("validate_assumptions") {
  const ModelConfig def;
  const auto ok = validate_assumptions(def);
  CHECK(ok.all_passed());

  ModelConfig wide = def;
  wide.bump.radius = 1.5;  // support diameter 3, declared r1 = 1
  const auto bad = validate_assumptions(wide);
  CHECK_FALSE(bad.at("E4").passed);

  ModelConfig low_p = def;
  low_p.p = 5.0;  // 10 <= 10.5
  CHECK_FALSE(validate_assumptions(low_p).at("moment_condition").passed);
  CHECK_FALSE(low_p.moment_condition_holds());

  ModelConfig fine = def;
  fine.grid_inverse_step = 3;
  CHECK_FALSE(validate_assumptions(fine).at("E5").passed);
}
