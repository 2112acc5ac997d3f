#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "mpal/spectral.hpp"

using namespace mpal;

namespace {

ModelConfig model(int N, int n, double v = 10.0) {
  ModelConfig m;
  m.N = N;
  m.d = 1;
  m.grid_inverse_step = n;
  m.v = v;
  return m;
}

FiniteVolumeOperator op_for(int N, std::int64_t L, int n, std::uint64_t seed, double c = -1.0,
                            double v = 10.0) {
  const auto m = model(N, n, v);
  const MultiCube cube{LatticePoint::origin(N, 1), L};
  const auto region = required_field_region(cube, m.bump.r1);
  return assemble(cube, c < 0 ? sample_field(seed, region, v) : constant_field(region, c, v), m);
}

LatticePoint p2(std::int64_t a, std::int64_t b) { return LatticePoint(2, 1, {a, b}); }

EigenPair synthetic(std::int64_t cube_radius, std::int64_t ball, auto norm_of) {
  EigenPair pair;
  pair.cube_radius = cube_radius;
  for (const auto& w : lattice_ball(p2(0, 0), ball)) pair.cell_norms.push_back({w, norm_of(w)});
  pair.centers = localization_centers(pair.cell_norms);
  return pair;
}

}  // namespace

TEST_CASE("window of the free chain holds the analytic eigenvalues") {
  const auto op = op_for(1, 3, 1, 0, 0.0);
  const auto pairs = eigenpairs_in_window(op, 0.0, 0.3);
  REQUIRE(pairs.size() == 1);
  CHECK(std::abs(pairs[0].energy - (1.0 - std::cos(std::numbers::pi / 6))) < 1e-10);
  const auto all = eigenpairs_in_window(op, 0.0, 2.0);
  REQUIRE(all.size() == 5);
  for (int k = 1; k <= 5; ++k) CHECK(std::abs(all[k - 1].energy - (1.0 - std::cos(k * std::numbers::pi / 6))) < 1e-10);
  CHECK(eigenpairs_in_window(op, -2.0, -1.0).empty());
}

TEST_CASE("iterative window solver matches the dense oracle") {
  const auto op = op_for(2, 5, 2, 31, -1.0, 1.0);  // dim 361
  REQUIRE(op.dim() <= 500);
  WindowOptions dense;
  WindowOptions iter;
  iter.solver.dense_cap = 0;
  const double lo = 2.0, hi = 3.0;
  const auto a = eigenpairs_in_window(op, lo, hi, dense);
  const auto b = eigenpairs_in_window(op, lo, hi, iter);
  REQUIRE(a.size() == b.size());
  REQUIRE(a.size() > 0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(std::abs(a[i].energy - b[i].energy) < 1e-8);
    const double s = a[i].vector.dot(b[i].vector) < 0 ? -1.0 : 1.0;
    // Clustered eigenvalues leave the basis free; compare only isolated ones.
    const bool isolated = (i == 0 || a[i].energy - a[i - 1].energy > 1e-6) &&
                          (i + 1 == a.size() || a[i + 1].energy - a[i].energy > 1e-6);
    if (isolated) CHECK((a[i].vector - s * b[i].vector).cwiseAbs().maxCoeff() < 1e-6);
  }
  WindowOptions cross;
  cross.cross_check = true;
  CHECK_NOTHROW(eigenpairs_in_window(op, lo, hi, cross));
}

TEST_CASE("eigenpair invariants: Parseval, residual, orthogonality") {
  const auto op = op_for(2, 4, 2, 8, -1.0, 1.0);
  const auto pairs = eigenpairs_in_window(op, 0.0, 3.0);
  REQUIRE(pairs.size() > 2);
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    CHECK(std::abs(p.vector.norm() - 1.0) < 1e-10);
    double parseval = 0.0;
    for (const auto& c : p.cell_norms) parseval += c.norm * c.norm;
    CHECK(std::abs(parseval - 1.0) < 1e-10);
    CHECK((op.matrix * p.vector - p.energy * p.vector).norm() <= 1e-8 * (1 + std::abs(p.energy)));
    for (std::size_t j = 0; j < i; ++j) CHECK(std::abs(p.vector.dot(pairs[j].vector)) <= 1e-8);
  }
}

TEST_CASE("localization centers") {
  std::vector<CellNorm> single{{p2(2, 0), 1.0}, {p2(0, 0), 0.0}, {p2(1, 1), 0.0}};
  CHECK(localization_centers(single) == std::vector<LatticePoint>{p2(2, 0)});

  std::vector<CellNorm> twin{{p2(1, 2), std::sqrt(0.5)}, {p2(-1, -2), std::sqrt(0.5)}, {p2(0, 0), 0.0}};
  const auto c = localization_centers(twin);
  REQUIRE(c.size() == 2);
  CHECK(c[0] == p2(-1, -2));
  CHECK(c[1] == p2(1, 2));

  std::vector<CellNorm> near_tie{{p2(3, 0), 0.5}, {p2(1, 0), 0.5 - 1e-13}, {p2(0, 0), 0.4}};
  CHECK(localization_centers(near_tie) == std::vector<LatticePoint>{p2(1, 0), p2(3, 0)});
}

TEST_CASE("strong-disorder ground state: center is the brute-force argmax, sign invariant") {
  const auto op = op_for(2, 4, 2, 77);
  const auto pairs = eigenpairs_in_window(op, 0.0, 100.0);
  const auto& g = pairs.front();
  std::map<LatticePoint, double> sq;
  for (std::size_t r = 0; r < op.dim(); ++r) sq[half_open_cell_of(op.grid, r)] += g.vector[r] * g.vector[r];
  auto best = std::max_element(sq.begin(), sq.end(), [](auto& a, auto& b) { return a.second < b.second; });
  CHECK(g.primary_center() == best->first);
  const auto flipped = half_open_cell_norms(op.grid, -g.vector);
  CHECK(localization_centers(flipped) == g.centers);
}

TEST_CASE("degenerate eigenvalues share a cluster id") {
  // Two non-interacting particles in a symmetric free box: E(a,b) = E(b,a).
  auto m = model(2, 1);
  m.interaction.u0 = 0.0;
  const MultiCube cube{LatticePoint::origin(2, 1), 3};
  const auto op = assemble(cube, constant_field(required_field_region(cube, 1.0), 0.0, 1.0), m);
  const auto pairs = eigenpairs_in_window(op, 0.0, 10.0);
  REQUIRE(pairs.size() == 25);
  CHECK(pairs[0].cluster == 0);
  CHECK(pairs[1].cluster == pairs[2].cluster);  // E(1,2) = E(2,1)
  CHECK(pairs[1].cluster == 1);
}

TEST_CASE("decay fit") {
  const auto exact = synthetic(12, 10, [](const LatticePoint& w) { return std::exp(-0.5 * static_cast<double>(w.norm())); });
  const auto fit = decay_fit(exact);
  REQUIRE(fit.fitted);
  CHECK(std::abs(fit.mass - 0.5) < 1e-10);
  CHECK(fit.r_min == 2);
  CHECK(fit.r_max == 10);
  CHECK(fit.residual < 1e-10);

  const auto flat = synthetic(12, 10, [](const LatticePoint&) { return 0.1; });
  CHECK(flat.primary_center() == p2(0, 0));
  const auto ff = decay_fit(flat);
  REQUIRE(ff.fitted);
  CHECK(std::abs(ff.mass) < 1e-12);

  const auto few = synthetic(6, 4, [](const LatticePoint& w) { return std::exp(-static_cast<double>(w.norm())); });
  CHECK_FALSE(decay_fit(few).fitted);  // shells 2..4 only
}

TEST_CASE("mass concentration and center counting") {
  const auto op = op_for(2, 3, 2, 5);
  const auto pairs = eigenpairs_in_window(op, 0.0, 100.0);
  const auto& p = pairs.front();
  CHECK(mass_concentration(op.grid, p, 3.0) == 0.0);
  CHECK(mass_concentration(op.grid, p, 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  const double mid = mass_concentration(op.grid, p, 1.5);
  CHECK((mid >= 0.0 && mid <= 1.0));

  CHECK(center_count({}, 5) == 0);
  EigenPair at_origin;
  at_origin.centers = {p2(0, 0)};
  CHECK(center_count(std::vector<EigenPair>(7, at_origin), 1) == 7);
  EigenPair away;
  away.centers = {p2(3, 0)};
  CHECK(center_count({at_origin, away}, 2) == 1);

  CHECK(loglog_slope({1, 2, 4}, {3, 12, 48}) == doctest::Approx(2.0));
  CHECK(std::isnan(loglog_slope({1}, {1})));
}

TEST_CASE("EDI check") {
  auto m = model(1, 1);
  const MultiCube big{LatticePoint::origin(1, 1), 20};
  const auto field = sample_field(3, required_field_region(big, 1.0), 10.0);
  const auto op = assemble(big, field, m);
  const MultiCube inner_cube{LatticePoint(1, 1, {-10}), 8};
  const auto inner = assemble(inner_cube, field, m);

  EigenPair outside;
  outside.energy = 0.3;
  outside.vector = Eigen::VectorXd::Zero(op.dim());
  const std::int64_t tick[] = {10};
  outside.vector[*op.grid.row_of_ticks(tick)] = 1.0;
  const auto r = edi_check(op, outside, inner, LatticePoint(1, 1, {-10}));
  CHECK_FALSE(r.skipped);
  CHECK(r.lhs == 0.0);
  CHECK(r.ratio == 0.0);

  CHECK_THROWS_AS(edi_check(op, outside, inner, LatticePoint(1, 1, {-12})), std::invalid_argument);
  const auto small = assemble({LatticePoint(1, 1, {-10}), 7}, field, m);
  CHECK_THROWS_AS(edi_check(op, outside, small, LatticePoint(1, 1, {-10})), std::invalid_argument);

  // Real eigenfunctions: a finite ratio whenever the inner energy is not resonant.
  const auto pairs = eigenpairs_in_window(op, 0.0, 100.0);
  std::size_t evaluated = 0;
  for (std::size_t k = 0; k < 10; ++k) {
    const auto e = edi_check(op, pairs[k], inner, LatticePoint(1, 1, {-10}));
    if (e.skipped) continue;
    ++evaluated;
    CHECK(std::isfinite(e.ratio));
    CHECK(e.rhs_core == doctest::Approx(e.green_norm * e.outer_mass));
  }
  CHECK(evaluated > 0);
}

TEST_CASE("eigen report line") {
  const auto op = op_for(2, 3, 2, 5);
  const auto pairs = eigenpairs_in_window(op, 0.0, 100.0);
  const auto j = eigen_report_line(op.grid, pairs.front(), {1, 2});
  for (const char* key : {"E_n", "center", "n_centers", "m_hat", "tail_mass_by_R"}) CHECK(j.contains(key));
  CHECK(j["tail_mass_by_R"].contains("1"));
  CHECK(j["center"].size() == 2);
}
