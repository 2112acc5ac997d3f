#include <doctest.h>

#include <stdexcept>

#include <cmath>
#include <random>

#include <nlohmann/json.hpp>

#include "mpal/dynamics.hpp"

using namespace mpal;

namespace {

struct Fixture {
  ModelConfig model;
  FiniteVolumeOperator op;
  std::vector<EigenPair> pairs;
};

// Free single particle in Λ_6 with h = 1/2: window [0, 0.5] holds k = 1, 2, 3.
Fixture free_chain(double eta = 0.5) {
  ModelConfig m;
  m.N = 1;
  m.d = 1;
  m.grid_inverse_step = 2;
  m.v = 1.0;
  const MultiCube cube{LatticePoint::origin(1, 1), 6};
  auto op = assemble(cube, constant_field(required_field_region(cube, 1.0), 0.0, 1.0), m);
  auto pairs = eigenpairs_in_window(op, 0.0, eta);
  return {m, std::move(op), std::move(pairs)};
}

Fixture random_pair_box(std::uint64_t seed) {
  ModelConfig m;
  m.v = 1.0;
  const MultiCube cube{LatticePoint::origin(2, 1), 4};
  auto op = assemble(cube, sample_field(seed, required_field_region(cube, 1.0), 1.0), m);
  auto pairs = eigenpairs_in_window(op, 0.0, 2.5);
  return {m, std::move(op), std::move(pairs)};
}

Eigen::VectorXcd random_state(std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::VectorXcd psi(static_cast<Eigen::Index>(dim));
  for (auto& z : psi) z = {g(rng), g(rng)};
  return psi / psi.norm();
}

LatticePoint p1(std::int64_t a) { return LatticePoint(1, 1, {a}); }

}  // namespace

TEST_CASE("observable validation") {
  ModelConfig m;
  const MultiCube K{LatticePoint::origin(2, 1), 1};
  CHECK_NOTHROW(MomentObservable::make(1.0, K, 0.5, m));
  CHECK_NOTHROW(MomentObservable::make(0.0, K, 0.5, m));
  CHECK_THROWS_AS(MomentObservable::make(-1.0, K, 0.5, m), std::invalid_argument);
  CHECK_THROWS_AS(MomentObservable::make(1.0, {K.center, 0}, 0.5, m), std::invalid_argument);
  CHECK_THROWS_AS(MomentObservable::make(1.0, K, 0.0, m), std::invalid_argument);
  m.p = 5.0;  // 10 < 9 + 1.5
  CHECK_THROWS_AS(MomentObservable::make(1.0, K, 0.5, m), std::invalid_argument);
}

TEST_CASE("evolution") {
  const auto f = free_chain();
  REQUIRE(f.pairs.size() == 3);
  const auto psi = random_state(f.op.dim(), 4);

  SUBCASE("t = 0 returns the projection") {
    const auto r = evolve(f.pairs, psi, 0.0);
    Eigen::VectorXcd proj = Eigen::VectorXcd::Zero(psi.size());
    for (const auto& p : f.pairs) {
      const Eigen::VectorXcd phi = p.vector.cast<std::complex<double>>();
      proj += phi.dot(psi) * phi;
    }
    CHECK((r.state - proj).norm() < 1e-12);
    CHECK(std::abs(r.projected_norm * r.projected_norm + r.dropped_mass * r.dropped_mass - 1.0) < 1e-12);
  }
  SUBCASE("eigenvector acquires a phase") {
    const Eigen::VectorXcd phi = f.pairs[1].vector.cast<std::complex<double>>();
    const double t = 2.7;
    const auto r = evolve(f.pairs, phi, t);
    CHECK((r.state - std::polar(1.0, -t * f.pairs[1].energy) * phi).norm() < 1e-12);
    CHECK(r.dropped_mass < 1e-7);
  }
  SUBCASE("norm is conserved") {
    const auto r0 = evolve(f.pairs, psi, 0.0);
    for (double t : {0.1, 3.0, 1e3, 1e6}) {
      CHECK(std::abs(evolve(f.pairs, psi, t).state.norm() - r0.projected_norm) < 1e-10);
    }
  }
}

TEST_CASE("moment of the localized evolution") {
  const auto f = free_chain();
  const auto obs = MomentObservable::make(1.0, {p1(0), 2}, 0.5, f.model);

  CHECK(moment_at(f.op.grid, f.pairs, obs, std::vector<std::complex<double>>(3, 0.0)) == 0.0);
  CHECK(moment_at(f.op.grid, {}, obs, TimePhase{1.0}) == 0.0);
  CHECK_THROWS_AS(moment_at(f.op.grid, f.pairs, obs, std::vector<std::complex<double>>(2, 1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(moment_at(f.op.grid, f.pairs, obs,
                            std::vector<std::complex<double>>{1.0, INFINITY, 1.0}),
                  std::invalid_argument);

  SUBCASE("rank one equals a b") {
    const std::vector<EigenPair> one{f.pairs[0]};
    const auto rows = correlator_rows(f.op.grid, one, obs);
    CHECK(moment_at(f.op.grid, one, obs, TimePhase{0.3}) == doctest::Approx(rows[0].a * rows[0].b).epsilon(1e-12));
  }
  SUBCASE("identity weight over the whole cube") {
    const auto all = MomentObservable::make(0.0, {p1(0), 6}, 0.5, f.model);
    const auto b = correlator_bound(f.op, f.pairs, all);
    CHECK(b.bound == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(moment_at(f.op.grid, f.pairs, all, TimePhase{5.0}) == doctest::Approx(1.0).epsilon(1e-12));
  }
  SUBCASE("count mismatch is rejected") {
    const std::vector<EigenPair> partial(f.pairs.begin(), f.pairs.begin() + 2);
    CHECK_THROWS_AS(correlator_bound(f.op, partial, obs), std::invalid_argument);
  }
}

TEST_CASE("empty window gives a zero bound") {
  ModelConfig m;
  m.v = 10.0;
  const MultiCube cube{LatticePoint::origin(2, 1), 3};
  const auto op = assemble(cube, constant_field(required_field_region(cube, 1.0), 1.0, 10.0), m);
  const auto pairs = eigenpairs_in_window(op, 0.0, 0.5);
  REQUIRE(pairs.empty());
  const auto obs = MomentObservable::make(1.0, {LatticePoint::origin(2, 1), 1}, 0.5, m);
  CHECK(correlator_bound(op, pairs, obs).bound == 0.0);
  CHECK(moment_at(op.grid, pairs, obs, TimePhase{1.0}) == 0.0);
}

TEST_CASE("the correlator bound dominates the moment") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const auto f = random_pair_box(seed);
    if (f.pairs.empty()) continue;
    MomentObservable obs;
    obs.Q = 1.0;
    obs.K = {LatticePoint::origin(2, 1), 1};
    obs.eta = 2.5;
    const double bound = correlator_bound(f.op, f.pairs, obs).bound;
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> t(0.0, 1000.0);
    for (int i = 0; i < 10; ++i) {
      CHECK(moment_at(f.op.grid, f.pairs, obs, TimePhase{t(rng)}) <= bound * (1 + 1e-12) + 1e-14);
    }
  }
}

TEST_CASE("annular decomposition") {
  const auto scales = scale_sequence(2, 3);  // 2, 3, 6, 15; 5L = 10, 15, 30, 75
  const double m = 0.3;
  std::vector<CorrelatorRow> rows;
  for (std::size_t j = 0; j < 3; ++j) {
    const double v = std::exp(-m * static_cast<double>(scales[j]));
    rows.push_back({j, 0.0, v, 1.0, p1(5 * scales[j])});
  }
  rows.push_back({3, 0.0, 0.25, 1.0, p1(2)});
  rows.push_back({4, 0.0, 0.125, 1.0, p1(-80)});
  const auto rep = annular_decomposition_report(rows, scales, 1, m);
  REQUIRE(rep.rows.size() == 5);
  CHECK(rep.rows[0].label == "inner");
  CHECK(rep.rows[0].subtotal == 0.25);
  CHECK(rep.rows[4].label == "beyond");
  CHECK(rep.rows[4].subtotal == 0.125);
  for (std::size_t j = 0; j + 1 < 3; ++j) {
    const double ratio = rep.rows[j + 2].subtotal / rep.rows[j + 1].subtotal;
    CHECK(std::abs(ratio - std::exp(-m * static_cast<double>(scales[j + 1] - scales[j]))) < 1e-8);
  }
  CHECK(rep.rows[1].comparison == doctest::Approx(std::exp(-m * 2 / 2.0)));
  double sum = 0.0;
  for (const auto& r : rep.rows) sum += r.subtotal;
  CHECK(std::abs(sum - rep.total) < 1e-12);
  CHECK(rep.decaying());
  CHECK(rep.nonzero_rows() == 5);

  rows[2].a = 10.0;
  CHECK_FALSE(annular_decomposition_report(rows, scales, 1, m).decaying());

  const nlohmann::json j = rep;
  CHECK(j.size() == 5);
  CHECK(j[4]["outer_radius"] == "inf");
}

TEST_CASE("pairwise sum") {
  CHECK(pairwise_sum({}) == 0.0);
  CHECK(pairwise_sum({1.0, 2.0, 3.0}) == 6.0);
  std::vector<double> many(1000, 0.1);
  CHECK(std::abs(pairwise_sum(many) - 100.0) < 1e-12);
}
