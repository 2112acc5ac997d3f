#include <doctest.h>

#include <stdexcept>

#include <random>

#include "mpal/geometry.hpp"

using namespace mpal;

namespace {

LatticePoint pt(std::vector<std::int64_t> c, int particles, int dim = 1) {
  return LatticePoint(particles, dim, std::move(c));
}

// Direct evaluation of the J-separability set condition on closed-form intervals (d = 1).
bool brute_J(const MultiCube& y, const MultiCube& x, std::uint32_t mask, double r1) {
  const int N = y.particles();
  const double R = static_cast<double>(y.radius) + r1;
  auto overlap = [&](std::int64_t a, std::int64_t b) { return std::abs(a - b) < 2 * R; };
  for (int j = 0; j < N; ++j) {
    if (!((mask >> j) & 1u)) continue;
    for (int i = 0; i < N; ++i) {
      if (((mask >> i) & 1u)) continue;
      if (overlap(y.center[j], y.center[i])) return false;
    }
    for (int i = 0; i < N; ++i) {
      if (overlap(y.center[j], x.center[i])) return false;
    }
  }
  return true;
}

bool brute_separable(const MultiCube& a, const MultiCube& b, double r1) {
  const int N = a.particles();
  for (std::uint32_t mask = 1; mask < (1u << N); ++mask) {
    if (brute_J(b, a, mask, r1) || brute_J(a, b, mask, r1)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("scale_sequence examples") {
  CHECK(scale_sequence(2, 3).values == std::vector<std::int64_t>{2, 3, 6, 15});
  CHECK(scale_sequence(4, 3).values == std::vector<std::int64_t>{4, 9, 28, 149});
  CHECK(scale_sequence(3, 2).values == std::vector<std::int64_t>{3, 6, 15});
  CHECK(scale_sequence(2, 6).values == std::vector<std::int64_t>{2, 3, 6, 15, 59, 454, 9674});
  CHECK(scale_sequence(5, 0).values == std::vector<std::int64_t>{5});
  CHECK_THROWS_AS(scale_sequence(1, 3), std::invalid_argument);
}

TEST_CASE("scale growth bounds hold in exact arithmetic") {
  const auto s = scale_sequence(2, 6);
  for (std::size_t k = 0; k + 1 < s.size(); ++k) {
    const auto L = static_cast<unsigned __int128>(s[k]);
    const auto next = static_cast<unsigned __int128>(s[k + 1]);
    // L_{k+1} - 1 = floor(L^{3/2}): (L_{k+1}-1)^2 <= L^3 < L_{k+1}^2.
    CHECK((next - 1) * (next - 1) <= L * L * L);
    CHECK(L * L * L < next * next);
  }
}

TEST_CASE("integer roots") {
  CHECK(isqrt(0) == 0);
  CHECK(isqrt(15) == 3);
  CHECK(isqrt(16) == 4);
  CHECK(isqrt(static_cast<unsigned __int128>(1) << 100) == (1ULL << 50));
  CHECK(icbrt(26) == 2);
  CHECK(icbrt(27) == 3);
  CHECK(core_radius(3) == 2);    // floor(9^{1/3})
  CHECK(core_radius(8) == 4);    // 64^{1/3}
  CHECK(core_radius(15) == 6);   // floor(225^{1/3})
}

TEST_CASE("cube_regions") {
  const auto c9 = cube_regions({LatticePoint::origin(2, 1), 9});
  CHECK(c9.interior.radius == 3);
  const auto c2 = cube_regions({LatticePoint::origin(2, 1), 2});
  CHECK(c2.interior.radius == 0);
  CHECK_FALSE(c2.outer.empty);
  CHECK(c2.outer.inner_radius == 0);
  const auto c1 = cube_regions({LatticePoint::origin(2, 1), 1});
  CHECK(c1.outer.empty);

  // L = 15: outer lattice points are exactly 13 <= |y - u| < 15 over B_15(u).
  const auto u = pt({3, -2}, 2);
  const auto r = cube_regions({u, 15});
  CHECK(r.interior.radius == 5);
  std::size_t members = 0;
  for (const auto& y : lattice_ball(u, 15)) {
    const auto dist = max_distance(y, u);
    CHECK(r.outer.contains(y) == (dist >= 13 && dist < 15));
    members += r.outer.contains(y) ? 1 : 0;
  }
  CHECK(members == 29 * 29 - 25 * 25);
}

TEST_CASE("J-separability examples") {
  const Rational r1{1, 1};
  const MultiCube x{pt({0, 0}, 2), 3};
  CHECK(is_J_separable({pt({100, 100}, 2), 3}, x, PartitionIndex(2, 0b11), r1));
  const MultiCube y{pt({0, 100}, 2), 3};
  CHECK(is_J_separable(y, x, PartitionIndex(2, 0b10), r1));
  CHECK_FALSE(is_J_separable(y, x, PartitionIndex(2, 0b01), r1));
  for (std::uint32_t m = 1; m < 4; ++m) CHECK_FALSE(is_J_separable(x, x, PartitionIndex(2, m), r1));
  CHECK(are_separable(x, y, r1));
  CHECK_FALSE(are_separable(x, {pt({0, 2}, 2), 3}, r1));
  CHECK_THROWS(is_J_separable({pt({0, 0}, 2), 4}, x, PartitionIndex(2, 1), r1));
}

TEST_CASE("separability witness order and symmetry") {
  const Rational r1{1, 1};
  const MultiCube x{pt({0, 0}, 2), 3};
  const MultiCube y{pt({0, 100}, 2), 3};
  const auto w = separability_witness(x, y, r1);
  REQUIRE(w);
  CHECK(w->J.mask() == 0b10);
  CHECK(w->second_from_first);
  CHECK(are_separable(y, x, r1) == are_separable(x, y, r1));
}

TEST_CASE("exact rational inflation at the tangency edge") {
  // Balls of radius 3.5 at distance 7 touch but do not overlap (open balls).
  const MultiCube a{pt({0}, 1), 3};
  const MultiCube b{pt({7}, 1), 3};
  CHECK(is_J_separable(b, a, PartitionIndex(1, 1), Rational{1, 2}));
  CHECK_FALSE(is_J_separable(b, a, PartitionIndex(1, 1), Rational{3, 5}));
}

TEST_CASE("separability matches a brute-force J scan, d=1 N=2") {
  for (std::int64_t L = 2; L <= 4; ++L) {
    const MultiCube x{pt({0, 0}, 2), L};
    for (std::int64_t a = -12; a <= 12; ++a) {
      for (std::int64_t b = -12; b <= 12; ++b) {
        const MultiCube y{pt({a, b}, 2), L};
        CHECK(are_separable(x, y, Rational{1, 1}) == brute_separable(x, y, 1.0));
      }
    }
  }
}

TEST_CASE("monotonicity in the inflation radius") {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> coord(-30, 30);
  for (int t = 0; t < 500; ++t) {
    const MultiCube x{pt({coord(rng), coord(rng), coord(rng)}, 3), 3};
    const MultiCube y{pt({coord(rng), coord(rng), coord(rng)}, 3), 3};
    for (std::uint32_t m = 1; m < 8; ++m) {
      if (is_J_separable(y, x, PartitionIndex(3, m), Rational{1, 1})) {
        CHECK(is_J_separable(y, x, PartitionIndex(3, m), Rational{1, 2}));
      }
    }
  }
}

TEST_CASE("partition index") {
  const PartitionIndex J(3, 0b101);
  CHECK(J.count() == 2);
  CHECK(J.contains(0));
  CHECK_FALSE(J.contains(1));
  CHECK(J.complement().mask() == 0b010);
  CHECK_THROWS(PartitionIndex(3, 0b111).complement());
  CHECK_THROWS(PartitionIndex(3, 0));
  CHECK_THROWS(PartitionIndex(3, 0b1000));
}

TEST_CASE("annulus_index") {
  const auto s = scale_sequence(2, 3);  // 2, 3, 6, 15 -> brackets 20, 30, 60, 150
  CHECK(annulus_index(pt({25, 0}, 2), s, 2) == std::optional<std::size_t>(0));
  CHECK_FALSE(annulus_index(pt({5, 0}, 2), s, 2).has_value());
  CHECK(annulus_index(pt({20, 0}, 2), s, 2) == std::optional<std::size_t>(0));
  CHECK(annulus_index(pt({30, 0}, 2), s, 2) == std::optional<std::size_t>(1));
  CHECK(annulus_index(pt({0, 149}, 2), s, 2) == std::optional<std::size_t>(2));
  CHECK_FALSE(annulus_index(pt({150, 0}, 2), s, 2).has_value());
}

TEST_CASE("covering_family") {
  const Rational r1{1, 1};
  const auto single = covering_family(pt({4, -1}, 1, 2), 3, r1);
  REQUIRE(single.size() == 1);
  CHECK(single[0].center == pt({4, -1}, 1, 2));

  const auto fam = covering_family(pt({0, 0}, 2), 3, r1);
  CHECK(fam.size() <= 4);
  for (std::int64_t a = -70; a <= 70; ++a) {
    for (std::int64_t b = -70; b <= 70; ++b) {
      const auto y = pt({a, b}, 2);
      if (y.norm() > 5 * 2 * 3) CHECK_FALSE(in_union(y, fam));
    }
  }

  // Outside the union means separable.
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<std::int64_t> coord(-40, 40);
  for (int t = 0; t < 2000; ++t) {
    const auto x = pt({coord(rng), coord(rng), coord(rng)}, 3);
    const auto y = pt({coord(rng), coord(rng), coord(rng)}, 3);
    const auto f = covering_family(x, 2, r1);
    CHECK(f.size() <= 27);
    if (!in_union(y, f)) CHECK(are_separable({x, 2}, {y, 2}, r1));
  }
}

TEST_CASE("lattice_ball order and size") {
  const auto ball = lattice_ball(pt({1, 1}, 2), 1);
  REQUIRE(ball.size() == 9);
  CHECK(ball.front() == pt({0, 0}, 2));
  CHECK(ball.back() == pt({2, 2}, 2));
  CHECK(std::is_sorted(ball.begin(), ball.end()));
  CHECK(lattice_ball(pt({0}, 1), 0).size() == 1);
}

TEST_CASE("rational from double") {
  CHECK(Rational::from_double(1.0) == Rational{1, 1});
  CHECK(Rational::from_double(0.5) == Rational{1, 2});
  CHECK(Rational::from_double(0.75) == Rational{3, 4});
}
