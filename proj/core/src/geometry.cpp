#include "mpal/geometry.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace mpal {

Rational Rational::from_double(double value, std::int64_t max_den) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument("Rational::from_double: value must be finite and non-negative");
  }
  // Continued-fraction convergents until exact or the denominator bound is hit.
  std::int64_t h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double x = value;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(x);
    const auto ai = static_cast<std::int64_t>(a);
    const std::int64_t h2 = ai * h1 + h0;
    const std::int64_t k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (static_cast<double>(h1) / static_cast<double>(k1) == value) break;
    const double frac = x - a;
    if (frac <= 0.0) break;
    x = 1.0 / frac;
  }
  if (k1 == 0) throw std::invalid_argument("Rational::from_double: no representation");
  return {h1, k1};
}

LatticePoint::LatticePoint(int particles, int dim, std::vector<std::int64_t> coords)
    : particles_(particles), dim_(dim), coords_(std::move(coords)) {
  if (particles < 1 || dim < 1) {
    throw std::invalid_argument("LatticePoint: particle count and dimension must be positive");
  }
  if (coords_.size() != static_cast<std::size_t>(particles) * static_cast<std::size_t>(dim)) {
    throw std::invalid_argument("LatticePoint: coordinate count must equal l*d");
  }
}

LatticePoint LatticePoint::origin(int particles, int dim) {
  return LatticePoint(particles, dim,
                      std::vector<std::int64_t>(static_cast<std::size_t>(particles * dim), 0));
}

std::span<const std::int64_t> LatticePoint::particle(int j) const {
  return std::span<const std::int64_t>(coords_).subspan(static_cast<std::size_t>(j * dim_),
                                                         static_cast<std::size_t>(dim_));
}

std::int64_t LatticePoint::norm() const {
  std::int64_t n = 0;
  for (auto c : coords_) n = std::max(n, c < 0 ? -c : c);
  return n;
}

std::string LatticePoint::to_string() const {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < coords_.size(); ++i) os << (i ? "," : "") << coords_[i];
  os << ')';
  return os.str();
}

std::int64_t max_distance(const LatticePoint& a, const LatticePoint& b) {
  if (a.size() != b.size()) throw std::invalid_argument("max_distance: size mismatch");
  std::int64_t n = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t diff = a[i] - b[i];
    n = std::max(n, diff < 0 ? -diff : diff);
  }
  return n;
}

bool OuterLayer::contains(const LatticePoint& z) const {
  if (empty) return false;
  const auto r = max_distance(z, center);
  return r >= inner_radius && r < outer_radius;
}

CubeRegions cube_regions(const MultiCube& cube) {
  if (cube.radius < 1) throw std::invalid_argument("cube_regions: radius must be positive");
  CubeRegions out;
  out.interior = MultiCube{cube.center, cube.radius / 3};
  out.outer.center = cube.center;
  out.outer.outer_radius = cube.radius;
  out.outer.inner_radius = cube.radius - 2;
  out.outer.empty = cube.radius < 2;
  return out;
}

std::uint64_t isqrt(unsigned __int128 n) {
  if (n == 0) return 0;
  auto r = static_cast<unsigned __int128>(std::sqrt(static_cast<long double>(n)));
  while (r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return static_cast<std::uint64_t>(r);
}

std::uint64_t icbrt(unsigned __int128 n) {
  if (n == 0) return 0;
  auto r = static_cast<unsigned __int128>(std::cbrt(static_cast<long double>(n)));
  while (r * r * r > n) --r;
  while ((r + 1) * (r + 1) * (r + 1) <= n) ++r;
  return static_cast<std::uint64_t>(r);
}

std::int64_t core_radius(std::int64_t L) {
  if (L < 0) throw std::invalid_argument("core_radius: negative scale");
  const auto l = static_cast<unsigned __int128>(L);
  return static_cast<std::int64_t>(icbrt(l * l));
}

ScaleSequence scale_sequence(std::int64_t L0, std::size_t count) {
  if (L0 < 2) throw std::invalid_argument("scale_sequence: L0 must be >= 2");
  ScaleSequence seq;
  seq.L0 = L0;
  seq.values.reserve(count + 1);
  seq.values.push_back(L0);
  for (std::size_t k = 1; k <= count; ++k) {
    const auto prev = static_cast<unsigned __int128>(seq.values.back());
    // floor(L^{3/2}) = floor(sqrt(L^3)).
    const std::uint64_t next = isqrt(prev * prev * prev) + 1;
    if (next > static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max() / 2) ||
        next > (std::uint64_t{1} << 41)) {
      throw std::overflow_error("scale_sequence: scale exceeds supported range");
    }
    seq.values.push_back(static_cast<std::int64_t>(next));
  }
  return seq;
}

PartitionIndex::PartitionIndex(int particles, std::uint32_t mask)
    : particles_(particles), mask_(mask) {
  if (particles < 1 || particles > 31) {
    throw std::invalid_argument("PartitionIndex: particle count out of range");
  }
  const std::uint32_t full = (1u << particles) - 1u;
  if (mask == 0 || (mask & ~full) != 0) {
    throw std::invalid_argument("PartitionIndex: J must be a nonempty subset of {1..N}");
  }
}

int PartitionIndex::count() const { return std::popcount(mask_); }

PartitionIndex PartitionIndex::complement() const {
  const std::uint32_t full = (1u << particles_) - 1u;
  return PartitionIndex(particles_, full & ~mask_);
}

namespace {

void check_pair(const MultiCube& a, const MultiCube& b) {
  if (a.particles() != b.particles() || a.dim() != b.dim()) {
    throw std::invalid_argument("separability: cubes differ in particle count or dimension");
  }
  if (a.radius != b.radius) throw std::invalid_argument("separability: cubes differ in radius");
  if (a.radius < 1) throw std::invalid_argument("separability: radius must be positive");
}

// Open d-balls of radius R = L + r1 around a and b are disjoint iff |a - b| >= 2R,
// i.e. den*|a - b| >= 2*(den*L + num).
bool projections_disjoint(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                          std::int64_t L, Rational r1) {
  std::int64_t dist = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::int64_t diff = a[i] - b[i];
    dist = std::max(dist, diff < 0 ? -diff : diff);
  }
  const __int128 lhs = static_cast<__int128>(r1.den) * dist;
  const __int128 rhs = 2 * (static_cast<__int128>(r1.den) * L + r1.num);
  return lhs >= rhs;
}

}  // namespace

bool is_J_separable(const MultiCube& y_cube, const MultiCube& x_cube, const PartitionIndex& J,
                    Rational r1) {
  check_pair(y_cube, x_cube);
  if (J.particles() != y_cube.particles()) {
    throw std::invalid_argument("is_J_separable: J refers to a different particle count");
  }
  if (r1.den <= 0 || r1.num < 0) throw std::invalid_argument("is_J_separable: invalid r1");
  const int N = y_cube.particles();
  const auto L = y_cube.radius;
  for (int j = 0; j < N; ++j) {
    if (!J.contains(j)) continue;
    const auto yj = y_cube.center.particle(j);
    for (int i = 0; i < N; ++i) {
      if (!J.contains(i) && !projections_disjoint(yj, y_cube.center.particle(i), L, r1)) {
        return false;
      }
      if (!projections_disjoint(yj, x_cube.center.particle(i), L, r1)) return false;
    }
  }
  return true;
}

std::optional<SeparabilityWitness> separability_witness(const MultiCube& a, const MultiCube& b,
                                                        Rational r1) {
  check_pair(a, b);
  const int N = a.particles();
  for (std::uint32_t mask = 1; mask < (1u << N); ++mask) {
    const PartitionIndex J(N, mask);
    if (is_J_separable(b, a, J, r1)) return SeparabilityWitness{J, true};
    if (is_J_separable(a, b, J, r1)) return SeparabilityWitness{J, false};
  }
  return std::nullopt;
}

bool are_separable(const MultiCube& a, const MultiCube& b, Rational r1) {
  return separability_witness(a, b, r1).has_value();
}

std::optional<std::size_t> annulus_index(const LatticePoint& x, const ScaleSequence& scales,
                                         int N) {
  const auto r = x.norm();
  for (std::size_t i = 0; i + 1 < scales.size(); ++i) {
    const auto inner = 5 * N * scales[i];
    const auto outer = 5 * N * scales[i + 1];
    if (r < inner) return std::nullopt;
    if (r < outer) return i;
  }
  return std::nullopt;
}

std::vector<MultiCube> covering_family(const LatticePoint& x, std::int64_t L, Rational r1) {
  if (L < 1) throw std::invalid_argument("covering_family: L must be >= 1");
  const int N = x.particles();
  const int d = x.dim();
  // ceil(2N(L + num/den)).
  const std::int64_t scaled = 2 * N * (L * r1.den + r1.num);
  const std::int64_t radius = (scaled + r1.den - 1) / r1.den;

  std::vector<MultiCube> family;
  std::vector<int> f(static_cast<std::size_t>(N), 0);
  while (true) {
    std::vector<std::int64_t> coords;
    coords.reserve(x.size());
    for (int j = 0; j < N; ++j) {
      const auto p = x.particle(f[static_cast<std::size_t>(j)]);
      coords.insert(coords.end(), p.begin(), p.end());
    }
    MultiCube cube{LatticePoint(N, d, std::move(coords)), radius};
    if (std::find(family.begin(), family.end(), cube) == family.end()) {
      family.push_back(std::move(cube));
    }
    int pos = 0;
    while (pos < N && ++f[static_cast<std::size_t>(pos)] == N) f[static_cast<std::size_t>(pos++)] = 0;
    if (pos == N) break;
  }
  return family;
}

bool in_union(const LatticePoint& y, std::span<const MultiCube> cubes) {
  return std::any_of(cubes.begin(), cubes.end(), [&](const MultiCube& c) { return c.contains(y); });
}

std::vector<LatticePoint> lattice_ball(const LatticePoint& u, std::int64_t R) {
  std::vector<LatticePoint> out;
  if (R < 0) return out;
  const std::size_t n = u.size();
  std::vector<std::int64_t> offset(n, -R);
  while (true) {
    std::vector<std::int64_t> c(n);
    for (std::size_t i = 0; i < n; ++i) c[i] = u[i] + offset[i];
    out.emplace_back(u.particles(), u.dim(), std::move(c));
    bool done = true;
    for (std::size_t pos = n; pos-- > 0;) {
      if (++offset[pos] <= R) {
        done = false;
        break;
      }
      offset[pos] = -R;
    }
    if (done) return out;
  }
}

}  // namespace mpal
