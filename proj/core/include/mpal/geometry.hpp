#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mpal {

/// Exact non-negative rational used for inflation radii such as r1.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  static Rational from_double(double value, std::int64_t max_den = 1 << 20);
  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Point of Z^{l d}: l particle positions in Z^d, stored particle-major.
class LatticePoint {
 public:
  LatticePoint() = default;
  LatticePoint(int particles, int dim, std::vector<std::int64_t> coords);
  static LatticePoint origin(int particles, int dim);

  int particles() const { return particles_; }
  int dim() const { return dim_; }
  std::size_t size() const { return coords_.size(); }

  std::span<const std::int64_t> coords() const { return coords_; }
  std::span<const std::int64_t> particle(int j) const;
  std::int64_t operator[](std::size_t i) const { return coords_[i]; }
  std::int64_t& operator[](std::size_t i) { return coords_[i]; }

  /// Max-norm |x|.
  std::int64_t norm() const;
  std::string to_string() const;

  friend bool operator==(const LatticePoint&, const LatticePoint&) = default;
  friend auto operator<=>(const LatticePoint& a, const LatticePoint& b) {
    return a.coords_ <=> b.coords_;
  }

 private:
  int particles_ = 0;
  int dim_ = 0;
  std::vector<std::int64_t> coords_;
};

std::int64_t max_distance(const LatticePoint& a, const LatticePoint& b);

/// Open max-norm cube Λ_L(u) = {x : |x - u| < L} in R^{l d}.
struct MultiCube {
  LatticePoint center;
  std::int64_t radius = 0;

  int particles() const { return center.particles(); }
  int dim() const { return center.dim(); }

  /// Whether the lattice point z lies in the open cube.
  bool contains(const LatticePoint& z) const { return max_distance(z, center) < radius; }
  /// Whether the unit cell C(w) = Λ_1(w) is contained in the cube.
  bool contains_cell(const LatticePoint& w) const {
    return max_distance(w, center) + 1 <= radius;
  }

  friend bool operator==(const MultiCube&, const MultiCube&) = default;
};

/// Outer layer Λ_L(u) \ Λ_{L-2}(u). Reported empty (not silently dropped) for L < 2.
struct OuterLayer {
  LatticePoint center;
  std::int64_t outer_radius = 0;
  std::int64_t inner_radius = 0;
  bool empty = true;

  /// Membership of a lattice point: inner_radius <= |z - u| < outer_radius.
  bool contains(const LatticePoint& z) const;
};

struct CubeRegions {
  MultiCube interior;
  OuterLayer outer;
};

CubeRegions cube_regions(const MultiCube& cube);

/// Scales L_k = floor(L_{k-1}^{3/2}) + 1 starting from L_0.
struct ScaleSequence {
  std::int64_t L0 = 2;
  std::vector<std::int64_t> values;

  std::size_t size() const { return values.size(); }
  std::int64_t operator[](std::size_t k) const { return values.at(k); }
};

ScaleSequence scale_sequence(std::int64_t L0, std::size_t count);

/// floor(sqrt(n)) for n < 2^126.
std::uint64_t isqrt(unsigned __int128 n);
/// floor(cbrt(n)).
std::uint64_t icbrt(unsigned __int128 n);
/// floor(L^{1/alpha}) with alpha = 3/2, i.e. floor(cbrt(L^2)).
std::int64_t core_radius(std::int64_t L);

/// Nonempty subset J of {1..N} as a bitmask (bit j-1 for particle j).
class PartitionIndex {
 public:
  PartitionIndex(int particles, std::uint32_t mask);

  int particles() const { return particles_; }
  std::uint32_t mask() const { return mask_; }
  bool contains(int j) const { return (mask_ >> j) & 1u; }  // j is 0-based
  int count() const;
  PartitionIndex complement() const;  // may be empty only when J is full; throws then

  friend bool operator==(const PartitionIndex&, const PartitionIndex&) = default;

 private:
  int particles_;
  std::uint32_t mask_;
};

/// Whether Λ_L(y) is J-separable from Λ_L(x) with inflation r1.
bool is_J_separable(const MultiCube& y_cube, const MultiCube& x_cube, const PartitionIndex& J,
                    Rational r1);

struct SeparabilityWitness {
  PartitionIndex J;
  bool second_from_first;  // true: b is J-separable from a
};

/// First witness in increasing bitmask order, b-from-a tried before a-from-b.
std::optional<SeparabilityWitness> separability_witness(const MultiCube& a, const MultiCube& b,
                                                        Rational r1);
bool are_separable(const MultiCube& a, const MultiCube& b, Rational r1);

/// Index i of the annulus M_i = Λ_{5N L_{i+1}}(0) \ Λ_{5N L_i}(0) containing x;
/// nullopt inside the innermost ball or beyond the last bracket.
std::optional<std::size_t> annulus_index(const LatticePoint& x, const ScaleSequence& scales,
                                         int N);

/// Cubes Λ_R(x_f), R = ceil(2N(L + r1)), one per map f : {1..N} -> {1..N}, where
/// x_f = (x_{f(1)}, ..., x_{f(N)}). If y lies outside their union then Λ_L(y) is
/// separable from Λ_L(x). Duplicates removed; size <= N^N.
std::vector<MultiCube> covering_family(const LatticePoint& x, std::int64_t L, Rational r1);

bool in_union(const LatticePoint& y, std::span<const MultiCube> cubes);

/// Lattice points z with |z - u| <= R, in row-major lexicographic order.
std::vector<LatticePoint> lattice_ball(const LatticePoint& u, std::int64_t R);

}  // namespace mpal
