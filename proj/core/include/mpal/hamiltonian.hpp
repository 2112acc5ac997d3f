#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/SparseCore>

#include "mpal/disorder.hpp"
#include "mpal/geometry.hpp"

namespace mpal {

/// Interior nodes of a cube at step h = 1/n, ordered row-major over the l*d axes
/// (axis 0 slowest). Node coordinates are u + a/n with integer offsets |a_i| < L n.
class Grid {
 public:
  Grid(MultiCube cube, int inverse_step);

  const MultiCube& cube() const { return cube_; }
  int inverse_step() const { return inverse_step_; }
  double step() const { return 1.0 / inverse_step_; }
  std::size_t axes() const { return cube_.center.size(); }
  /// 2 L n - 1.
  std::int64_t per_axis() const { return per_axis_; }
  std::size_t size() const { return size_; }

  /// Offsets a (in units of h, relative to the center) of node `row`.
  std::vector<std::int64_t> offsets(std::size_t row) const;
  /// Absolute coordinates in units of h: n*u + a.
  std::vector<std::int64_t> ticks(std::size_t row) const;
  std::vector<double> position(std::size_t row) const;
  /// Row of the node with absolute tick coordinates, if it is an interior node.
  std::optional<std::size_t> row_of_ticks(std::span<const std::int64_t> ticks) const;

  /// Max-norm |x| of node `row` (absolute position).
  double abs_norm(std::size_t row) const;

 private:
  MultiCube cube_;
  int inverse_step_;
  std::int64_t per_axis_;
  std::size_t size_;
};

/// Discretized Dirichlet operator H = -1/2 Δ + U + Σ_j V(x_j) on a cube.
struct FiniteVolumeOperator {
  Grid grid;
  Eigen::SparseMatrix<double> matrix;  // column-major, full (both triangles) storage
  std::vector<double> potential;       // U + ΣV at each node
  double potential_checksum = 0.0;     // sum of the node potentials
  std::uint64_t field_seed = 0;

  std::size_t dim() const { return grid.size(); }
  /// Upper bound of the spectrum: 2 l d / h^2 + max potential.
  double spectral_upper_bound() const;
};

struct AssembleOptions {
  std::size_t max_rows = 200000;
};

/// Region of sites the field must cover for a cube: every particle projection of
/// Λ_{L + r1}(u).
LatticeBox required_field_region(const MultiCube& cube, double r1);

FiniteVolumeOperator assemble(const MultiCube& cube, const AlloyField& field,
                              const ModelConfig& model, AssembleOptions options = {});

/// Rows whose node lies in the open unit cell C(w) = Λ_1(w), ascending.
/// Throws std::invalid_argument unless C(w) is inside the operator's cube.
std::vector<std::size_t> restrict_to_cells(const Grid& grid, const LatticePoint& cell);
/// Sorted union over several cells.
std::vector<std::size_t> restrict_to_cells(const Grid& grid, std::span<const LatticePoint> cells);

/// Lattice point w whose half-open cell (w - 1/2, w + 1/2]^{ld} contains node `row`.
LatticePoint half_open_cell_of(const Grid& grid, std::size_t row);

/// Coordinate-format text: a header line "# N d L h seed", then "row col value" per entry.
void write_coordinate_text(std::ostream& os, const FiniteVolumeOperator& op);

}  // namespace mpal
