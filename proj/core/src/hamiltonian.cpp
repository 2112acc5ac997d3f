#include "mpal/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace mpal {

namespace {

// ceil(p / q) for q > 0.
std::int64_t ceil_div(std::int64_t p, std::int64_t q) {
  return p >= 0 ? (p + q - 1) / q : -((-p) / q);
}

}  // namespace

Grid::Grid(MultiCube cube, int inverse_step) : cube_(std::move(cube)), inverse_step_(inverse_step) {
  if (inverse_step < 1) throw std::invalid_argument("Grid: h must be 1/n with n >= 1");
  if (cube_.radius < 1) throw std::invalid_argument("Grid: cube radius must be >= 1");
  per_axis_ = 2 * cube_.radius * inverse_step - 1;
  const auto axes = cube_.center.size();
  std::size_t size = 1;
  for (std::size_t i = 0; i < axes; ++i) {
    if (size > std::numeric_limits<std::size_t>::max() / static_cast<std::size_t>(per_axis_)) {
      throw std::overflow_error("Grid: node count overflows");
    }
    size *= static_cast<std::size_t>(per_axis_);
  }
  size_ = size;
}

std::vector<std::int64_t> Grid::offsets(std::size_t row) const {
  const auto axes = this->axes();
  std::vector<std::int64_t> a(axes);
  const std::int64_t half = (per_axis_ - 1) / 2;
  for (std::size_t i = axes; i-- > 0;) {
    a[i] = static_cast<std::int64_t>(row % static_cast<std::size_t>(per_axis_)) - half;
    row /= static_cast<std::size_t>(per_axis_);
  }
  return a;
}

std::vector<std::int64_t> Grid::ticks(std::size_t row) const {
  auto a = offsets(row);
  for (std::size_t i = 0; i < a.size(); ++i) a[i] += inverse_step_ * cube_.center[i];
  return a;
}

std::vector<double> Grid::position(std::size_t row) const {
  const auto t = ticks(row);
  std::vector<double> x(t.size());
  for (std::size_t i = 0; i < t.size(); ++i) {
    x[i] = static_cast<double>(t[i]) / static_cast<double>(inverse_step_);
  }
  return x;
}

std::optional<std::size_t> Grid::row_of_ticks(std::span<const std::int64_t> ticks) const {
  if (ticks.size() != axes()) return std::nullopt;
  const std::int64_t half = (per_axis_ - 1) / 2;
  std::size_t row = 0;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const std::int64_t a = ticks[i] - inverse_step_ * cube_.center[i];
    if (a < -half || a > half) return std::nullopt;
    row = row * static_cast<std::size_t>(per_axis_) + static_cast<std::size_t>(a + half);
  }
  return row;
}

double Grid::abs_norm(std::size_t row) const {
  std::int64_t n = 0;
  for (auto t : ticks(row)) n = std::max(n, t < 0 ? -t : t);
  return static_cast<double>(n) / static_cast<double>(inverse_step_);
}

double FiniteVolumeOperator::spectral_upper_bound() const {
  const double h = grid.step();
  const double vmax = potential.empty() ? 0.0 : *std::max_element(potential.begin(), potential.end());
  return 2.0 * static_cast<double>(grid.axes()) / (h * h) + vmax;
}

LatticeBox required_field_region(const MultiCube& cube, double r1) {
  const int d = cube.dim();
  // Sites s with |s - u_j| < L + r1, i.e. |s - u_j| <= ceil(L + r1) - 1.
  const auto reach = static_cast<std::int64_t>(std::ceil(static_cast<double>(cube.radius) + r1)) - 1;
  LatticeBox box;
  box.lo.assign(static_cast<std::size_t>(d), std::numeric_limits<std::int64_t>::max());
  box.hi.assign(static_cast<std::size_t>(d), std::numeric_limits<std::int64_t>::min());
  for (int j = 0; j < cube.particles(); ++j) {
    const auto p = cube.center.particle(j);
    for (int i = 0; i < d; ++i) {
      const auto k = static_cast<std::size_t>(i);
      box.lo[k] = std::min(box.lo[k], p[k] - reach);
      box.hi[k] = std::max(box.hi[k], p[k] + reach);
    }
  }
  return box;
}

FiniteVolumeOperator assemble(const MultiCube& cube, const AlloyField& field,
                              const ModelConfig& model, AssembleOptions options) {
  if (cube.radius < 1) throw std::invalid_argument("assemble: cube radius must be >= 1");
  if (cube.dim() != model.d || cube.particles() > model.N) {
    throw std::invalid_argument("assemble: cube does not match the model's (N, d)");
  }
  Grid grid(cube, model.grid_inverse_step);
  if (grid.size() > options.max_rows) {
    throw std::length_error("assemble: operator dimension " + std::to_string(grid.size()) +
                            " exceeds the cap of " + std::to_string(options.max_rows) + " rows");
  }
  const auto need = required_field_region(cube, model.bump.r1);
  for (int i = 0; i < need.dim(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    if (field.region.dim() != model.d || need.lo[k] < field.region.lo[k] ||
        need.hi[k] > field.region.hi[k]) {
      throw std::out_of_range("assemble: field region does not cover the cube's projections");
    }
  }

  const double h = grid.step();
  const double offdiag = -0.5 / (h * h);
  const double kinetic_diag = static_cast<double>(grid.axes()) / (h * h);
  const auto n = grid.size();
  const auto axes = grid.axes();
  const auto per_axis = static_cast<std::size_t>(grid.per_axis());

  std::vector<std::size_t> stride(axes, 1);
  for (std::size_t i = axes - 1; i-- > 0;) stride[i] = stride[i + 1] * per_axis;

  FiniteVolumeOperator op{grid, Eigen::SparseMatrix<double>(static_cast<Eigen::Index>(n),
                                                            static_cast<Eigen::Index>(n)),
                          std::vector<double>(n), 0.0, field.seed};
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(n * (2 * axes + 1));
  for (std::size_t row = 0; row < n; ++row) {
    const auto x = grid.position(row);
    const double pot = total_potential(x, model.d, field, model.bump, model.interaction);
    op.potential[row] = pot;
    op.potential_checksum += pot;
    const auto r = static_cast<Eigen::Index>(row);
    triplets.emplace_back(r, r, kinetic_diag + pot);
    // Decode each axis index once; neighbors outside the cube are Dirichlet-dropped.
    std::size_t rest = row;
    for (std::size_t i = axes; i-- > 0;) {
      const std::size_t idx = rest % per_axis;
      rest /= per_axis;
      if (idx > 0) triplets.emplace_back(r, static_cast<Eigen::Index>(row - stride[i]), offdiag);
      if (idx + 1 < per_axis) {
        triplets.emplace_back(r, static_cast<Eigen::Index>(row + stride[i]), offdiag);
      }
    }
  }
  op.matrix.setFromTriplets(triplets.begin(), triplets.end());
  op.matrix.makeCompressed();
  return op;
}

std::vector<std::size_t> restrict_to_cells(const Grid& grid, const LatticePoint& cell) {
  const auto& cube = grid.cube();
  if (cell.size() != cube.center.size()) {
    throw std::invalid_argument("restrict_to_cells: cell dimension mismatch");
  }
  if (!cube.contains_cell(cell)) {
    throw std::invalid_argument("restrict_to_cells: cell " + cell.to_string() +
                                " is not inside the cube");
  }
  const std::int64_t n = grid.inverse_step();
  const std::int64_t half = (grid.per_axis() - 1) / 2;
  const auto axes = grid.axes();
  // Offsets a with |n(u - w) + a| < n on each axis.
  std::vector<std::int64_t> lo(axes), hi(axes);
  for (std::size_t i = 0; i < axes; ++i) {
    const std::int64_t shift = n * (cell[i] - cube.center[i]);
    lo[i] = std::max(-half, shift - n + 1);
    hi[i] = std::min(half, shift + n - 1);
  }
  std::vector<std::size_t> rows;
  std::vector<std::int64_t> a = lo;
  const auto per_axis = static_cast<std::size_t>(grid.per_axis());
  while (true) {
    std::size_t row = 0;
    for (std::size_t i = 0; i < axes; ++i) row = row * per_axis + static_cast<std::size_t>(a[i] + half);
    rows.push_back(row);
    bool done = true;
    for (std::size_t i = axes; i-- > 0;) {
      if (++a[i] <= hi[i]) {
        done = false;
        break;
      }
      a[i] = lo[i];
    }
    if (done) break;
  }
  return rows;
}

std::vector<std::size_t> restrict_to_cells(const Grid& grid, std::span<const LatticePoint> cells) {
  std::vector<std::size_t> rows;
  for (const auto& c : cells) {
    const auto part = restrict_to_cells(grid, c);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  std::sort(rows.begin(), rows.end());
  rows.erase(std::unique(rows.begin(), rows.end()), rows.end());
  return rows;
}

LatticePoint half_open_cell_of(const Grid& grid, std::size_t row) {
  const std::int64_t n = grid.inverse_step();
  const auto t = grid.ticks(row);
  std::vector<std::int64_t> w(t.size());
  // w = ceil(x - 1/2) = ceil((2t - n) / 2n).
  for (std::size_t i = 0; i < t.size(); ++i) w[i] = ceil_div(2 * t[i] - n, 2 * n);
  return LatticePoint(grid.cube().particles(), grid.cube().dim(), std::move(w));
}

void write_coordinate_text(std::ostream& os, const FiniteVolumeOperator& op) {
  const auto& cube = op.grid.cube();
  os << "# N=" << cube.particles() << " d=" << cube.dim() << " L=" << cube.radius
     << " h=" << std::setprecision(17) << op.grid.step() << " seed=" << op.field_seed << '\n';
  std::vector<Eigen::Triplet<double>> entries;
  for (Eigen::Index col = 0; col < op.matrix.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(op.matrix, col); it; ++it) {
      entries.emplace_back(it.row(), it.col(), it.value());
    }
  }
  std::sort(entries.begin(), entries.end(), [](const auto& a, const auto& b) {
    return a.row() != b.row() ? a.row() < b.row() : a.col() < b.col();
  });
  for (const auto& e : entries) os << e.row() << ' ' << e.col() << ' ' << e.value() << '\n';
}

}  // namespace mpal
