#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mpal/eigensolver.hpp"
#include "mpal/geometry.hpp"
#include "mpal/hamiltonian.hpp"

namespace mpal {

struct CellNorm {
  LatticePoint cell;
  double norm = 0.0;
};

struct EigenPair {
  double energy = 0.0;
  Eigen::VectorXd vector;
  std::int64_t cube_radius = 0;
  /// ||1_{C(w)} Phi|| over half-open cells, one entry per cell holding grid nodes, sorted by w.
  std::vector<CellNorm> cell_norms;
  /// Argmax cells of cell_norms; the first is the primary center x̂_{n,1}.
  std::vector<LatticePoint> centers;
  /// Pairs whose eigenvalues chain within 1e-10 share an id.
  std::size_t cluster = 0;

  const LatticePoint& primary_center() const { return centers.front(); }
};

/// Half-open cell norms of a grid vector.
std::vector<CellNorm> half_open_cell_norms(const Grid& grid, const Eigen::VectorXd& phi);

/// Ties within 1e-12 of the max are kept; order is by |w| then lexicographic.
std::vector<LatticePoint> localization_centers(const std::vector<CellNorm>& cell_norms);
std::vector<LatticePoint> localization_centers(const EigenPair& pair);

/// Builds EigenPairs (cell norms, centers, clusters) from an eigensystem on a grid.
std::vector<EigenPair> make_eigenpairs(const Grid& grid, const Eigensystem& system);

struct WindowOptions {
  WindowSolverOptions solver;
  /// Also run the iterative solver on a dense-sized instance and compare.
  bool cross_check = false;
};

/// Every eigenpair with eigenvalue in [lo, hi]. The count is checked against the LDL^T
/// inertia and the vectors against orthonormality (1e-8); failures throw NonConvergence.
std::vector<EigenPair> eigenpairs_in_window(const FiniteVolumeOperator& op, double lo, double hi,
                                            const WindowOptions& options = {});

struct DecayFit {
  bool fitted = false;       // false: fewer than 4 usable shells
  double mass = 0.0;         // m̂ = -slope
  double intercept = 0.0;
  double residual = 0.0;     // RMS of the log fit
  std::int64_t r_min = 0;
  std::int64_t r_max = 0;
  std::size_t shells = 0;
};

/// Least squares of log(max cell norm in the shell) against the shell radius
/// |w - x̂_{n,1}|, over shells with radius in [2, L - 2] and nonzero norm.
DecayFit decay_fit(const EigenPair& pair);

struct EdiReport {
  bool skipped = false;  // inner energy resonant
  double lhs = 0.0;
  double green_norm = 0.0;
  double outer_mass = 0.0;
  double rhs_core = 0.0;
  double ratio = 0.0;
};

/// Compares ||1_{C(w)} Phi|| with ||1_out G_inner(E_n) 1_{C(w)}|| * ||1_out Phi||, where
/// "out" is the outer layer of the inner cube. Throws std::invalid_argument unless
/// C(w) lies in the inner cube's interior, the inner cube lies in the big one with the same
/// step, and the inner radius exceeds 7.
EdiReport edi_check(const FiniteVolumeOperator& big_op, const EigenPair& pair,
                    const FiniteVolumeOperator& inner_op, const LatticePoint& w,
                    double resonance_tol = 1e-10);

/// ||(1 - 1_{Λ_R(0)}) Phi|| from the grid components.
double mass_concentration(const Grid& grid, const EigenPair& pair, double R);

/// card{n : |x̂_{n,1}| <= radius}.
std::size_t center_count(const std::vector<EigenPair>& pairs, std::int64_t radius);

/// Least-squares slope of log y against log x over points with x, y > 0 (NaN if < 2).
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

/// JSON object for the eigen report: E_n, center, n_centers, m_hat, tail_mass_by_R.
nlohmann::json eigen_report_line(const Grid& grid, const EigenPair& pair,
                                 const std::vector<std::int64_t>& radii);

}  // namespace mpal
