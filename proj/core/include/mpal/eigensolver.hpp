#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

namespace mpal {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Eigenvalues ascending, eigenvectors as orthonormal columns.
struct Eigensystem {
  Eigen::VectorXd values;
  Eigen::MatrixXd vectors;
};

class NonConvergence : public std::runtime_error {
 public:
  NonConvergence(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

struct WindowSolverOptions {
  std::size_t dense_cap = 2000;  // dense solver at or below this dimension
  double residual_tol = 1e-10;   // relative to 1 + |E|
  std::size_t max_restarts = 200;
  std::uint64_t seed = 0x5eed;
};

/// All eigenvalues of a symmetric sparse matrix via a dense solve.
Eigen::VectorXd dense_eigenvalues(const SparseMatrix& H);
Eigensystem dense_eigensystem(const SparseMatrix& H);

/// Number of eigenvalues strictly below `shift`, from the inertia of an LDL^T factorization
/// of H - shift.
std::size_t count_below(const SparseMatrix& H, double shift);

/// All eigenpairs with eigenvalue in [lo, hi]. Dense below options.dense_cap, otherwise
/// shift-invert Lanczos with locking, cross-checked against the inertia count.
Eigensystem window_eigensystem(const SparseMatrix& H, double lo, double hi,
                               const WindowSolverOptions& options = {});

/// Lowest `count` eigenpairs (shift-invert below the spectrum of a non-negative H).
Eigensystem lowest_eigensystem(const SparseMatrix& H, std::size_t count,
                               const WindowSolverOptions& options = {});

/// min_n |E_n - E|, from a shift-invert Lanczos run on H - E.
double distance_to_spectrum(const SparseMatrix& H, double E, std::uint64_t seed = 0x5eed);

}  // namespace mpal
