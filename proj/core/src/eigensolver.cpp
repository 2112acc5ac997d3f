#include "mpal/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

namespace mpal {

namespace {

SparseMatrix shifted(const SparseMatrix& H, double shift) {
  SparseMatrix I(H.rows(), H.cols());
  I.setIdentity();
  SparseMatrix K = H - shift * I;
  K.makeCompressed();
  return K;
}

Eigen::VectorXd random_unit(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss;
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = gauss(rng);
  return v.normalized();
}

// Two passes of classical Gram-Schmidt against the columns of `basis[0..count)`.
void orthogonalize(Eigen::VectorXd& v, const Eigen::MatrixXd& basis, Eigen::Index count) {
  if (count == 0) return;
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::VectorXd coeffs = basis.leftCols(count).transpose() * v;
    v.noalias() -= basis.leftCols(count) * coeffs;
  }
}

// Lanczos on Op = (H - sigma)^{-1} with full reorthogonalization against `locked` and the
// Krylov basis. Returns Ritz values theta (of Op) and vectors.
template <typename Apply>
void lanczos(const Apply& apply, Eigen::Index n, const Eigen::MatrixXd& locked,
             Eigen::Index steps, std::mt19937_64& rng, Eigen::VectorXd& theta,
             Eigen::MatrixXd& ritz) {
  const Eigen::Index nl = locked.cols();
  Eigen::MatrixXd basis(n, nl + steps);
  basis.leftCols(nl) = locked;
  Eigen::VectorXd alpha(steps), beta(steps);
  Eigen::VectorXd q = random_unit(n, rng);
  orthogonalize(q, basis, nl);
  q.normalize();
  Eigen::Index m = 0;
  for (; m < steps; ++m) {
    basis.col(nl + m) = q;
    Eigen::VectorXd w = apply(q);
    alpha[m] = q.dot(w);
    orthogonalize(w, basis, nl + m + 1);
    beta[m] = w.norm();
    if (beta[m] < 1e-13 * std::max(1.0, std::abs(alpha[m]))) {
      ++m;
      break;
    }
    q = w / beta[m];
  }
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    T(i, i) = alpha[i];
    if (i + 1 < m) T(i, i + 1) = T(i + 1, i) = beta[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T);
  theta = es.eigenvalues();
  ritz = basis.middleCols(nl, m) * es.eigenvectors();
}

// Rayleigh-Ritz on an orthonormal set of approximate eigenvectors.
Eigensystem refine(const SparseMatrix& H, const Eigen::MatrixXd& V) {
  Eigensystem out;
  if (V.cols() == 0) {
    out.values.resize(0);
    out.vectors.resize(H.rows(), 0);
    return out;
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(V);
  const Eigen::MatrixXd Qm = qr.householderQ() * Eigen::MatrixXd::Identity(V.rows(), V.cols());
  const Eigen::MatrixXd HQ = H * Qm;
  Eigen::MatrixXd small = Qm.transpose() * HQ;
  small = 0.5 * (small + small.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(small);
  out.values = es.eigenvalues();
  out.vectors = Qm * es.eigenvectors();
  return out;
}

struct LuOperator {
  Eigen::SparseLU<SparseMatrix> lu;
  Eigen::VectorXd operator()(const Eigen::VectorXd& x) const { return lu.solve(x); }
};

// Shift-invert Lanczos collecting `target` eigenpairs accepted by `wanted`.
template <typename Wanted>
Eigensystem shift_invert(const SparseMatrix& H, double sigma, std::size_t target,
                         const Wanted& wanted, const WindowSolverOptions& options,
                         bool prefix_only = false) {
  const Eigen::Index n = H.rows();
  LuOperator op;
  op.lu.analyzePattern(shifted(H, sigma));
  op.lu.factorize(shifted(H, sigma));
  if (op.lu.info() != Eigen::Success) {
    throw NonConvergence("shift-invert: factorization of H - sigma failed", 0.0);
  }
  std::mt19937_64 rng(options.seed);
  Eigen::MatrixXd locked(n, 0);
  double worst_residual = 0.0;
  std::size_t stalls = 0;
  Eigen::Index steps = std::min<Eigen::Index>(n, static_cast<Eigen::Index>(2 * target + 30));
  for (std::size_t restart = 0; static_cast<std::size_t>(locked.cols()) < target; ++restart) {
    if (restart >= options.max_restarts) {
      throw NonConvergence("shift-invert Lanczos: found " + std::to_string(locked.cols()) +
                               " of " + std::to_string(target) + " eigenpairs; worst residual " +
                               std::to_string(worst_residual),
                           worst_residual);
    }
    const Eigen::Index room = n - locked.cols();
    Eigen::VectorXd theta;
    Eigen::MatrixXd ritz;
    lanczos(op, n, locked, std::min(steps, room), rng, theta, ritz);
    std::size_t accepted = 0;
    worst_residual = 0.0;
    for (Eigen::Index i = theta.size(); i-- > 0;) {
      if (std::abs(theta[i]) < 1e-300) continue;
      const double lambda = sigma + 1.0 / theta[i];
      if (!wanted(lambda)) continue;
      Eigen::VectorXd x = ritz.col(i);
      orthogonalize(x, locked, locked.cols());
      const double xn = x.norm();
      if (xn < 0.5) continue;
      x /= xn;
      const double rayleigh = x.dot(H * x);
      const double residual = (H * x - rayleigh * x).norm();
      if (residual <= options.residual_tol * (1.0 + std::abs(rayleigh)) && wanted(rayleigh)) {
        locked.conservativeResize(n, locked.cols() + 1);
        locked.col(locked.cols() - 1) = x;
        ++accepted;
        if (static_cast<std::size_t>(locked.cols()) == target) break;
      } else {
        worst_residual = std::max(worst_residual, residual);
        if (prefix_only) break;
      }
    }
    if (accepted == 0) {
      ++stalls;
      steps = std::min<Eigen::Index>(n, steps + 20 + static_cast<Eigen::Index>(stalls) * 10);
    }
  }
  return refine(H, locked);
}

}  // namespace

Eigen::VectorXd dense_eigenvalues(const SparseMatrix& H) {
  const Eigen::MatrixXd dense(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

Eigensystem dense_eigensystem(const SparseMatrix& H) {
  const Eigen::MatrixXd dense(H);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense);
  return {es.eigenvalues(), es.eigenvectors()};
}

std::size_t count_below(const SparseMatrix& H, double shift) {
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(shifted(H, shift));
  if (ldlt.info() != Eigen::Success) {
    throw NonConvergence("count_below: LDL^T factorization failed", 0.0);
  }
  const auto& D = ldlt.vectorD();
  return static_cast<std::size_t>((D.array() < 0.0).count());
}

Eigensystem window_eigensystem(const SparseMatrix& H, double lo, double hi,
                               const WindowSolverOptions& options) {
  if (!(lo <= hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    throw std::invalid_argument("window_eigensystem: window must be a bounded interval");
  }
  const auto n = static_cast<std::size_t>(H.rows());
  if (n <= options.dense_cap) {
    auto full = dense_eigensystem(H);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < full.values.size(); ++i) {
      if (full.values[i] >= lo && full.values[i] <= hi) keep.push_back(i);
    }
    Eigensystem out;
    out.values.resize(static_cast<Eigen::Index>(keep.size()));
    out.vectors.resize(H.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t k = 0; k < keep.size(); ++k) {
      out.values[static_cast<Eigen::Index>(k)] = full.values[keep[k]];
      out.vectors.col(static_cast<Eigen::Index>(k)) = full.vectors.col(keep[k]);
    }
    return out;
  }
  const std::size_t target = count_below(H, std::nextafter(hi, INFINITY)) - count_below(H, lo);
  if (target == 0) return refine(H, Eigen::MatrixXd(H.rows(), 0));
  const double sigma = 0.5 * (lo + hi);
  const double width = 0.5 * (hi - lo);
  return shift_invert(
      H, sigma, target,
      [&](double lambda) { return std::abs(lambda - sigma) <= width * (1 + 1e-12) + 1e-14; },
      options);
}

Eigensystem lowest_eigensystem(const SparseMatrix& H, std::size_t count,
                               const WindowSolverOptions& options) {
  const auto n = static_cast<std::size_t>(H.rows());
  count = std::min(count, n);
  if (n <= options.dense_cap) {
    auto full = dense_eigensystem(H);
    const auto c = static_cast<Eigen::Index>(count);
    return {full.values.head(c), full.vectors.leftCols(c)};
  }
  // Gershgorin lower bound for the shift.
  double lower = INFINITY;
  for (Eigen::Index col = 0; col < H.outerSize(); ++col) {
    double diag = 0.0, off = 0.0;
    for (SparseMatrix::InnerIterator it(H, col); it; ++it) {
      if (it.row() == col) diag = it.value();
      else off += std::abs(it.value());
    }
    lower = std::min(lower, diag - off);
  }
  const double sigma = lower - 1.0;
  // The eigenvalues nearest sigma are the lowest ones; pairs are locked in order of
  // decreasing theta and the result is checked against the inertia count.
  auto out = shift_invert(H, sigma, count, [](double) { return true; }, options, true);
  if (count > 0) {
    const double top = out.values[out.values.size() - 1];
    if (count_below(H, top + 1e-9 * (1.0 + std::abs(top))) < count) {
      throw NonConvergence("lowest_eigensystem: missed an eigenvalue below the last one found",
                           0.0);
    }
  }
  return out;
}

double distance_to_spectrum(const SparseMatrix& H, double E, std::uint64_t seed) {
  LuOperator op;
  op.lu.compute(shifted(H, E));
  if (op.lu.info() != Eigen::Success) return 0.0;
  std::mt19937_64 rng(seed);
  Eigen::VectorXd theta;
  Eigen::MatrixXd ritz;
  const Eigen::Index steps = std::min<Eigen::Index>(H.rows(), 60);
  lanczos(op, H.rows(), Eigen::MatrixXd(H.rows(), 0), steps, rng, theta, ritz);
  const double top = theta.cwiseAbs().maxCoeff();
  if (!std::isfinite(top)) return 0.0;
  return 1.0 / top;
}

}  // namespace mpal
