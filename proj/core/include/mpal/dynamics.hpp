#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json_fwd.hpp>

#include "mpal/disorder.hpp"
#include "mpal/geometry.hpp"
#include "mpal/hamiltonian.hpp"
#include "mpal/spectral.hpp"

namespace mpal {

/// X^Q restricted by K = Λ_r(c) and the window I(η) = [0, η].
struct MomentObservable {
  double Q = 1.0;
  MultiCube K;
  double eta = 0.5;

  /// Validates Q >= 0 (Q = 0 is the degenerate identity weight), K nonempty and the moment
  /// condition 2p > 3 N d alpha + alpha Q for the model's p. Throws std::invalid_argument.
  static MomentObservable make(double Q, MultiCube K, double eta, const ModelConfig& model);
};

/// Weight |x|^Q of every grid node (max-norm of the absolute position).
Eigen::VectorXd moment_weights(const Grid& grid, double Q);
/// 1 on nodes inside the open cube K, else 0.
Eigen::VectorXd k_indicator(const Grid& grid, const MultiCube& K);

struct EvolveResult {
  Eigen::VectorXcd state;
  double projected_norm = 0.0;  // ||P_I psi0||
  double dropped_mass = 0.0;    // ||(1 - P_I) psi0||
};

/// sum_n e^{-i t E_n} <Phi_n, psi0> Phi_n over the given pairs.
EvolveResult evolve(const std::vector<EigenPair>& pairs, const Eigen::VectorXcd& psi0, double t);

/// xi(H) on the window: a time (xi = e^{-itE}) or values tabulated at each E_n.
struct TimePhase {
  double t = 0.0;
};
using XiDescriptor = std::variant<TimePhase, std::vector<std::complex<double>>>;

/// ||X^Q xi(H) P_I 1_K|| from the finite spectral decomposition. Throws
/// std::invalid_argument for non-finite tabulated values or a size mismatch.
double moment_at(const Grid& grid, const std::vector<EigenPair>& pairs,
                 const MomentObservable& obs, const XiDescriptor& xi);

struct CorrelatorRow {
  std::size_t n = 0;
  double energy = 0.0;
  double a = 0.0;  // ||X^Q Phi_n||
  double b = 0.0;  // ||1_K Phi_n||
  LatticePoint center;
};

struct CorrelatorBound {
  double bound = 0.0;
  std::vector<CorrelatorRow> rows;
};

/// Sum with a fixed pairwise tree shape.
double pairwise_sum(const std::vector<double>& values);

std::vector<CorrelatorRow> correlator_rows(const Grid& grid, const std::vector<EigenPair>& pairs,
                                           const MomentObservable& obs);

/// sum_n a_n b_n. Throws std::invalid_argument if the number of pairs differs from the
/// inertia count of eigenvalues in [0, η].
CorrelatorBound correlator_bound(const FiniteVolumeOperator& op, const std::vector<EigenPair>& pairs,
                                 const MomentObservable& obs);

struct AnnulusRow {
  std::string label;                  // "inner", "M_j", or "beyond"
  std::optional<std::size_t> j;       // annulus index for M_j rows
  double inner_radius = 0.0;          // 5 N L_j (0 for "inner")
  double outer_radius = 0.0;          // 5 N L_{j+1} (inf for "beyond")
  std::size_t count = 0;
  double subtotal = 0.0;
  double comparison = 0.0;            // e^{-m L_j / 2}, 0 when not applicable
};

struct AnnulusReport {
  std::vector<AnnulusRow> rows;  // inner, M_0, M_1, ..., beyond
  double total = 0.0;

  /// Subtotals of the M_j rows are strictly decreasing over consecutive nonzero rows.
  /// A report with fewer than two nonzero rows counts as decaying.
  bool decaying() const;
  std::size_t nonzero_rows() const;
};

/// Splits the correlator terms by the annulus containing the primary center.
AnnulusReport annular_decomposition_report(const std::vector<CorrelatorRow>& rows,
                                           const ScaleSequence& scales, int N, double m);

void to_json(nlohmann::json& j, const AnnulusReport& report);

}  // namespace mpal
