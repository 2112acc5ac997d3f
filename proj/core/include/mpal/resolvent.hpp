#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mpal/disorder.hpp"
#include "mpal/geometry.hpp"
#include "mpal/hamiltonian.hpp"

namespace mpal {

/// (H - E) is numerically singular: E lies within tolerance of the spectrum.
class ResonantEnergy : public std::runtime_error {
 public:
  ResonantEnergy(double energy, double distance);
  double energy() const { return energy_; }
  double distance() const { return distance_; }

 private:
  double energy_;
  double distance_;
};

/// Sorted eigenvalues of an operator, used to measure dist(E, spec(H)).
struct SpectrumInfo {
  Eigen::VectorXd eigenvalues;

  static SpectrumInfo of(const FiniteVolumeOperator& op);
  double distance(double E) const;
};

struct GreenBlock {
  LatticePoint source;  // v
  LatticePoint target;  // y
  double energy = 0.0;
  double norm = 0.0;    // ||1_{C(v)} G(E) 1_{C(y)}||
};

/// Spectral norm of a small dense block.
double spectral_norm(const Eigen::MatrixXd& block);

/// One sparse LU factorization of H - E, reused for every block query at that energy.
class GreenFunction {
 public:
  /// Throws ResonantEnergy when dist(E, spec) <= resonance_tol * max(1, ||H||).
  GreenFunction(const FiniteVolumeOperator& op, double E, const SpectrumInfo* spectrum = nullptr,
                double resonance_tol = 1e-10);
  ~GreenFunction();
  GreenFunction(GreenFunction&&) noexcept;
  GreenFunction& operator=(GreenFunction&&) noexcept;

  double energy() const { return energy_; }
  double distance_to_spectrum() const { return distance_; }

  /// Columns of G(E) for the given rows (the operator is symmetric).
  Eigen::MatrixXd columns(const std::vector<std::size_t>& cols) const;
  /// Dense block G(E)[rows, cols].
  Eigen::MatrixXd block(const std::vector<std::size_t>& rows,
                        const std::vector<std::size_t>& cols) const;
  GreenBlock cell_block(const LatticePoint& v, const LatticePoint& y) const;

 private:
  struct Impl;
  const FiniteVolumeOperator* op_;
  double energy_;
  double distance_;
  std::unique_ptr<Impl> impl_;
};

GreenBlock green_block_norm(const FiniteVolumeOperator& op, double E, const LatticePoint& v,
                            const LatticePoint& y);

enum class Verdict { NonSingular, Singular };
const char* to_string(Verdict verdict);

struct CubeVerdict {
  MultiCube cube;
  double energy = 0.0;
  double mass = 0.0;
  double threshold = 0.0;  // e^{-mL}
  Verdict verdict = Verdict::NonSingular;
  GreenBlock witness;      // maximal-norm (v, y) pair
  std::size_t blocks = 0;  // number of (v, y) pairs examined
};

struct ClassifyOptions {
  /// Stop at the first block above the threshold; the witness is then that block
  /// rather than the maximum.
  bool stop_at_first_violation = false;
  double resonance_tol = 1e-10;
};

/// Source lattice points B_{floor(L^{2/3})}(u) of the (E,m)-NS test.
std::vector<LatticePoint> core_points(const MultiCube& cube);
/// Target lattice points y of the outer layer with C(y) inside the cube.
std::vector<LatticePoint> outer_cell_points(const MultiCube& cube);

/// (E,m)-NS iff every block from the core to the outer layer has norm <= e^{-mL}.
CubeVerdict classify_cube(const FiniteVolumeOperator& op, double E, double m,
                          const SpectrumInfo* spectrum = nullptr, ClassifyOptions options = {});
CubeVerdict classify_cube(const GreenFunction& green, const FiniteVolumeOperator& op, double m,
                          ClassifyOptions options = {});

/// Wilson score interval at 95% confidence.
struct ProportionInterval {
  double lo = 0.0;
  double hi = 0.0;
};
ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z = 1.959963984540054);

/// Uniform grid of `points` energies on [lo, hi] (both ends included).
std::vector<double> energy_grid(double lo, double hi, std::size_t points);

struct PairSample {
  std::size_t sample_index = 0;
  std::uint64_t seed = 0;
  std::optional<double> failing_energy;  // first grid energy with both cubes singular
  bool x_singular = false;               // singular at some grid energy
  bool y_singular = false;
  bool failure = false;
  bool resonant = false;  // excluded from the counts
  std::string error;      // numerical failure; the sample is quarantined and excluded
};

struct PairSurveyRow {
  std::size_t k = 0;
  std::int64_t L = 0;
  LatticePoint x;
  LatticePoint y;
  std::size_t samples = 0;    // non-resonant samples counted
  std::size_t failures = 0;
  std::size_t resonant = 0;
  std::size_t quarantined = 0;
  double rate = 0.0;
  ProportionInterval wilson;
  double bound = 0.0;  // L_k^{-2p}
  std::vector<PairSample> rows;
};

struct PairSurveyOptions {
  std::size_t workers = 1;
  std::optional<LatticePoint> x;  // default: origin
  std::optional<LatticePoint> y;  // default: (5N L_k + 1) on every coordinate
};

/// 64-bit mix used for every derived seed (splitmix64 finalizer).
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

/// Smallest box of sites covering the required regions of all the cubes.
LatticeBox covering_region(const std::vector<MultiCube>& cubes, double r1);

PairSurveyRow pair_survey(const ModelConfig& model, const ScaleSequence& scales, std::size_t k,
                          const std::vector<double>& energies, double m, std::size_t n_samples,
                          std::uint64_t seed, const PairSurveyOptions& options = {});

/// CSV header and rows: k, L_k, seed, sample_idx, E_fail_or_blank, verdict_x, verdict_y, failure.
void write_survey_csv_header(std::ostream& os);
void write_survey_csv_rows(std::ostream& os, const PairSurveyRow& row);

}  // namespace mpal
