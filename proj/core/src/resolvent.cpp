#include "mpal/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>
#include <unordered_map>

#include <Eigen/SVD>
#include <Eigen/SparseLU>

#include "mpal/eigensolver.hpp"
#include "mpal/format.hpp"
#include "mpal/parallel.hpp"

namespace mpal {

namespace {

std::string describe_resonance(double E, double dist) {
  std::ostringstream os;
  os << "energy resonant: E = " << E << " lies within " << dist << " of the spectrum";
  return os.str();
}

double operator_scale(const SparseMatrix& H) {
  Eigen::VectorXd row_sums = Eigen::VectorXd::Zero(H.rows());
  for (Eigen::Index col = 0; col < H.outerSize(); ++col) {
    for (SparseMatrix::InnerIterator it(H, col); it; ++it) row_sums[it.row()] += std::abs(it.value());
  }
  return std::max(1.0, row_sums.size() ? row_sums.maxCoeff() : 0.0);
}

}  // namespace

ResonantEnergy::ResonantEnergy(double energy, double distance)
    : std::runtime_error(describe_resonance(energy, distance)),
      energy_(energy),
      distance_(distance) {}

SpectrumInfo SpectrumInfo::of(const FiniteVolumeOperator& op) {
  return SpectrumInfo{dense_eigenvalues(op.matrix)};
}

double SpectrumInfo::distance(double E) const {
  if (eigenvalues.size() == 0) return INFINITY;
  return (eigenvalues.array() - E).abs().minCoeff();
}

double spectral_norm(const Eigen::MatrixXd& block) {
  if (block.size() == 0) return 0.0;
  if (block.rows() == 1 || block.cols() == 1) return block.norm();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(block);
  return svd.singularValues()(0);
}

struct GreenFunction::Impl {
  Eigen::SparseLU<SparseMatrix> lu;
};

GreenFunction::GreenFunction(const FiniteVolumeOperator& op, double E, const SpectrumInfo* spectrum,
                             double resonance_tol)
    : op_(&op), energy_(E), distance_(0.0), impl_(std::make_unique<Impl>()) {
  SparseMatrix I(op.matrix.rows(), op.matrix.cols());
  I.setIdentity();
  SparseMatrix K = op.matrix - E * I;
  K.makeCompressed();
  impl_->lu.compute(K);
  const double tol = resonance_tol * operator_scale(op.matrix);
  if (impl_->lu.info() != Eigen::Success) throw ResonantEnergy(E, 0.0);
  if (spectrum != nullptr && spectrum->eigenvalues.size() == static_cast<Eigen::Index>(op.dim())) {
    distance_ = spectrum->distance(E);
  } else {
    // Largest |theta| of (H - E)^{-1} from a short Lanczos run on the factorization.
    const Eigen::Index n = op.matrix.rows();
    std::mt19937_64 rng(0x5eedULL ^ op.field_seed);
    std::normal_distribution<double> gauss;
    Eigen::VectorXd q(n);
    for (Eigen::Index i = 0; i < n; ++i) q[i] = gauss(rng);
    q.normalize();
    const Eigen::Index steps = std::min<Eigen::Index>(n, 60);
    Eigen::MatrixXd basis(n, steps);
    Eigen::VectorXd alpha(steps), beta(steps);
    Eigen::Index m = 0;
    for (; m < steps; ++m) {
      basis.col(m) = q;
      Eigen::VectorXd w = impl_->lu.solve(q);
      alpha[m] = q.dot(w);
      for (int pass = 0; pass < 2; ++pass) w -= basis.leftCols(m + 1) * (basis.leftCols(m + 1).transpose() * w);
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
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(T, Eigen::EigenvaluesOnly);
    const double top = es.eigenvalues().cwiseAbs().maxCoeff();
    distance_ = std::isfinite(top) && top > 0 ? 1.0 / top : 0.0;
  }
  if (!(distance_ > tol)) throw ResonantEnergy(E, distance_);
}

GreenFunction::~GreenFunction() = default;
GreenFunction::GreenFunction(GreenFunction&&) noexcept = default;
GreenFunction& GreenFunction::operator=(GreenFunction&&) noexcept = default;

Eigen::MatrixXd GreenFunction::columns(const std::vector<std::size_t>& cols) const {
  const Eigen::Index n = op_->matrix.rows();
  Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n, static_cast<Eigen::Index>(cols.size()));
  for (std::size_t k = 0; k < cols.size(); ++k) {
    rhs(static_cast<Eigen::Index>(cols[k]), static_cast<Eigen::Index>(k)) = 1.0;
  }
  return impl_->lu.solve(rhs);
}

Eigen::MatrixXd GreenFunction::block(const std::vector<std::size_t>& rows,
                                     const std::vector<std::size_t>& cols) const {
  const Eigen::MatrixXd G = columns(cols);
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.row(static_cast<Eigen::Index>(r)) = G.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

GreenBlock GreenFunction::cell_block(const LatticePoint& v, const LatticePoint& y) const {
  const auto rows = restrict_to_cells(op_->grid, v);
  const auto cols = restrict_to_cells(op_->grid, y);
  return GreenBlock{v, y, energy_, spectral_norm(block(rows, cols))};
}

GreenBlock green_block_norm(const FiniteVolumeOperator& op, double E, const LatticePoint& v,
                            const LatticePoint& y) {
  const GreenFunction green(op, E);
  return green.cell_block(v, y);
}

const char* to_string(Verdict verdict) {
  return verdict == Verdict::NonSingular ? "NS" : "S";
}

std::vector<LatticePoint> core_points(const MultiCube& cube) {
  return lattice_ball(cube.center, core_radius(cube.radius));
}

std::vector<LatticePoint> outer_cell_points(const MultiCube& cube) {
  std::vector<LatticePoint> out;
  for (auto& z : lattice_ball(cube.center, cube.radius - 1)) {
    if (max_distance(z, cube.center) >= cube.radius - 2) out.push_back(std::move(z));
  }
  return out;
}

CubeVerdict classify_cube(const GreenFunction& green, const FiniteVolumeOperator& op, double m,
                          ClassifyOptions options) {
  const auto& cube = op.grid.cube();
  if (cube.radius < 2) throw std::invalid_argument("classify_cube: cube radius must be >= 2");
  CubeVerdict out;
  out.cube = cube;
  out.energy = green.energy();
  out.mass = m;
  out.threshold = std::exp(-m * static_cast<double>(cube.radius));

  const auto sources = core_points(cube);
  const auto targets = outer_cell_points(cube);
  const auto cols = restrict_to_cells(op.grid, targets);
  std::unordered_map<std::size_t, Eigen::Index> col_pos;
  for (std::size_t k = 0; k < cols.size(); ++k) col_pos.emplace(cols[k], static_cast<Eigen::Index>(k));
  const Eigen::MatrixXd G = green.columns(cols);

  std::vector<std::vector<Eigen::Index>> target_cols;
  target_cols.reserve(targets.size());
  for (const auto& y : targets) {
    std::vector<Eigen::Index> idx;
    for (auto r : restrict_to_cells(op.grid, y)) idx.push_back(col_pos.at(r));
    target_cols.push_back(std::move(idx));
  }

  double worst = -1.0;
  Eigen::MatrixXd blk;
  for (const auto& v : sources) {
    std::vector<Eigen::Index> rows;
    for (auto r : restrict_to_cells(op.grid, v)) rows.push_back(static_cast<Eigen::Index>(r));
    for (std::size_t t = 0; t < targets.size(); ++t) {
      blk = G(rows, target_cols[t]);
      ++out.blocks;
      // ||B||_2 <= ||B||_F: the SVD only matters when it can move the maximum.
      const double frob = blk.norm();
      const double bar = options.stop_at_first_violation ? out.threshold : worst;
      if (frob <= bar && worst >= 0.0) continue;
      const double norm = spectral_norm(blk);
      if (norm > worst) {
        worst = norm;
        out.witness = GreenBlock{v, targets[t], green.energy(), norm};
      }
      if (options.stop_at_first_violation && norm > out.threshold) {
        out.verdict = Verdict::Singular;
        return out;
      }
    }
  }
  out.verdict = worst > out.threshold ? Verdict::Singular : Verdict::NonSingular;
  return out;
}

CubeVerdict classify_cube(const FiniteVolumeOperator& op, double E, double m,
                          const SpectrumInfo* spectrum, ClassifyOptions options) {
  const GreenFunction green(op, E, spectrum, options.resonance_tol);
  return classify_cube(green, op, m, options);
}

ProportionInterval wilson_interval(std::size_t successes, std::size_t trials, double z) {
  if (trials == 0) return {0.0, 0.0};
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z / denom * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

std::vector<double> energy_grid(double lo, double hi, std::size_t points) {
  std::vector<double> out;
  if (points == 0) return out;
  if (points == 1) return {lo};
  out.reserve(points);
  for (std::size_t i = 0; i < points; ++i) {
    out.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1));
  }
  return out;
}

std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

LatticeBox covering_region(const std::vector<MultiCube>& cubes, double r1) {
  if (cubes.empty()) throw std::invalid_argument("covering_region: no cubes");
  LatticeBox box = required_field_region(cubes.front(), r1);
  for (std::size_t c = 1; c < cubes.size(); ++c) {
    const auto b = required_field_region(cubes[c], r1);
    for (std::size_t i = 0; i < box.lo.size(); ++i) {
      box.lo[i] = std::min(box.lo[i], b.lo[i]);
      box.hi[i] = std::max(box.hi[i], b.hi[i]);
    }
  }
  return box;
}

PairSurveyRow pair_survey(const ModelConfig& model, const ScaleSequence& scales, std::size_t k,
                          const std::vector<double>& energies, double m, std::size_t n_samples,
                          std::uint64_t seed, const PairSurveyOptions& options) {
  PairSurveyRow out;
  out.k = k;
  out.L = scales[k];
  out.x = options.x.value_or(LatticePoint::origin(model.N, model.d));
  if (options.y) {
    out.y = *options.y;
  } else {
    out.y = LatticePoint(model.N, model.d,
                         std::vector<std::int64_t>(static_cast<std::size_t>(model.N * model.d),
                                                   5 * model.N * out.L + 1));
  }
  const MultiCube cube_x{out.x, out.L};
  const MultiCube cube_y{out.y, out.L};
  if (!are_separable(cube_x, cube_y, Rational::from_double(model.bump.r1))) {
    throw std::invalid_argument("pair_survey: cubes at " + out.x.to_string() + " and " +
                                out.y.to_string() + " are not separable");
  }
  out.bound = std::pow(static_cast<double>(out.L), -2.0 * model.p);
  const auto region = covering_region({cube_x, cube_y}, model.bump.r1);
  const std::uint64_t scale_seed = mix_seed(seed, k);

  out.rows.resize(n_samples);
  parallel_for_index(n_samples, options.workers, [&](std::size_t i) {
    PairSample& row = out.rows[i];
    row.sample_index = i;
    row.seed = mix_seed(scale_seed, i);
    const ClassifyOptions fast{true};
    try {
      const auto field = sample_field(row.seed, region, model.v);
      const auto op_x = assemble(cube_x, field, model);
      const auto op_y = assemble(cube_y, field, model);
      const auto spec_x = SpectrumInfo::of(op_x);
      const auto spec_y = SpectrumInfo::of(op_y);
      for (double E : energies) {
        const bool sx =
            classify_cube(op_x, E, m, &spec_x, fast).verdict == Verdict::Singular;
        const bool sy =
            classify_cube(op_y, E, m, &spec_y, fast).verdict == Verdict::Singular;
        row.x_singular = row.x_singular || sx;
        row.y_singular = row.y_singular || sy;
        if (sx && sy && !row.failure) {
          row.failure = true;
          row.failing_energy = E;
        }
      }
    } catch (const ResonantEnergy&) {
      row = PairSample{i, row.seed, std::nullopt, false, false, false, true, {}};
    } catch (const std::exception& e) {
      row = PairSample{i, row.seed, std::nullopt, false, false, false, false, e.what()};
    }
  });
  for (const auto& row : out.rows) {
    if (row.resonant) {
      ++out.resonant;
      continue;
    }
    if (!row.error.empty()) {
      ++out.quarantined;
      continue;
    }
    ++out.samples;
    if (row.failure) ++out.failures;
  }
  out.rate = out.samples ? static_cast<double>(out.failures) / static_cast<double>(out.samples) : 0.0;
  out.wilson = wilson_interval(out.failures, out.samples);
  return out;
}

void write_survey_csv_header(std::ostream& os) {
  os << "k,L_k,seed,sample_idx,E_fail_or_blank,verdict_x,verdict_y,failure\n";
}

void write_survey_csv_rows(std::ostream& os, const PairSurveyRow& row) {
  for (const auto& s : row.rows) {
    os << row.k << ',' << row.L << ',' << s.seed << ',' << s.sample_index << ',';
    if (s.failing_energy) os << format_double(*s.failing_energy);
    if (s.resonant) {
      os << ",R,R,0\n";
      continue;
    }
    if (!s.error.empty()) {
      os << ",Q,Q,0\n";
      continue;
    }
    os << ',' << (s.x_singular ? "S" : "NS") << ',' << (s.y_singular ? "S" : "NS") << ','
       << (s.failure ? 1 : 0) << '\n';
  }
}

}  // namespace mpal
