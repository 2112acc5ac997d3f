#include "mpal/dynamics.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>
#include <Eigen/SVD>
#include <nlohmann/json.hpp>

#include "mpal/eigensolver.hpp"

namespace mpal {

MomentObservable MomentObservable::make(double Q, MultiCube K, double eta,
                                        const ModelConfig& model) {
  if (!(Q >= 0.0) || !std::isfinite(Q)) throw std::invalid_argument("moment observable: Q must be >= 0");
  if (K.radius <= 0) throw std::invalid_argument("moment observable: K must be nonempty");
  if (!(eta > 0.0)) throw std::invalid_argument("moment observable: eta must be positive");
  const double rhs = 3.0 * model.N * model.d * ModelConfig::alpha + ModelConfig::alpha * Q;
  if (!(2.0 * model.p > rhs)) {
    throw std::invalid_argument("moment observable: 2p = " + std::to_string(2.0 * model.p) +
                                " does not exceed 3 N d alpha + alpha Q = " + std::to_string(rhs));
  }
  return MomentObservable{Q, std::move(K), eta};
}

Eigen::VectorXd moment_weights(const Grid& grid, double Q) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < grid.size(); ++r) {
    w[static_cast<Eigen::Index>(r)] = Q == 0.0 ? 1.0 : std::pow(grid.abs_norm(r), Q);
  }
  return w;
}

Eigen::VectorXd k_indicator(const Grid& grid, const MultiCube& K) {
  const std::int64_t n = grid.inverse_step();
  Eigen::VectorXd out(static_cast<Eigen::Index>(grid.size()));
  for (std::size_t r = 0; r < grid.size(); ++r) {
    const auto t = grid.ticks(r);
    bool inside = true;
    for (std::size_t i = 0; i < t.size() && inside; ++i) {
      inside = std::abs(t[i] - n * K.center[i]) < n * K.radius;
    }
    out[static_cast<Eigen::Index>(r)] = inside ? 1.0 : 0.0;
  }
  return out;
}

EvolveResult evolve(const std::vector<EigenPair>& pairs, const Eigen::VectorXcd& psi0, double t) {
  EvolveResult out;
  out.state = Eigen::VectorXcd::Zero(psi0.size());
  double captured = 0.0;
  for (const auto& p : pairs) {
    const Eigen::VectorXcd phi = p.vector.cast<std::complex<double>>();
    const std::complex<double> c = phi.dot(psi0);  // conjugates phi
    captured += std::norm(c);
    out.state += std::polar(1.0, -t * p.energy) * c * phi;
  }
  out.projected_norm = std::sqrt(captured);
  out.dropped_mass = std::sqrt(std::max(0.0, psi0.squaredNorm() - captured));
  return out;
}

namespace {

// Upper-triangular R of a thin QR (or the Gram factor when rows < cols).
Eigen::MatrixXd thin_r(const Eigen::MatrixXd& M) {
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(M);
  const Eigen::Index k = std::min(M.rows(), M.cols());
  return qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
}

}  // namespace

double moment_at(const Grid& grid, const std::vector<EigenPair>& pairs,
                 const MomentObservable& obs, const XiDescriptor& xi) {
  const std::size_t count = pairs.size();
  std::vector<std::complex<double>> values(count);
  if (const auto* phase = std::get_if<TimePhase>(&xi)) {
    for (std::size_t n = 0; n < count; ++n) values[n] = std::polar(1.0, -phase->t * pairs[n].energy);
  } else {
    values = std::get<std::vector<std::complex<double>>>(xi);
    if (values.size() != count) throw std::invalid_argument("moment_at: xi table size mismatch");
    for (const auto& v : values) {
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) {
        throw std::invalid_argument("moment_at: xi is unbounded on the window");
      }
    }
  }
  if (count == 0) return 0.0;
  const Eigen::VectorXd weight = moment_weights(grid, obs.Q);
  const Eigen::VectorXd k = k_indicator(grid, obs.K);
  const auto rows = static_cast<Eigen::Index>(grid.size());
  Eigen::MatrixXd P(rows, static_cast<Eigen::Index>(count)), B(rows, static_cast<Eigen::Index>(count));
  for (std::size_t n = 0; n < count; ++n) {
    P.col(static_cast<Eigen::Index>(n)) = weight.cwiseProduct(pairs[n].vector);
    B.col(static_cast<Eigen::Index>(n)) = k.cwiseProduct(pairs[n].vector);
  }
  // ||P D B^T|| = ||R_P D R_B^T|| with P = Q_P R_P and B = Q_B R_B.
  const Eigen::MatrixXcd rp = thin_r(P).cast<std::complex<double>>();
  const Eigen::MatrixXcd rb = thin_r(B).cast<std::complex<double>>();
  Eigen::VectorXcd d(static_cast<Eigen::Index>(count));
  for (std::size_t n = 0; n < count; ++n) d[static_cast<Eigen::Index>(n)] = values[n];
  const Eigen::MatrixXcd core = rp * d.asDiagonal() * rb.transpose();
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(core);
  return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

double pairwise_sum(const std::vector<double>& values) {
  auto rec = [&](auto&& self, std::size_t lo, std::size_t hi) -> double {
    if (hi - lo == 0) return 0.0;
    if (hi - lo == 1) return values[lo];
    const std::size_t mid = lo + (hi - lo) / 2;
    return self(self, lo, mid) + self(self, mid, hi);
  };
  return rec(rec, 0, values.size());
}

std::vector<CorrelatorRow> correlator_rows(const Grid& grid, const std::vector<EigenPair>& pairs,
                                           const MomentObservable& obs) {
  const Eigen::VectorXd weight = moment_weights(grid, obs.Q);
  const Eigen::VectorXd k = k_indicator(grid, obs.K);
  std::vector<CorrelatorRow> rows;
  rows.reserve(pairs.size());
  for (std::size_t n = 0; n < pairs.size(); ++n) {
    const auto& p = pairs[n];
    rows.push_back({n, p.energy, weight.cwiseProduct(p.vector).norm(), k.cwiseProduct(p.vector).norm(),
                    p.centers.empty() ? LatticePoint{} : p.primary_center()});
  }
  return rows;
}

CorrelatorBound correlator_bound(const FiniteVolumeOperator& op, const std::vector<EigenPair>& pairs,
                                 const MomentObservable& obs) {
  const std::size_t expected =
      count_below(op.matrix, std::nextafter(obs.eta, INFINITY)) - count_below(op.matrix, 0.0);
  if (expected != pairs.size()) {
    throw std::invalid_argument("correlator_bound: window holds " + std::to_string(expected) +
                                " eigenvalues but " + std::to_string(pairs.size()) +
                                " pairs were supplied");
  }
  CorrelatorBound out;
  out.rows = correlator_rows(op.grid, pairs, obs);
  std::vector<double> terms;
  terms.reserve(out.rows.size());
  for (const auto& r : out.rows) terms.push_back(r.a * r.b);
  out.bound = pairwise_sum(terms);
  return out;
}

bool AnnulusReport::decaying() const {
  double prev = INFINITY;
  for (const auto& r : rows) {
    if (!r.j || r.subtotal == 0.0) continue;
    if (!(r.subtotal < prev)) return false;
    prev = r.subtotal;
  }
  return true;
}

std::size_t AnnulusReport::nonzero_rows() const {
  std::size_t n = 0;
  for (const auto& r : rows) n += r.subtotal != 0.0 ? 1 : 0;
  return n;
}

AnnulusReport annular_decomposition_report(const std::vector<CorrelatorRow>& rows,
                                           const ScaleSequence& scales, int N, double m) {
  AnnulusReport out;
  const std::size_t brackets = scales.size() > 0 ? scales.size() - 1 : 0;
  std::vector<std::vector<double>> terms(brackets + 2);  // inner, M_0..M_{b-1}, beyond
  std::vector<std::size_t> counts(brackets + 2, 0);
  std::vector<double> all;
  for (const auto& r : rows) {
    std::size_t slot;
    if (auto j = annulus_index(r.center, scales, N)) {
      slot = *j + 1;
    } else {
      const bool inside = scales.size() > 0 && r.center.norm() < 5 * N * scales[0];
      slot = inside ? 0 : brackets + 1;
    }
    terms[slot].push_back(r.a * r.b);
    ++counts[slot];
    all.push_back(r.a * r.b);
  }
  const double fiveN = 5.0 * N;
  for (std::size_t s = 0; s < terms.size(); ++s) {
    AnnulusRow row;
    if (s == 0) {
      row.label = "inner";
      row.outer_radius = scales.size() ? fiveN * static_cast<double>(scales[0]) : 0.0;
    } else if (s == brackets + 1) {
      row.label = "beyond";
      row.inner_radius = brackets ? fiveN * static_cast<double>(scales[brackets]) : 0.0;
      row.outer_radius = INFINITY;
    } else {
      const std::size_t j = s - 1;
      row.label = "M_" + std::to_string(j);
      row.j = j;
      row.inner_radius = fiveN * static_cast<double>(scales[j]);
      row.outer_radius = fiveN * static_cast<double>(scales[j + 1]);
      row.comparison = std::exp(-m * static_cast<double>(scales[j]) / 2.0);
    }
    row.count = counts[s];
    row.subtotal = pairwise_sum(terms[s]);
    out.rows.push_back(std::move(row));
  }
  out.total = pairwise_sum(all);
  return out;
}

void to_json(nlohmann::json& j, const AnnulusReport& report) {
  j = nlohmann::json::array();
  for (const auto& r : report.rows) {
    nlohmann::json row;
    row["label"] = r.label;
    row["j"] = r.j ? nlohmann::json(*r.j) : nlohmann::json(nullptr);
    row["inner_radius"] = r.inner_radius;
    row["outer_radius"] = std::isfinite(r.outer_radius) ? nlohmann::json(r.outer_radius)
                                                        : nlohmann::json("inf");
    row["count"] = r.count;
    row["subtotal"] = r.subtotal;
    row["comparison"] = r.comparison;
    j.push_back(std::move(row));
  }
}

}  // namespace mpal
