#include "mpal/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include <nlohmann/json.hpp>

#include "mpal/resolvent.hpp"

namespace mpal {

std::vector<CellNorm> half_open_cell_norms(const Grid& grid, const Eigen::VectorXd& phi) {
  std::map<LatticePoint, double> squares;
  for (std::size_t row = 0; row < grid.size(); ++row) {
    const double c = phi[static_cast<Eigen::Index>(row)];
    squares[half_open_cell_of(grid, row)] += c * c;
  }
  std::vector<CellNorm> out;
  out.reserve(squares.size());
  for (auto& [cell, sq] : squares) out.push_back({cell, std::sqrt(sq)});
  return out;
}

std::vector<LatticePoint> localization_centers(const std::vector<CellNorm>& cell_norms) {
  double top = 0.0;
  for (const auto& c : cell_norms) top = std::max(top, c.norm);
  std::vector<LatticePoint> out;
  for (const auto& c : cell_norms) {
    if (c.norm >= top - 1e-12) out.push_back(c.cell);
  }
  std::sort(out.begin(), out.end(), [](const LatticePoint& a, const LatticePoint& b) {
    const auto na = a.norm(), nb = b.norm();
    return na != nb ? na < nb : a < b;
  });
  return out;
}

std::vector<LatticePoint> localization_centers(const EigenPair& pair) {
  return localization_centers(pair.cell_norms);
}

std::vector<EigenPair> make_eigenpairs(const Grid& grid, const Eigensystem& system) {
  std::vector<EigenPair> out;
  const auto count = static_cast<std::size_t>(system.values.size());
  out.reserve(count);
  std::size_t cluster = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const auto i = static_cast<Eigen::Index>(k);
    EigenPair pair;
    pair.energy = system.values[i];
    pair.vector = system.vectors.col(i);
    pair.cube_radius = grid.cube().radius;
    pair.cell_norms = half_open_cell_norms(grid, pair.vector);
    pair.centers = localization_centers(pair.cell_norms);
    if (k > 0 && pair.energy - out.back().energy > 1e-10) ++cluster;
    pair.cluster = cluster;
    out.push_back(std::move(pair));
  }
  return out;
}

std::vector<EigenPair> eigenpairs_in_window(const FiniteVolumeOperator& op, double lo, double hi,
                                            const WindowOptions& options) {
  const Eigensystem system = window_eigensystem(op.matrix, lo, hi, options.solver);
  const std::size_t expected =
      count_below(op.matrix, std::nextafter(hi, INFINITY)) - count_below(op.matrix, lo);
  const auto found = static_cast<std::size_t>(system.values.size());
  if (found != expected) {
    throw NonConvergence("eigenpairs_in_window: found " + std::to_string(found) +
                             " eigenvalues in the window, inertia count is " +
                             std::to_string(expected),
                         0.0);
  }
  if (found > 0) {
    const Eigen::MatrixXd gram = system.vectors.transpose() * system.vectors;
    const double drift =
        (gram - Eigen::MatrixXd::Identity(gram.rows(), gram.cols())).cwiseAbs().maxCoeff();
    if (drift > 1e-8) {
      throw NonConvergence("eigenpairs_in_window: eigenvectors not orthonormal", drift);
    }
    double worst = 0.0;
    for (Eigen::Index i = 0; i < system.values.size(); ++i) {
      const double E = system.values[i];
      const double r = (op.matrix * system.vectors.col(i) - E * system.vectors.col(i)).norm();
      worst = std::max(worst, r / (1.0 + std::abs(E)));
    }
    if (worst > 1e-8) throw NonConvergence("eigenpairs_in_window: residual too large", worst);
  }
  if (options.cross_check && op.dim() <= options.solver.dense_cap && found > 0) {
    WindowSolverOptions iterative = options.solver;
    iterative.dense_cap = 0;
    const Eigensystem other = window_eigensystem(op.matrix, lo, hi, iterative);
    if (other.values.size() != system.values.size() ||
        (other.values - system.values).cwiseAbs().maxCoeff() > 1e-8) {
      throw NonConvergence("eigenpairs_in_window: dense and iterative solvers disagree", 0.0);
    }
  }
  return make_eigenpairs(op.grid, system);
}

DecayFit decay_fit(const EigenPair& pair) {
  DecayFit fit;
  if (pair.centers.empty()) return fit;
  const auto& x = pair.primary_center();
  std::map<std::int64_t, double> shells;
  for (const auto& c : pair.cell_norms) {
    const auto r = max_distance(c.cell, x);
    if (r < 2 || r > pair.cube_radius - 2 || !(c.norm > 0.0)) continue;
    auto& slot = shells[r];
    slot = std::max(slot, c.norm);
  }
  fit.shells = shells.size();
  if (shells.size() < 4) return fit;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(shells.size());
  for (const auto& [r, v] : shells) {
    const double xr = static_cast<double>(r), yr = std::log(v);
    sx += xr;
    sy += yr;
    sxx += xr * xr;
    sxy += xr * yr;
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  fit.intercept = (sy - slope * sx) / n;
  double ss = 0.0;
  for (const auto& [r, v] : shells) {
    const double e = std::log(v) - (fit.intercept + slope * static_cast<double>(r));
    ss += e * e;
  }
  fit.fitted = true;
  fit.mass = -slope;
  if (fit.mass == 0.0) fit.mass = 0.0;  // no negative zero in reports
  fit.residual = std::sqrt(ss / n);
  fit.r_min = shells.begin()->first;
  fit.r_max = shells.rbegin()->first;
  return fit;
}

namespace {

// Max-norm of (node - u) in units of h.
std::int64_t tick_distance(const Grid& grid, std::size_t row, const LatticePoint& u) {
  const auto t = grid.ticks(row);
  std::int64_t out = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    out = std::max(out, std::abs(t[i] - grid.inverse_step() * u[i]));
  }
  return out;
}

}  // namespace

EdiReport edi_check(const FiniteVolumeOperator& big_op, const EigenPair& pair,
                    const FiniteVolumeOperator& inner_op, const LatticePoint& w,
                    double resonance_tol) {
  const auto& big = big_op.grid.cube();
  const auto& inner = inner_op.grid.cube();
  const std::int64_t n = big_op.grid.inverse_step();
  if (inner_op.grid.inverse_step() != n) throw std::invalid_argument("edi_check: grid steps differ");
  if (inner.radius <= 7) throw std::invalid_argument("edi_check: inner radius must exceed 7");
  if (max_distance(inner.center, big.center) + inner.radius > big.radius) {
    throw std::invalid_argument("edi_check: inner cube not inside the big cube");
  }
  const auto interior = cube_regions(inner).interior;
  if (!interior.contains_cell(w)) {
    throw std::invalid_argument("edi_check: C(w) is not inside the interior of the inner cube");
  }
  EdiReport out;
  const auto cell_rows = restrict_to_cells(big_op.grid, w);
  double lhs = 0.0;
  for (auto r : cell_rows) lhs += pair.vector[static_cast<Eigen::Index>(r)] * pair.vector[static_cast<Eigen::Index>(r)];
  out.lhs = std::sqrt(lhs);

  const std::int64_t inner_edge = (inner.radius - 2) * n;
  const std::int64_t outer_edge = inner.radius * n;
  double mass = 0.0;
  for (std::size_t r = 0; r < big_op.grid.size(); ++r) {
    const auto t = tick_distance(big_op.grid, r, inner.center);
    if (t >= inner_edge && t < outer_edge) {
      const double c = pair.vector[static_cast<Eigen::Index>(r)];
      mass += c * c;
    }
  }
  out.outer_mass = std::sqrt(mass);

  try {
    const GreenFunction green(inner_op, pair.energy, nullptr, resonance_tol);
    std::vector<std::size_t> layer;
    for (std::size_t r = 0; r < inner_op.grid.size(); ++r) {
      if (tick_distance(inner_op.grid, r, inner.center) >= inner_edge) layer.push_back(r);
    }
    out.green_norm = spectral_norm(green.block(layer, restrict_to_cells(inner_op.grid, w)));
  } catch (const ResonantEnergy&) {
    out.skipped = true;
    return out;
  }
  out.rhs_core = out.green_norm * out.outer_mass;
  if (out.lhs == 0.0) {
    out.ratio = 0.0;
  } else {
    out.ratio = out.rhs_core > 0.0 ? out.lhs / out.rhs_core : INFINITY;
  }
  return out;
}

double mass_concentration(const Grid& grid, const EigenPair& pair, double R) {
  double tail = 0.0;
  for (std::size_t r = 0; r < grid.size(); ++r) {
    if (grid.abs_norm(r) >= R) {
      const double c = pair.vector[static_cast<Eigen::Index>(r)];
      tail += c * c;
    }
  }
  return std::sqrt(tail);
}

std::size_t center_count(const std::vector<EigenPair>& pairs, std::int64_t radius) {
  return static_cast<std::size_t>(std::count_if(pairs.begin(), pairs.end(), [&](const EigenPair& p) {
    return !p.centers.empty() && p.primary_center().norm() <= radius;
  }));
}

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0, n = 0;
  for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
    if (!(x[i] > 0.0 && y[i] > 0.0)) continue;
    const double a = std::log(x[i]), b = std::log(y[i]);
    sx += a;
    sy += b;
    sxx += a * a;
    sxy += a * b;
    n += 1;
  }
  const double den = n * sxx - sx * sx;
  if (n < 2 || den == 0.0) return NAN;
  return (n * sxy - sx * sy) / den;
}

nlohmann::json eigen_report_line(const Grid& grid, const EigenPair& pair,
                                 const std::vector<std::int64_t>& radii) {
  nlohmann::json j;
  j["E_n"] = pair.energy;
  j["cluster"] = pair.cluster;
  j["center"] = std::vector<std::int64_t>(pair.primary_center().coords().begin(),
                                          pair.primary_center().coords().end());
  j["n_centers"] = pair.centers.size();
  const auto fit = decay_fit(pair);
  j["m_hat"] = fit.fitted ? nlohmann::json(fit.mass) : nlohmann::json(nullptr);
  j["cell_convention"] = "half-open";
  nlohmann::json tails = nlohmann::json::object();
  for (auto R : radii) tails[std::to_string(R)] = mass_concentration(grid, pair, static_cast<double>(R));
  j["tail_mass_by_R"] = std::move(tails);
  return j;
}

}  // namespace mpal
