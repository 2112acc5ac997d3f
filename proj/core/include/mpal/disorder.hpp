#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mpal/geometry.hpp"

namespace mpal {

/// Inclusive box of Z^d sites: lo[i] <= s_i <= hi[i].
struct LatticeBox {
  std::vector<std::int64_t> lo;
  std::vector<std::int64_t> hi;

  int dim() const { return static_cast<int>(lo.size()); }
  std::size_t site_count() const;
  bool contains(std::span<const std::int64_t> site) const;
  /// Row-major offset of a site (last axis fastest).
  std::size_t offset(std::span<const std::int64_t> site) const;

  friend bool operator==(const LatticeBox&, const LatticeBox&) = default;
};

/// i.i.d. Uniform[0, v] amplitudes V_s on a lattice box, reproducible from the seed.
struct AlloyField {
  LatticeBox region;
  std::vector<double> amplitudes;  // row-major over region
  std::uint64_t seed = 0;
  double v = 1.0;

  double amplitude(std::span<const std::int64_t> site) const;

  friend bool operator==(const AlloyField&, const AlloyField&) = default;
};

AlloyField sample_field(std::uint64_t seed, const LatticeBox& region, double v);

/// Field with every amplitude set to `value` (test fixtures and the (E5) check).
AlloyField constant_field(const LatticeBox& region, double value, double v);

void to_json(nlohmann::json& j, const AlloyField& field);
void from_json(const nlohmann::json& j, AlloyField& field);

/// Single-site profile phi: `height` times the indicator of the closed max-norm ball
/// of radius `radius`. The declared support diameter bound is r1.
struct BumpFunction {
  double radius = 0.5;
  double height = 1.0;
  double r1 = 1.0;

  /// phi(z), literal closed-ball indicator.
  double value(std::span<const double> z) const;
  /// A.e. representative of phi used for the potential: the half-open box (-r, r]^d,
  /// so boundary ties go to the lexicographically smallest site.
  double cell_value(std::span<const double> z) const;
  double support_diameter() const { return 2.0 * radius; }
};

/// Step interaction: u0 per pair with |x_i - x_j| <= r0, plus an optional three-body
/// step u3 for triples that are pairwise within r0.
struct InteractionSpec {
  double r0 = 1.0;
  double u0 = 1.0;
  double u3 = 0.0;

  double upper_bound(int particles) const;
};

struct ModelConfig {
  int N = 2;
  int d = 1;
  double v = 10.0;
  InteractionSpec interaction;
  BumpFunction bump;
  int grid_inverse_step = 2;  // h = 1 / grid_inverse_step
  double eta = 0.5;
  double m = 0.2;
  double p = 6.0;
  double Q = 1.0;
  std::int64_t L0 = 3;

  static constexpr double alpha = 1.5;
  double h() const { return 1.0 / grid_inverse_step; }
  /// 2p > 3 N d alpha + alpha Q.
  bool moment_condition_holds() const;
};

void to_json(nlohmann::json& j, const ModelConfig& config);
void from_json(const nlohmann::json& j, ModelConfig& config);

/// sum_s V_s phi(x - s) at a point of R^d. Throws std::out_of_range if a contributing
/// site lies outside the field's region.
double single_potential(std::span<const double> x, const AlloyField& field,
                        const BumpFunction& bump);

/// U(x) for a configuration of l particles in R^d (particle-major coordinates).
double interaction_energy(std::span<const double> x, int dim, const InteractionSpec& spec);

/// U(x) + sum_j V(x_j).
double total_potential(std::span<const double> x, int dim, const AlloyField& field,
                       const BumpFunction& bump, const InteractionSpec& spec);

/// max-norm distance between the sub-configurations x_J and x_{J^c}.
double subconfiguration_distance(std::span<const double> x, int dim, const PartitionIndex& J);

/// Sub-configuration x_J (particles in J, original order).
std::vector<double> subconfiguration(std::span<const double> x, int dim, const PartitionIndex& J);

struct AssumptionCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct ValidationReport {
  std::vector<AssumptionCheck> checks;

  bool all_passed() const;
  const AssumptionCheck& at(const std::string& name) const;
};

void to_json(nlohmann::json& j, const ValidationReport& report);

/// Exact check of sum_{s in Λ_L(u) ∩ Z^d} phi(x - s) >= 1 at every grid node of Λ_L(0)
/// with step 1/grid_inverse_step. Returns the number of violating nodes.
std::size_t covering_violations(const BumpFunction& bump, int dim, std::int64_t L,
                                int grid_inverse_step);

/// Executable checks for (E1)-(E5), L0 >= r1 and the moment condition.
ValidationReport validate_assumptions(const ModelConfig& config, std::uint64_t seed = 20100701);

}  // namespace mpal
