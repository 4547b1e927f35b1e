#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meanerg/averaging.hpp"
#include "meanerg/fixed_space.hpp"
#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"

namespace meanerg {

enum class Topology { sigma, sigma_prime, beta0 };

std::string topology_name(Topology t);
/// Accepts "sigma", "sigma_prime" and "beta0".
Topology parse_topology(const std::string& name);

/// Lagrange weights of the interpolation polynomial through (h_k, .) evaluated
/// at h = 0.
std::vector<double> richardson_weights(std::span<const double> h);

/// Bump functions y -> max(0, 1 - d(c, y)) at every state c, tail zero.
std::vector<BoundedFunction> bump_dictionary(const SpacePtr& space);
/// Indicator weights of K_1, ..., K_depth.
std::vector<VanishingWeight> exhaustion_weights(const SpacePtr& space);

struct ProjectionOptions {
  Topology topology = Topology::sigma_prime;
  /// Successive extrapolated limits must differ by at most plateau_tol across
  /// plateau_window consecutive grid points (plateau_window - 1 distances).
  double plateau_tol = 1e-6;
  std::size_t plateau_window = 5;
  /// Degree of the polynomial in h used for extrapolation; 0 uses raw averages.
  std::size_t extrapolation_order = 2;
  double invariant_tol = 1e-8;
  /// sigma and beta0 probes; empty means bump_dictionary.
  std::vector<BoundedFunction> function_probes;
  /// beta0 weights; empty means exhaustion_weights.
  std::vector<VanishingWeight> weights;
  /// Rows with larger support use the total-variation upper bound of bl.
  std::size_t bl_exact_support = 40;
};

struct ProjectionInvariants {
  double idempotent = 0.0;          // ||P^2 - P||
  std::vector<double> left;         // ||P S - P|| per generator
  std::vector<double> right;        // ||S P - P|| per generator
  double tolerance = 0.0;
  bool ok = false;
};

/// Operator-norm residuals of P^2 = P and PS = SP = P.
ProjectionInvariants projection_invariants_check(const KernelOperator& p, std::span<const KernelOperator> generators,
                                                 double tol = 1e-8);

/// Estimated ergodic projection.
///
/// Averages A_i are formed at every grid point and extrapolated to h = 0 from
/// the last extrapolation_order + 1 points. The estimate is certified once the
/// chosen distance between successive extrapolants stays below plateau_tol
/// across plateau_window grid points and the projection invariants hold. A
/// plateau of the raw averages is accepted when the extrapolants have none. A plateau is
/// a finite-sample criterion and does not prove that the limit exists.
struct ProjectionEstimate {
  enum class Status { certified, inconclusive };

  Status status = Status::inconclusive;
  Topology topology = Topology::sigma_prime;
  /// Last extrapolant inside the plateau window, or the last one overall when
  /// inconclusive.
  std::optional<KernelOperator> projection;
  std::vector<double> grid;
  /// Distance between successive raw averages (NaN at index 0).
  std::vector<double> raw_distance;
  /// Distance between successive extrapolants (NaN until two exist).
  std::vector<double> extrapolated_distance;
  std::optional<std::size_t> plateau_end;
  ProjectionInvariants invariants;
  std::vector<std::string> notes;

  bool certified() const noexcept { return status == Status::certified; }
  std::string status_name() const;
};

ProjectionEstimate estimate_projection(const AverageScheme& scheme, const ProjectionOptions& opts = {});

/// ||A_alpha - P|| along the grid and a least-squares fit of
/// log error = intercept + slope * log index over indices in [lo, hi].
struct DecayFit {
  std::vector<double> index;
  std::vector<double> error;
  double slope = 0.0;
  double intercept = 0.0;
  /// max of error * index over the fitted range.
  double constant = 0.0;
  std::size_t points = 0;
};

DecayFit fit_decay(const AverageScheme& scheme, const KernelOperator& p, double lo, double hi);

struct DecompositionOptions {
  /// Generators (I - S^k) e_j for k = 1..max_power, states in exhaustion order.
  std::size_t max_power = 1;
  /// Generator counts at which the residual is reported; empty means 0, 1, 2, 4, ..., all.
  std::vector<std::size_t> counts;
  double tol = 1e-8;
};

/// Least-squares residual of x - Px against growing sets of range
/// generators. A residual that decays to 0 supports x in
/// fix + span rg(I - S); one bounded away from 0 at every truncation is
/// evidence against it.
struct DecompositionReport {
  std::vector<std::size_t> counts;
  std::vector<double> residuals;
  /// ||Px|| (with a projection) or the norm of the fixed-space component (with a basis).
  double fixed_component = 0.0;
  bool passes = false;
};

DecompositionReport decomposition_check(const BoundedFunction& f, const KernelOperator& s, const KernelOperator& p,
                                        const DecompositionOptions& opts = {});
DecompositionReport decomposition_check(const SignedMeasure& mu, const KernelOperator& s, const KernelOperator& p,
                                        const DecompositionOptions& opts = {});
/// Without a projection: least squares against the fixed basis and the generators jointly.
DecompositionReport decomposition_check(const SignedMeasure& mu, const KernelOperator& s,
                                        const FixedSpaceBasis& basis, const DecompositionOptions& opts = {});

/// Pairing obstruction for a decomposition attempt mu = sum a_n m_n + range part.
/// Fixed functions annihilate the range part, so <g_i, candidate> must match
/// <g_i, target> for every fixed g_i; `test` is a fixed function whose
/// pairing with the target cannot be reached by such a candidate.
struct ObstructionVerdict {
  Eigen::VectorXd candidate_pairings;
  Eigen::VectorXd target_pairings;
  double mismatch = 0.0;
  double test_pairing = 0.0;
  double target_test_pairing = 0.0;
  bool matches = false;
  bool obstructs = false;
};

ObstructionVerdict obstruction_witness(const SignedMeasure& candidate, const SignedMeasure& target,
                                       std::span<const BoundedFunction> fixed_functions, const BoundedFunction& test,
                                       double match_tol = 1e-9, double gap_floor = 0.5);

/// Random candidates sum a_n m_n + sum_j c_j (I - S') nu_j with a solved from
/// the pairing system so that they match the target on the fixed functions,
/// up to a perturbation far below match_tol.
struct ObstructionSweep {
  std::size_t candidates = 0;
  std::size_t matching = 0;
  double max_mismatch = 0.0;
  /// max |<test, candidate>| over matching candidates.
  double max_test_pairing = 0.0;
  double target_test_pairing = 0.0;
  /// min |<test, candidate> - <test, target>| over matching candidates.
  double min_gap = 0.0;
  bool certified = false;
};

ObstructionSweep obstruction_sweep(const KernelOperator& s, const FixedSpaceBasis& measure_basis,
                                   std::span<const BoundedFunction> fixed_functions, const SignedMeasure& target,
                                   const BoundedFunction& test, std::size_t count, std::uint64_t seed,
                                   double match_tol = 1e-9, double gap_floor = 0.5);

}  // namespace meanerg
