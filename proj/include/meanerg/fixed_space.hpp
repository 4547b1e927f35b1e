#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"

namespace meanerg {

enum class Side { function, measure };

std::string side_name(Side side);

struct FixedSpaceOptions {
  /// Singular values at or below relative_threshold * sigma_max span the null space.
  double relative_threshold = 1e-8;
  /// Every basis element must satisfy ||(I - S) b|| <= residual_tol.
  double residual_tol = 1e-10;
};

/// Numerical fixed space of a family of kernel operators on one side of the
/// dual pair.
///
/// Function side: unknowns are constant on continuity-tie classes, and rows
/// whose kernel leaks mass outside the truncation are left out, since
/// (Sf)(x) there depends on values that are not enumerated. Measure side: the
/// escaped mass of S'mu must vanish as well.
///
/// The basis is in reduced row echelon form over the states (pivot entries 1),
/// so disjointly supported generators such as indicators come out exactly.
/// Measures are then rescaled to unit total mass where that mass is nonzero.
struct FixedSpaceBasis {
  Side side = Side::function;
  std::vector<BoundedFunction> functions;
  std::vector<SignedMeasure> measures;
  /// ||(I - S) b|| per element, sup norm on resolved rows or total variation.
  std::vector<double> residuals;
  /// Singular values of the stacked constraint matrix, descending.
  Eigen::VectorXd singular_values;
  double threshold = 0.0;
  /// Leaking rows dropped from the function-side equations.
  std::vector<std::string> unresolved_states;
  std::vector<std::string> warnings;

  std::size_t dimension() const noexcept { return side == Side::function ? functions.size() : measures.size(); }
  bool residuals_ok(double tol) const;
  /// Values (functions) or weights (measures) as columns.
  Eigen::MatrixXd matrix() const;
};

FixedSpaceBasis fixed_space(std::span<const KernelOperator> generators, Side side,
                            const FixedSpaceOptions& opts = {});
FixedSpaceBasis fixed_space(const KernelOperator& s, Side side, const FixedSpaceOptions& opts = {});

struct SeparationVerdict {
  /// G(i, j) = <b_i, m_j>.
  Eigen::MatrixXd gram;
  /// fix(S') separates fix(S): no nonzero fixed function is annihilated by all fixed measures.
  bool measures_separate_functions = false;
  /// fix(S) separates fix(S').
  bool functions_separate_measures = false;
  /// Smallest relevant singular value of G; 0 when the dimensions already forbid separation.
  double function_margin = 0.0;
  double measure_margin = 0.0;

  bool both() const noexcept { return measures_separate_functions && functions_separate_measures; }
};

SeparationVerdict separation_test(const FixedSpaceBasis& functions, const FixedSpaceBasis& measures,
                                  double rank_tol = 1e-10);

/// Smallest principal angle between fix and span{(I - S)e_j} (function side)
/// or span{(I - S')delta_j} (measure side, escaped mass as an extra coordinate).
struct SumDirectness {
  double max_cosine = 0.0;
  double angle = 0.0;
  std::size_t range_rank = 0;
  bool direct = false;
};

SumDirectness sum_directness(const KernelOperator& s, const FixedSpaceBasis& basis, double cos_tol = 1e-8);

}  // namespace meanerg
