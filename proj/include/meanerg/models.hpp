#pragma once

#include <Eigen/Dense>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "meanerg/averaging.hpp"
#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"
#include "meanerg/rate_matrix.hpp"

namespace meanerg {

using Params = std::map<std::string, double>;

/// A ready-built state space with its semigroup generator and fixtures.
struct Model {
  std::string name;
  Params params;
  SpacePtr space;
  /// S; for rate models S(1) = e^Q.
  KernelOperator step;
  /// S^{-1} where the model defines a backward scheme.
  std::optional<KernelOperator> backward;
  std::optional<RateMatrix> rates;
  std::vector<SchemeSpec> schemes;
  /// Points away from truncation edges.
  std::vector<std::size_t> probe_points;
  std::map<std::string, BoundedFunction> functions;
  std::map<std::string, SignedMeasure> measures;

  const BoundedFunction& function(const std::string& key) const;
  const SignedMeasure& measure(const std::string& key) const;
  /// Scheme over `step` (Cesaro/Abel) or over the rates (time).
  AverageScheme scheme(const SchemeSpec& spec) const;
  /// Cesaro scheme over `backward`.
  AverageScheme backward_scheme(const SchemeSpec& spec) const;
};

/// Sequences x = (x_1, x_2, ...) in l^1 as measures on {1..N}, c_0 as
/// functions with zero tail. S(x) = (x_1 + x_2, x_3, ...), so that the
/// function-side action is S*(y) = (y_1, y_1, y_2, ...).
Model build_summing_l1(std::size_t n);

/// E = Z u {inf} truncated to {-N..N, inf}, embedded in R by k -> 1 - 1/(k+1)
/// for k >= 0, k -> k for k < 0 and inf -> 1. (Sf)(k) = f(k+1), inf fixed.
/// The forward edge N maps to inf; the backward edge -N leaks. N and inf are
/// tied for continuity.
Model build_z_infinity(std::size_t n);

/// Cycles K_n = {0..n} x {1/n} for n = 1..M and the window {0..W} x {0} of
/// K_0, in R^2. phi rotates each cycle and shifts K_0 to the right; the window
/// edge leaks. (0, 1/M) and (0, 0) are tied for continuity, standing in for
/// a_n -> a_0.
Model build_cycles_line(std::size_t cycles, std::size_t window);

Model build_swap2();
Model build_irreducible_chain(const Eigen::MatrixXd& p, std::string name = "irreducible_chain");
/// P = [[.5, .3, .2], [.2, .6, .2], [.1, .4, .5]].
Model build_irreducible3();
/// Shift k -> k+1 on {-N..N} in R; the right edge leaks.
Model build_shift_z(std::size_t n);
Model build_ctmc(const Eigen::MatrixXd& q, std::string name = "ctmc");
/// Q = [[-1, 1], [1, -1]].
Model build_rate2();

struct ModelInfo {
  std::string name;
  Params defaults;
  std::string summary;
};

const std::vector<ModelInfo>& model_catalog();
/// Builds a catalogued model; missing params take their defaults. Throws
/// DomainError on an unknown name or parameter.
Model build_model(const std::string& name, const Params& params = {});

}  // namespace meanerg
