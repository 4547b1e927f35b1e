#pragma once

#include <optional>
#include <span>
#include <vector>

#include "meanerg/function.hpp"
#include "meanerg/measure.hpp"

namespace meanerg {

/// <f, mu> = sum_x f(x) mu(x), with escaped mass paired against the tail
/// rule of f. Throws UnresolvedStateError if mu has escaped mass and f has
/// no tail rule.
double pairing(const BoundedFunction& f, const SignedMeasure& mu);

/// Supremum norm over the truncation, including a constant tail.
double sup_norm(const BoundedFunction& f);
/// Total variation, escaped mass included.
double tv_norm(const SignedMeasure& mu);

/// q_phi(f) = ||phi f||_inf.
double strict_seminorm(const BoundedFunction& f, const VanishingWeight& phi);

/// Per exhaustion index m = 1..depth: sup over the family of |mu|(E \ K_m).
/// Escaped mass lies outside every K_m.
struct TightnessProfile {
  std::vector<double> mass_outside;  // mass_outside[m-1] belongs to K_m

  /// Smallest m with mass_outside < eps, if any.
  std::optional<int> tight_index(double eps) const;
};

TightnessProfile tightness_profile(std::span<const SignedMeasure> family, const StateSpace& space);

/// max over enumerated pairs of |f(x) - f(y)| / d(x, y).
double lipschitz_constant(const BoundedFunction& f);

}  // namespace meanerg
