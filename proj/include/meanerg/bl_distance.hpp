#pragma once

#include <cstddef>
#include <span>

#include "meanerg/function.hpp"
#include "meanerg/measure.hpp"

namespace meanerg {

struct BlOptions {
  /// Largest union of supports handled by the exact LP.
  std::size_t max_exact_support = 160;
};

/// Bounded-Lipschitz distance
///   sup { <f, mu - nu> : |f| <= 1, |f(x) - f(y)| <= d(x, y) }
/// solved exactly as a linear program on the union of supports. A function
/// feasible on the support extends to the whole space (McShane extension,
/// clipped to [-1, 1]), so nothing is lost by the restriction.
///
/// Both measures must be finitely supported (no escaped mass). Throws
/// SolverError when the support exceeds `max_exact_support`; use bl_bounds
/// there.
double bl_distance(const SignedMeasure& mu, const SignedMeasure& nu, const BlOptions& opts = {});

struct BlBounds {
  double lower = 0.0;
  double upper = 0.0;
  bool exact = false;
};

/// Two-sided bounds without the LP: the lower bound is the best pairing over
/// a dictionary of unit bounded-Lipschitz test functions (Lipschitz bumps at
/// support points, the constant function, and a rescaled sign pattern); the
/// upper bound is the total variation of mu - nu. Falls back to the exact LP
/// when the support is small enough and the bounds do not already agree.
BlBounds bl_bounds(const SignedMeasure& mu, const SignedMeasure& nu, const BlOptions& opts = {},
                   bool allow_exact = true);

/// Lower bound from an explicit dictionary; each function is rescaled into
/// the bounded-Lipschitz unit ball before pairing.
double bl_lower_bound(const SignedMeasure& mu, const SignedMeasure& nu,
                      std::span<const BoundedFunction> dictionary);

}  // namespace meanerg
