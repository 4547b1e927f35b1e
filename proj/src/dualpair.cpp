#include "meanerg/dualpair.hpp"

#include <algorithm>
#include <cmath>

#include "meanerg/errors.hpp"

namespace meanerg {

double pairing(const BoundedFunction& f, const SignedMeasure& mu) {
  require_same_space(*f.space(), *mu.space());
  double s = f.values().dot(mu.weights());
  if (mu.escaped() != 0.0) s += mu.escaped() * f.resolve_tail("<outside truncation>");
  return s;
}

double sup_norm(const BoundedFunction& f) {
  double s = f.size() ? f.values().cwiseAbs().maxCoeff() : 0.0;
  if (f.tail().kind() == TailRule::Kind::constant) s = std::max(s, std::abs(f.tail().constant_value()));
  return s;
}

double tv_norm(const SignedMeasure& mu) { return mu.weights().cwiseAbs().sum() + std::abs(mu.escaped()); }

double strict_seminorm(const BoundedFunction& f, const VanishingWeight& phi) {
  require_same_space(*f.space(), *phi.space());
  if (f.size() == 0) return 0.0;
  return phi.values().cwiseProduct(f.values()).cwiseAbs().maxCoeff();
}

std::optional<int> TightnessProfile::tight_index(double eps) const {
  for (std::size_t m = 0; m < mass_outside.size(); ++m)
    if (mass_outside[m] < eps) return static_cast<int>(m + 1);
  return std::nullopt;
}

TightnessProfile tightness_profile(std::span<const SignedMeasure> family, const StateSpace& space) {
  if (family.empty()) throw DomainError("tightness profile of an empty family");
  TightnessProfile p;
  p.mass_outside.assign(static_cast<std::size_t>(space.depth()), 0.0);
  for (const auto& mu : family) {
    require_same_space(space, *mu.space());
    // |mu|(E \ K_m) = escaped + mass on states with level > m.
    std::vector<double> by_level(static_cast<std::size_t>(space.depth()) + 1, 0.0);
    for (std::size_t i = 0; i < space.size(); ++i) by_level[space.level(i)] += std::abs(mu(i));
    double outside = std::abs(mu.escaped());
    for (int m = space.depth(); m >= 1; --m) {
      p.mass_outside[m - 1] = std::max(p.mass_outside[m - 1], outside);
      outside += by_level[m];
    }
  }
  return p;
}

double lipschitz_constant(const BoundedFunction& f) {
  const auto& space = *f.space();
  const auto n = static_cast<long>(f.size());
  const auto& v = f.values();
  double best = 0.0;
#pragma omp parallel for reduction(max : best) schedule(dynamic, 16)
  for (long i = 0; i < n; ++i) {
    for (long j = i + 1; j < n; ++j) {
      const double q = std::abs(v(i) - v(j)) / space.distance(i, j);
      best = std::max(best, q);
    }
  }
  return best;
}

}  // namespace meanerg
