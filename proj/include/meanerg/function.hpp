#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <optional>
#include <span>

#include "meanerg/state_space.hpp"

namespace meanerg {

/// Extension rule for a function beyond the enumerated truncation.
class TailRule {
 public:
  enum class Kind { none, zero, constant, at_infinity };

  static TailRule none() { return TailRule(Kind::none, 0.0, 0); }
  static TailRule zero() { return TailRule(Kind::zero, 0.0, 0); }
  static TailRule constant(double c) { return TailRule(Kind::constant, c, 0); }
  /// The function takes its value at the given compactification point.
  static TailRule at_infinity(std::size_t state) { return TailRule(Kind::at_infinity, 0.0, state); }

  Kind kind() const noexcept { return kind_; }
  double constant_value() const noexcept { return constant_; }
  std::size_t infinity_state() const noexcept { return state_; }

  bool operator==(const TailRule&) const = default;

 private:
  TailRule(Kind k, double c, std::size_t s) : kind_(k), constant_(c), state_(s) {}
  Kind kind_;
  double constant_;
  std::size_t state_;
};

/// Element of C_b(E) / B_b(E) restricted to a truncation.
class BoundedFunction {
 public:
  BoundedFunction(SpacePtr space, Eigen::VectorXd values, TailRule tail = TailRule::none(),
                  std::optional<double> lip_hint = std::nullopt);

  static BoundedFunction constant(SpacePtr space, double c);
  static BoundedFunction zero(SpacePtr space) { return constant(std::move(space), 0.0); }
  /// Indicator of `states`; the tail rule defaults to zero.
  static BoundedFunction indicator(SpacePtr space, std::span<const std::size_t> states,
                                   TailRule tail = TailRule::zero());

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(values_.size()); }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  double operator()(std::size_t i) const { return values_(static_cast<Eigen::Index>(i)); }

  const TailRule& tail() const noexcept { return tail_; }
  /// Value beyond the truncation, or nullopt when no rule is declared.
  std::optional<double> tail_value() const;
  /// As tail_value(), but throws UnresolvedStateError naming `state`.
  double resolve_tail(const std::string& state) const;

  std::optional<double> lip_hint() const noexcept { return lip_hint_; }

  /// Same space and tail rule, new values. The Lipschitz hint is dropped.
  BoundedFunction with_values(Eigen::VectorXd values) const;

  BoundedFunction& operator+=(const BoundedFunction& other);
  BoundedFunction& operator-=(const BoundedFunction& other);
  BoundedFunction& operator*=(double a);

 private:
  SpacePtr space_;
  Eigen::VectorXd values_;
  TailRule tail_;
  std::optional<double> lip_hint_;
};

BoundedFunction operator+(BoundedFunction a, const BoundedFunction& b);
BoundedFunction operator-(BoundedFunction a, const BoundedFunction& b);
BoundedFunction operator*(double a, BoundedFunction f);

/// Tail rule of a*f + b*g.
TailRule combine_tails(const BoundedFunction& f, double a, const BoundedFunction& g, double b);

}  // namespace meanerg
