#include "meanerg/function.hpp"

#include <cmath>

#include "meanerg/errors.hpp"

namespace meanerg {

BoundedFunction::BoundedFunction(SpacePtr space, Eigen::VectorXd values, TailRule tail,
                                 std::optional<double> lip_hint)
    : space_(std::move(space)), values_(std::move(values)), tail_(tail), lip_hint_(lip_hint) {
  if (!space_) throw DomainError("function without a state space");
  if (static_cast<std::size_t>(values_.size()) != space_->size())
    throw DomainError("function values do not match the state space size");
  if (!values_.allFinite()) throw DomainError("function values must be finite");
  if (tail_.kind() == TailRule::Kind::at_infinity && !space_->is_infinity_point(tail_.infinity_state()))
    throw DomainError("tail rule refers to a state that is not a compactification point");
  if (lip_hint_) {
    const double L = *lip_hint_;
    if (!(L >= 0.0)) throw DomainError("Lipschitz hint must be nonnegative");
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) {
        const double diff = std::abs(values_(i) - values_(j));
        if (diff > L * space_->distance(i, j) * (1.0 + 1e-12) + 1e-15)
          throw DomainError("Lipschitz hint violated between '" + space_->name(i) + "' and '" +
                            space_->name(j) + "'");
      }
  }
}

BoundedFunction BoundedFunction::constant(SpacePtr space, double c) {
  const auto n = static_cast<Eigen::Index>(space->size());
  return BoundedFunction(std::move(space), Eigen::VectorXd::Constant(n, c), TailRule::constant(c), 0.0);
}

BoundedFunction BoundedFunction::indicator(SpacePtr space, std::span<const std::size_t> states, TailRule tail) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  for (std::size_t s : states) v(static_cast<Eigen::Index>(s)) = 1.0;
  return BoundedFunction(std::move(space), std::move(v), tail);
}

std::optional<double> BoundedFunction::tail_value() const {
  switch (tail_.kind()) {
    case TailRule::Kind::none:
      return std::nullopt;
    case TailRule::Kind::zero:
      return 0.0;
    case TailRule::Kind::constant:
      return tail_.constant_value();
    case TailRule::Kind::at_infinity:
      return values_(static_cast<Eigen::Index>(tail_.infinity_state()));
  }
  return std::nullopt;
}

double BoundedFunction::resolve_tail(const std::string& state) const {
  if (auto v = tail_value()) return *v;
  throw UnresolvedStateError(state);
}

BoundedFunction BoundedFunction::with_values(Eigen::VectorXd values) const {
  return BoundedFunction(space_, std::move(values), tail_);
}

TailRule combine_tails(const BoundedFunction& f, double a, const BoundedFunction& g, double b) {
  const TailRule& tf = f.tail();
  const TailRule& tg = g.tail();
  if (tf.kind() == TailRule::Kind::at_infinity && tf == tg) return tf;
  const auto vf = f.tail_value();
  const auto vg = g.tail_value();
  if (!vf || !vg) return TailRule::none();
  if (tf.kind() == TailRule::Kind::zero && tg.kind() == TailRule::Kind::zero) return TailRule::zero();
  return TailRule::constant(a * *vf + b * *vg);
}

BoundedFunction& BoundedFunction::operator+=(const BoundedFunction& other) {
  require_same_space(*space_, *other.space_);
  tail_ = combine_tails(*this, 1.0, other, 1.0);
  values_ += other.values_;
  lip_hint_.reset();
  return *this;
}

BoundedFunction& BoundedFunction::operator-=(const BoundedFunction& other) {
  require_same_space(*space_, *other.space_);
  tail_ = combine_tails(*this, 1.0, other, -1.0);
  values_ -= other.values_;
  lip_hint_.reset();
  return *this;
}

BoundedFunction& BoundedFunction::operator*=(double a) {
  if (tail_.kind() == TailRule::Kind::constant) tail_ = TailRule::constant(a * tail_.constant_value());
  values_ *= a;
  if (lip_hint_) lip_hint_ = std::abs(a) * *lip_hint_;
  return *this;
}

BoundedFunction operator+(BoundedFunction a, const BoundedFunction& b) { return a += b; }
BoundedFunction operator-(BoundedFunction a, const BoundedFunction& b) { return a -= b; }
BoundedFunction operator*(double a, BoundedFunction f) { return f *= a; }

}  // namespace meanerg
