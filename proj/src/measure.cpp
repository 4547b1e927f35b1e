#include "meanerg/measure.hpp"

#include <algorithm>
#include <cmath>

#include "meanerg/errors.hpp"

namespace meanerg {

SignedMeasure::SignedMeasure(SpacePtr space, Eigen::VectorXd weights, double escaped)
    : space_(std::move(space)), weights_(std::move(weights)), escaped_(escaped) {
  if (!space_) throw DomainError("measure without a state space");
  if (static_cast<std::size_t>(weights_.size()) != space_->size())
    throw DomainError("measure weights do not match the state space size");
  if (!weights_.allFinite() || !std::isfinite(escaped_)) throw DomainError("measure weights must be finite");
}

SignedMeasure SignedMeasure::zero(SpacePtr space) {
  const auto n = static_cast<Eigen::Index>(space->size());
  return SignedMeasure(std::move(space), Eigen::VectorXd::Zero(n));
}

SignedMeasure SignedMeasure::dirac(SpacePtr space, std::size_t state) {
  if (state >= space->size()) throw DomainError("dirac: state index out of range");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  w(static_cast<Eigen::Index>(state)) = 1.0;
  return SignedMeasure(std::move(space), std::move(w));
}

SignedMeasure SignedMeasure::uniform(SpacePtr space, std::span<const std::size_t> states) {
  if (states.empty()) throw DomainError("uniform measure on an empty set");
  Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  const double mass = 1.0 / static_cast<double>(states.size());
  for (std::size_t s : states) w(static_cast<Eigen::Index>(s)) += mass;
  return SignedMeasure(std::move(space), std::move(w));
}

std::vector<std::size_t> SignedMeasure::support() const {
  std::vector<std::size_t> out;
  for (Eigen::Index i = 0; i < weights_.size(); ++i)
    if (weights_(i) != 0.0) out.push_back(static_cast<std::size_t>(i));
  return out;
}

SignedMeasure SignedMeasure::positive_part() const {
  return SignedMeasure(space_, weights_.cwiseMax(0.0), std::max(escaped_, 0.0));
}

SignedMeasure SignedMeasure::negative_part() const {
  return SignedMeasure(space_, (-weights_).cwiseMax(0.0), std::max(-escaped_, 0.0));
}

SignedMeasure SignedMeasure::with_weights(Eigen::VectorXd weights, double escaped) const {
  return SignedMeasure(space_, std::move(weights), escaped);
}

SignedMeasure& SignedMeasure::operator+=(const SignedMeasure& other) {
  require_same_space(*space_, *other.space_);
  weights_ += other.weights_;
  escaped_ += other.escaped_;
  return *this;
}

SignedMeasure& SignedMeasure::operator-=(const SignedMeasure& other) {
  require_same_space(*space_, *other.space_);
  weights_ -= other.weights_;
  escaped_ -= other.escaped_;
  return *this;
}

SignedMeasure& SignedMeasure::operator*=(double a) {
  weights_ *= a;
  escaped_ *= a;
  return *this;
}

SignedMeasure operator+(SignedMeasure a, const SignedMeasure& b) { return a += b; }
SignedMeasure operator-(SignedMeasure a, const SignedMeasure& b) { return a -= b; }
SignedMeasure operator*(double a, SignedMeasure mu) { return mu *= a; }

std::vector<double> VanishingWeight::default_eps_grid() {
  return {1e-1, 1e-2, 1e-3, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};
}

VanishingWeight VanishingWeight::certify(SpacePtr space, Eigen::VectorXd values, std::vector<double> eps_grid) {
  if (static_cast<std::size_t>(values.size()) != space->size())
    throw DomainError("weight values do not match the state space size");
  if (!values.allFinite() || values.minCoeff() < 0.0)
    throw DomainError("vanishing weight must be finite and nonnegative");
  VanishingWeight w(space, std::move(values));
  for (double eps : eps_grid) {
    if (!(eps > 0.0)) throw DomainError("certificate eps must be positive");
    // Smallest m with w(x) < eps for every x outside K_m.
    int m = 1;
    for (std::size_t i = 0; i < space->size(); ++i)
      if (w.values_(static_cast<Eigen::Index>(i)) >= eps) m = std::max(m, space->level(i));
    w.certificate_.push_back({eps, m});
  }
  return w;
}

VanishingWeight VanishingWeight::indicator(SpacePtr space, int m) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(space->size()));
  for (std::size_t i = 0; i < space->size(); ++i)
    if (space->in_exhaustion(i, m)) v(static_cast<Eigen::Index>(i)) = 1.0;
  return certify(std::move(space), std::move(v));
}

}  // namespace meanerg
