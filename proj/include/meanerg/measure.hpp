#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "meanerg/state_space.hpp"

namespace meanerg {

/// Signed measure on the truncation. `escaped` is mass that has left the
/// enumerated states (truncation leakage); it is kept separately so that
/// total mass and total variation stay honest.
class SignedMeasure {
 public:
  SignedMeasure(SpacePtr space, Eigen::VectorXd weights, double escaped = 0.0);

  static SignedMeasure zero(SpacePtr space);
  static SignedMeasure dirac(SpacePtr space, std::size_t state);
  /// Uniform probability on `states`.
  static SignedMeasure uniform(SpacePtr space, std::span<const std::size_t> states);

  const SpacePtr& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(weights_.size()); }
  const Eigen::VectorXd& weights() const noexcept { return weights_; }
  double operator()(std::size_t i) const { return weights_(static_cast<Eigen::Index>(i)); }
  double escaped() const noexcept { return escaped_; }

  double total_mass() const { return weights_.sum() + escaped_; }
  std::vector<std::size_t> support() const;

  /// Jordan decomposition: *this == positive_part() - negative_part().
  SignedMeasure positive_part() const;
  SignedMeasure negative_part() const;

  SignedMeasure with_weights(Eigen::VectorXd weights, double escaped = 0.0) const;

  SignedMeasure& operator+=(const SignedMeasure& other);
  SignedMeasure& operator-=(const SignedMeasure& other);
  SignedMeasure& operator*=(double a);

 private:
  SpacePtr space_;
  Eigen::VectorXd weights_;
  double escaped_ = 0.0;
};

SignedMeasure operator+(SignedMeasure a, const SignedMeasure& b);
SignedMeasure operator-(SignedMeasure a, const SignedMeasure& b);
SignedMeasure operator*(double a, SignedMeasure mu);

/// Nonnegative weight vanishing at infinity, with a decay certificate: for
/// each eps in the grid, the smallest exhaustion index m such that the weight
/// is below eps outside K_m.
class VanishingWeight {
 public:
  struct Certificate {
    double eps;
    int index;
  };

  static VanishingWeight certify(SpacePtr space, Eigen::VectorXd values,
                                 std::vector<double> eps_grid = default_eps_grid());
  /// 1_{K_m} as a weight.
  static VanishingWeight indicator(SpacePtr space, int m);

  static std::vector<double> default_eps_grid();

  const SpacePtr& space() const noexcept { return space_; }
  const Eigen::VectorXd& values() const noexcept { return values_; }
  const std::vector<Certificate>& certificate() const noexcept { return certificate_; }

 private:
  VanishingWeight(SpacePtr space, Eigen::VectorXd values) : space_(std::move(space)), values_(std::move(values)) {}

  SpacePtr space_;
  Eigen::VectorXd values_;
  std::vector<Certificate> certificate_;
};

}  // namespace meanerg
