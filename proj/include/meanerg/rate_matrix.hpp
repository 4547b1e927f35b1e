#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

#include "meanerg/function.hpp"
#include "meanerg/kernel.hpp"
#include "meanerg/measure.hpp"

namespace meanerg {

/// Value with an a-priori error bound and the number of series terms used.
template <class T>
struct Estimate {
  T value;
  double error_bound = 0.0;
  std::size_t terms = 0;
};

/// Conservative rate matrix Q: nonnegative off-diagonal, zero row sums.
class RateMatrix {
 public:
  RateMatrix(SpacePtr space, Eigen::MatrixXd q, double tol = 1e-12);

  const SpacePtr& space() const noexcept { return space_; }
  const Eigen::MatrixXd& q() const noexcept { return q_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(q_.rows()); }

  /// lambda = max_x |q(x, x)|.
  double rate() const noexcept { return rate_; }
  /// P = I + Q / lambda, or the identity when Q = 0.
  const KernelOperator& uniformized() const noexcept { return uniformized_; }

 private:
  SpacePtr space_;
  Eigen::MatrixXd q_;
  double rate_ = 0.0;
  KernelOperator uniformized_;
};

/// Truncated weights w_0..w_{K-1} of a series sum_k w_k P^k; `tail` bounds the
/// discarded weight sum_{k >= K} |w_k|.
struct SeriesWeights {
  std::vector<double> w;
  double tail = 0.0;
};

/// e^{tQ} = sum_k Poisson(mean; k) P^k with mean = lambda t.
SeriesWeights semigroup_weights(double mean, double eps);
/// (1/t) int_0^t e^{sQ} ds = sum_k w_k P^k with w_k = Prob(N > k) / mean,
/// N ~ Poisson(mean). Integrating each uniformized term exactly.
SeriesWeights time_average_weights(double mean, double eps);

/// Weighted orbit mean sum_k w_k P^k x / sum_k w_k, accumulated as
/// deviations from x so that a fixed point of P is returned unchanged.
BoundedFunction weighted_mean(const KernelOperator& p, const std::vector<double>& w, const BoundedFunction& f);
SignedMeasure weighted_mean(const KernelOperator& p, const std::vector<double>& w, const SignedMeasure& mu);
/// sum_k w_k P^k as a kernel.
KernelOperator weighted_sum(const KernelOperator& p, const std::vector<double>& w);

/// S(t) f = e^{tQ} f. The truncated series is renormalized to unit weight,
/// so the error bound is twice the discarded Poisson mass.
Estimate<BoundedFunction> semigroup_apply(const RateMatrix& q, double t, const BoundedFunction& f,
                                          double eps = 1e-14);
Estimate<SignedMeasure> semigroup_apply(const RateMatrix& q, double t, const SignedMeasure& mu,
                                        double eps = 1e-14);
Estimate<KernelOperator> semigroup_operator(const RateMatrix& q, double t, double eps = 1e-14);

}  // namespace meanerg
