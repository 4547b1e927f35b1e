#include "meanerg/rate_matrix.hpp"

#include <algorithm>
#include <cmath>

#include "meanerg/errors.hpp"

namespace meanerg {

namespace {

KernelOperator uniformize(const SpacePtr& space, const Eigen::MatrixXd& q, double rate) {
  if (rate == 0.0) return KernelOperator::identity(space);
  Eigen::MatrixXd p = Eigen::MatrixXd::Identity(q.rows(), q.cols()) + q / rate;
  // Rows of I + Q/lambda sum to one only up to rounding; no clean-up is done
  // so that the series stays an exact function of Q.
  return KernelOperator(Kernel::from_dense(space, p), 1e-12);
}

double validated_rate(const SpacePtr& space, const Eigen::MatrixXd& q, double tol) {
  if (!space) throw DomainError("rate matrix: null state space");
  const auto n = static_cast<Eigen::Index>(space->size());
  if (q.rows() != n || q.cols() != n) throw DomainError("rate matrix: dimension does not match the state space");
  double rate = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double scale = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (!std::isfinite(q(i, j))) throw DomainError("rate matrix: non-finite entry");
      if (i != j && q(i, j) < 0.0)
        throw DomainError("rate matrix: negative off-diagonal rate in row " + space->name(static_cast<std::size_t>(i)));
      scale += std::abs(q(i, j));
    }
    if (std::abs(q.row(i).sum()) > tol * std::max(1.0, scale))
      throw DomainError("rate matrix: row " + space->name(static_cast<std::size_t>(i)) + " does not sum to zero");
    rate = std::max(rate, std::abs(q(i, i)));
  }
  return rate;
}

/// Poisson(mean) probabilities for k = 0..J with J far enough in the tail
/// that the neglected mass is below double precision.
std::vector<long double> poisson_pmf(double mean) {
  const double spread = 14.0 * std::sqrt(mean) + 60.0;
  const auto last = static_cast<std::size_t>(std::ceil(mean + spread));
  std::vector<long double> p(last + 1);
  const long double m = mean;
  const long double logm = std::log(m);
  for (std::size_t k = 0; k <= last; ++k) {
    const long double kk = static_cast<long double>(k);
    p[k] = std::exp(-m + kk * logm - std::lgamma(kk + 1.0L));
  }
  return p;
}

}  // namespace

RateMatrix::RateMatrix(SpacePtr space, Eigen::MatrixXd q, double tol)
    : space_(std::move(space)),
      q_(std::move(q)),
      rate_(validated_rate(space_, q_, tol)),
      uniformized_(uniformize(space_, q_, rate_)) {}

SeriesWeights semigroup_weights(double mean, double eps) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("semigroup weights: mean must be finite and >= 0");
  if (mean == 0.0) return {{1.0}, 0.0};
  const auto p = poisson_pmf(mean);
  // suffix[k] = sum_{j >= k} p_j
  std::vector<long double> suffix(p.size() + 1, 0.0L);
  for (std::size_t k = p.size(); k-- > 0;) suffix[k] = suffix[k + 1] + p[k];
  std::size_t cut = p.size();
  for (std::size_t k = 0; k <= p.size(); ++k)
    if (suffix[k] <= eps) {
      cut = k;
      break;
    }
  SeriesWeights out;
  out.w.assign(p.begin(), p.begin() + static_cast<long>(cut));
  out.tail = static_cast<double>(suffix[cut]) + std::numeric_limits<double>::epsilon();
  return out;
}

SeriesWeights time_average_weights(double mean, double eps) {
  if (!(mean >= 0.0) || !std::isfinite(mean)) throw DomainError("time weights: mean must be finite and >= 0");
  if (mean == 0.0) return {{1.0}, 0.0};
  const auto p = poisson_pmf(mean);
  const std::size_t n = p.size();
  // survival[k] = Prob(N > k) = sum_{j > k} p_j
  std::vector<long double> survival(n, 0.0L);
  long double acc = 0.0L;
  for (std::size_t k = n; k-- > 0;) {
    survival[k] = acc;
    acc += p[k];
  }
  // tail[k] = sum_{i >= k} survival[i] / mean
  std::vector<long double> tail(n + 1, 0.0L);
  for (std::size_t k = n; k-- > 0;) tail[k] = tail[k + 1] + survival[k] / mean;
  std::size_t cut = n;
  for (std::size_t k = 0; k <= n; ++k)
    if (tail[k] <= eps) {
      cut = k;
      break;
    }
  SeriesWeights out;
  out.w.resize(cut);
  for (std::size_t k = 0; k < cut; ++k) out.w[k] = static_cast<double>(survival[k] / mean);
  out.tail = static_cast<double>(tail[cut]) + std::numeric_limits<double>::epsilon();
  return out;
}

namespace {

std::vector<double> normalized(const std::vector<double>& w) {
  long double total = 0.0L;
  for (double v : w) total += v;
  if (total == 0.0L) throw DomainError("weighted mean: weights sum to zero");
  std::vector<double> out(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = static_cast<double>(w[k] / total);
  return out;
}

}  // namespace

BoundedFunction weighted_mean(const KernelOperator& p, const std::vector<double>& w, const BoundedFunction& f) {
  const auto wn = normalized(w);
  Eigen::VectorXd dev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(f.size()));
  BoundedFunction x = f;
  for (std::size_t k = 1; k < wn.size(); ++k) {
    x = forward_apply(p, x);
    dev += wn[k] * (x.values() - f.values());
  }
  return f.with_values(f.values() + dev);
}

SignedMeasure weighted_mean(const KernelOperator& p, const std::vector<double>& w, const SignedMeasure& mu) {
  const auto wn = normalized(w);
  Eigen::VectorXd dev = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mu.size()));
  double esc = 0.0;
  SignedMeasure x = mu;
  for (std::size_t k = 1; k < wn.size(); ++k) {
    x = adjoint_apply(p, x);
    dev += wn[k] * (x.weights() - mu.weights());
    esc += wn[k] * (x.escaped() - mu.escaped());
  }
  return mu.with_weights(mu.weights() + dev, mu.escaped() + esc);
}

KernelOperator weighted_sum(const KernelOperator& p, const std::vector<double>& w) {
  if (w.empty()) return linear_combination(0.0, p, 0.0, p);
  // Horner: sum_k w_k P^k = w_0 I + P(w_1 I + P(w_2 I + ...)).
  const KernelOperator id = KernelOperator::identity(p.space());
  KernelOperator acc = linear_combination(w.back(), id, 0.0, id);
  for (std::size_t k = w.size() - 1; k-- > 0;) acc = linear_combination(1.0, compose(acc, p), w[k], id);
  return acc;
}

Estimate<BoundedFunction> semigroup_apply(const RateMatrix& q, double t, const BoundedFunction& f, double eps) {
  if (!(t >= 0.0)) throw DomainError("semigroup: t must be >= 0");
  const auto sw = semigroup_weights(q.rate() * t, eps);
  return {weighted_mean(q.uniformized(), sw.w, f), 2.0 * sw.tail * f.values().cwiseAbs().maxCoeff(), sw.w.size()};
}

Estimate<SignedMeasure> semigroup_apply(const RateMatrix& q, double t, const SignedMeasure& mu, double eps) {
  if (!(t >= 0.0)) throw DomainError("semigroup: t must be >= 0");
  const auto sw = semigroup_weights(q.rate() * t, eps);
  return {weighted_mean(q.uniformized(), sw.w, mu), 2.0 * sw.tail * mu.weights().cwiseAbs().sum(), sw.w.size()};
}

Estimate<KernelOperator> semigroup_operator(const RateMatrix& q, double t, double eps) {
  if (!(t >= 0.0)) throw DomainError("semigroup: t must be >= 0");
  const auto sw = semigroup_weights(q.rate() * t, eps);
  return {weighted_sum(q.uniformized(), normalized(sw.w)), 2.0 * sw.tail, sw.w.size()};
}

}  // namespace meanerg
