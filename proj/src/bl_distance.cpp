#include "meanerg/bl_distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "meanerg/dualpair.hpp"
#include "meanerg/errors.hpp"
#include "meanerg/lp.hpp"

namespace meanerg {

namespace {

struct SupportedDifference {
  std::vector<std::size_t> support;
  Eigen::VectorXd weights;  // (mu - nu) on support
};

SupportedDifference difference_on_support(const SignedMeasure& mu, const SignedMeasure& nu) {
  require_same_space(*mu.space(), *nu.space());
  if (mu.escaped() != 0.0 || nu.escaped() != 0.0)
    throw DomainError("bl_distance: measures must be finitely supported (escaped mass present)");
  SupportedDifference d;
  for (std::size_t i = 0; i < mu.size(); ++i)
    if (mu(i) != 0.0 || nu(i) != 0.0) d.support.push_back(i);
  d.weights.resize(static_cast<Eigen::Index>(d.support.size()));
  for (std::size_t k = 0; k < d.support.size(); ++k)
    d.weights(static_cast<Eigen::Index>(k)) = mu(d.support[k]) - nu(d.support[k]);
  return d;
}

double solve_exact(const StateSpace& space, const SupportedDifference& d) {
  const auto n = static_cast<Eigen::Index>(d.support.size());
  if (n == 0 || d.weights.cwiseAbs().maxCoeff() == 0.0) return 0.0;

  // Shift f = g - 1 so that g in [0, 2] and the origin is feasible.
  struct Row {
    Eigen::Index i, j;
    double rhs;
  };
  Eigen::MatrixXd dist(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) dist(i, j) = space.distance(d.support[i], d.support[j]);
  // A pair constraint is implied by the box when d >= 2, and by the two
  // constraints through k when d(i,k) + d(k,j) = d(i,j). On the line this
  // leaves only neighbouring pairs.
  auto implied = [&](Eigen::Index i, Eigen::Index j) {
    const double dij = dist(i, j);
    if (dij >= 2.0) return true;
    for (Eigen::Index k = 0; k < n; ++k)
      if (k != i && k != j && dist(i, k) + dist(k, j) <= dij * (1.0 + 4.0 * std::numeric_limits<double>::epsilon()))
        return true;
    return false;
  };
  std::vector<Row> rows;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (!implied(i, j)) {
        rows.push_back({i, j, dist(i, j)});
        rows.push_back({j, i, dist(i, j)});
      }
  const auto m = static_cast<Eigen::Index>(rows.size()) + n;
  lp::RowMatrix A = lp::RowMatrix::Zero(m, n);
  Eigen::VectorXd b(m);
  for (Eigen::Index k = 0; k < n; ++k) {
    A(k, k) = 1.0;
    b(k) = 2.0;
  }
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = n + static_cast<Eigen::Index>(r);
    A(row, rows[r].i) = 1.0;
    A(row, rows[r].j) = -1.0;
    b(row) = rows[r].rhs;
  }
  const auto sol = lp::maximize(d.weights, A, b);
  return std::max(0.0, sol.objective - d.weights.sum());
}

}  // namespace

double bl_distance(const SignedMeasure& mu, const SignedMeasure& nu, const BlOptions& opts) {
  const auto d = difference_on_support(mu, nu);
  if (d.support.size() > opts.max_exact_support)
    throw SolverError("bl_distance: support of size " + std::to_string(d.support.size()) +
                      " exceeds the exact LP limit; use bl_bounds");
  return solve_exact(*mu.space(), d);
}

double bl_lower_bound(const SignedMeasure& mu, const SignedMeasure& nu,
                      std::span<const BoundedFunction> dictionary) {
  const SignedMeasure diff = mu - nu;
  double best = 0.0;
  for (const auto& f : dictionary) {
    const double scale = std::max(sup_norm(f), lipschitz_constant(f));
    if (scale == 0.0) continue;
    best = std::max(best, std::abs(pairing(f, diff)) / scale);
  }
  return best;
}

BlBounds bl_bounds(const SignedMeasure& mu, const SignedMeasure& nu, const BlOptions& opts, bool allow_exact) {
  const auto d = difference_on_support(mu, nu);
  const auto& space = *mu.space();
  const auto n = static_cast<Eigen::Index>(d.support.size());
  BlBounds out;
  out.upper = d.weights.cwiseAbs().sum();
  if (out.upper == 0.0) {
    out.exact = true;
    return out;
  }

  // Dictionary evaluated on the support only.
  auto consider = [&](const Eigen::VectorXd& f) {
    double lip = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        lip = std::max(lip, std::abs(f(i) - f(j)) / space.distance(d.support[i], d.support[j]));
    const double scale = std::max(f.cwiseAbs().maxCoeff(), lip);
    if (scale > 0.0) out.lower = std::max(out.lower, std::abs(f.dot(d.weights)) / scale);
  };
  consider(Eigen::VectorXd::Ones(n));
  Eigen::VectorXd sign = d.weights.unaryExpr([](double w) { return w > 0 ? 1.0 : (w < 0 ? -1.0 : 0.0); });
  consider(sign);
  for (Eigen::Index c = 0; c < n; ++c) {
    Eigen::VectorXd bump(n);
    for (Eigen::Index i = 0; i < n; ++i)
      bump(i) = std::max(0.0, 1.0 - space.distance(d.support[c], d.support[i]));
    consider(bump);
  }

  if (out.upper - out.lower <= 1e-15) {
    out.exact = true;
  } else if (allow_exact && d.support.size() <= opts.max_exact_support) {
    const double exact = solve_exact(space, d);
    out.lower = out.upper = exact;
    out.exact = true;
  }
  return out;
}

}  // namespace meanerg
