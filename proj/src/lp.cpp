#include "meanerg/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "meanerg/errors.hpp"

namespace meanerg::lp {

Solution maximize(const Eigen::VectorXd& c, const RowMatrix& A, const Eigen::VectorXd& b,
                  std::size_t max_pivots) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  if (c.size() != n || b.size() != m) throw DomainError("lp: dimension mismatch");
  if (m > 0 && b.minCoeff() < 0.0) throw DomainError("lp: right-hand side must be nonnegative");

  // Rows 0..m-1: [A | b]; row m: [-c | 0]. Labels 0..n-1 are structural
  // variables, n..n+m-1 are slacks.
  RowMatrix T(m + 1, n + 1);
  T.topLeftCorner(m, n) = A;
  T.topRightCorner(m, 1) = b;
  T.bottomLeftCorner(1, n) = -c.transpose();
  T(m, n) = 0.0;

  std::vector<Eigen::Index> col_label(n), row_label(m);
  for (Eigen::Index j = 0; j < n; ++j) col_label[j] = j;
  for (Eigen::Index i = 0; i < m; ++i) row_label[i] = n + i;

  const double scale = std::max({1.0, c.size() ? c.cwiseAbs().maxCoeff() : 0.0,
                                 A.size() ? A.cwiseAbs().maxCoeff() : 0.0});
  const double eps = 1e-12 * scale;

  Solution sol;
  std::size_t degenerate_run = 0;
  for (;;) {
    const bool bland = degenerate_run > 50;
    Eigen::Index s = -1;
    double best = -eps;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double v = T(m, j);
      if (v >= -eps) continue;
      if (bland) {
        if (s < 0 || col_label[j] < col_label[s]) s = j;
      } else if (v < best) {
        best = v;
        s = j;
      }
    }
    if (s < 0) break;

    Eigen::Index r = -1;
    double ratio = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < m; ++i) {
      const double a = T(i, s);
      if (a <= eps) continue;
      const double q = T(i, n) / a;
      if (q < ratio - 1e-15 || (q <= ratio + 1e-15 && r >= 0 && row_label[i] < row_label[r])) {
        ratio = q;
        r = i;
      }
    }
    if (r < 0) throw SolverError("lp: objective unbounded");
    if (++sol.pivots > max_pivots) throw SolverError("lp: pivot budget exhausted");
    degenerate_run = T(r, n) <= eps ? degenerate_run + 1 : 0;

    const double p = T(r, s);
    const Eigen::VectorXd pivot_col = T.col(s);
    T.row(r) /= p;
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i <= m; ++i) {
      if (i == r) continue;
      const double f = pivot_col(i);
      if (f == 0.0) continue;
      T.row(i).noalias() -= f * T.row(r);
      T(i, s) = -f / p;
    }
    T(r, s) = 1.0 / p;
    std::swap(row_label[r], col_label[s]);
  }

  sol.objective = T(m, n);
  sol.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < m; ++i)
    if (row_label[i] < n) sol.x(row_label[i]) = T(i, n);
  return sol;
}

}  // namespace meanerg::lp
