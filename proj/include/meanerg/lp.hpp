#pragma once

#include <Eigen/Dense>
#include <cstddef>

namespace meanerg::lp {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Solution {
  double objective = 0.0;
  Eigen::VectorXd x;
  std::size_t pivots = 0;
};

/// maximize c'x subject to A x <= b, x >= 0, for b >= 0 (the origin is
/// feasible, so a single phase suffices).
///
/// Dense exchange-tableau simplex. Dantzig pricing, switching to Bland's rule
/// after a run of degenerate pivots. Throws SolverError when the problem is
/// unbounded or the pivot budget runs out.
Solution maximize(const Eigen::VectorXd& c, const RowMatrix& A, const Eigen::VectorXd& b,
                  std::size_t max_pivots = 100000);

}  // namespace meanerg::lp
