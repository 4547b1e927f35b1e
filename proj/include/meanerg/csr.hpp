#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

namespace meanerg {

/// Compressed sparse rows. Column indices within a row are sorted and unique.
struct Csr {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::size_t> offsets{0};
  std::vector<std::size_t> index;
  std::vector<double> value;

  std::size_t nnz() const noexcept { return index.size(); }
  std::span<const std::size_t> row_index(std::size_t r) const {
    return {index.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }
  std::span<const double> row_value(std::size_t r) const {
    return {value.data() + offsets[r], offsets[r + 1] - offsets[r]};
  }

  static Csr identity(std::size_t n);
  static Csr from_dense(const Eigen::MatrixXd& m, double drop_below = 0.0);
  Eigen::MatrixXd to_dense() const;
};

/// OpenMP kernels. Each output row is computed independently, so results do
/// not depend on the thread count.
namespace parallel {

/// y = A x.
void apply(const Csr& a, std::span<const double> x, std::span<double> y);
/// Transpose by counting sort.
Csr transpose(const Csr& a);
/// C = A B, row by row with a dense accumulator per thread.
Csr multiply(const Csr& a, const Csr& b);
/// alpha A + beta B.
Csr axpby(double alpha, const Csr& a, double beta, const Csr& b);

}  // namespace parallel

/// Straightforward single-threaded versions of the kernels above. Kept as the
/// reference the parallel kernels are tested and benchmarked against.
namespace serial {

void apply(const Csr& a, std::span<const double> x, std::span<double> y);
/// y = A' x by scattering each row of A; no transpose is formed.
void apply_transposed(const Csr& a, std::span<const double> x, std::span<double> y);
Csr multiply(const Csr& a, const Csr& b);
Csr axpby(double alpha, const Csr& a, double beta, const Csr& b);

}  // namespace serial

}  // namespace meanerg
