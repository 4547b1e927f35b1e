#include <algorithm>
#include <map>

#include "meanerg/csr.hpp"
#include "meanerg/errors.hpp"

namespace meanerg {

Csr Csr::identity(std::size_t n) {
  Csr c;
  c.rows = c.cols = n;
  c.offsets.resize(n + 1);
  c.index.resize(n);
  c.value.assign(n, 1.0);
  for (std::size_t i = 0; i <= n; ++i) c.offsets[i] = i;
  for (std::size_t i = 0; i < n; ++i) c.index[i] = i;
  return c;
}

Csr Csr::from_dense(const Eigen::MatrixXd& m, double drop_below) {
  Csr c;
  c.rows = static_cast<std::size_t>(m.rows());
  c.cols = static_cast<std::size_t>(m.cols());
  c.offsets.assign(c.rows + 1, 0);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const double v = m(i, j);
      if (v != 0.0 && std::abs(v) > drop_below) {
        c.index.push_back(static_cast<std::size_t>(j));
        c.value.push_back(v);
      }
    }
    c.offsets[static_cast<std::size_t>(i) + 1] = c.index.size();
  }
  return c;
}

Eigen::MatrixXd Csr::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t k = offsets[r]; k < offsets[r + 1]; ++k)
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(index[k])) = value[k];
  return m;
}

namespace parallel {

void apply(const Csr& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows) throw DomainError("csr apply: dimension mismatch");
  const auto rows = static_cast<long>(a.rows);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) s += a.value[k] * x[a.index[k]];
    y[r] = s;
  }
}

Csr transpose(const Csr& a) {
  Csr t;
  t.rows = a.cols;
  t.cols = a.rows;
  t.offsets.assign(t.rows + 1, 0);
  for (std::size_t j : a.index) ++t.offsets[j + 1];
  for (std::size_t r = 0; r < t.rows; ++r) t.offsets[r + 1] += t.offsets[r];
  t.index.resize(a.nnz());
  t.value.resize(a.nnz());
  std::vector<std::size_t> next(t.offsets.begin(), t.offsets.end() - 1);
  // Rows of `a` are visited in order, so each output row is already sorted.
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
      const std::size_t pos = next[a.index[k]]++;
      t.index[pos] = r;
      t.value[pos] = a.value[k];
    }
  return t;
}

Csr multiply(const Csr& a, const Csr& b) {
  if (a.cols != b.rows) throw DomainError("csr multiply: dimension mismatch");
  const auto rows = static_cast<long>(a.rows);
  std::vector<std::vector<std::size_t>> idx(a.rows);
  std::vector<std::vector<double>> val(a.rows);

#pragma omp parallel
  {
    std::vector<double> acc(b.cols, 0.0);
    std::vector<char> used(b.cols, 0);
    std::vector<std::size_t> touched;
#pragma omp for schedule(dynamic, 8)
    for (long r = 0; r < rows; ++r) {
      touched.clear();
      for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) {
        const double av = a.value[k];
        const std::size_t mid = a.index[k];
        for (std::size_t l = b.offsets[mid]; l < b.offsets[mid + 1]; ++l) {
          const std::size_t c = b.index[l];
          if (!used[c]) {
            used[c] = 1;
            touched.push_back(c);
          }
          acc[c] += av * b.value[l];
        }
      }
      std::sort(touched.begin(), touched.end());
      auto& ri = idx[r];
      auto& rv = val[r];
      for (std::size_t c : touched) {
        if (acc[c] != 0.0) {
          ri.push_back(c);
          rv.push_back(acc[c]);
        }
        acc[c] = 0.0;
        used[c] = 0;
      }
    }
  }

  Csr c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.offsets.assign(c.rows + 1, 0);
  for (std::size_t r = 0; r < c.rows; ++r) c.offsets[r + 1] = c.offsets[r] + idx[r].size();
  c.index.resize(c.offsets.back());
  c.value.resize(c.offsets.back());
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    std::copy(idx[r].begin(), idx[r].end(), c.index.begin() + static_cast<long>(c.offsets[r]));
    std::copy(val[r].begin(), val[r].end(), c.value.begin() + static_cast<long>(c.offsets[r]));
  }
  return c;
}

Csr axpby(double alpha, const Csr& a, double beta, const Csr& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw DomainError("csr axpby: dimension mismatch");
  const auto rows = static_cast<long>(a.rows);
  // Merge of two sorted rows; `emit` sees every nonzero (column, value).
  auto merge_row = [&](long r, auto&& emit) {
    std::size_t i = a.offsets[r], j = b.offsets[r];
    const std::size_t ie = a.offsets[r + 1], je = b.offsets[r + 1];
    while (i < ie || j < je) {
      std::size_t col;
      double v;
      if (j >= je || (i < ie && a.index[i] < b.index[j])) {
        col = a.index[i];
        v = alpha * a.value[i++];
      } else if (i >= ie || b.index[j] < a.index[i]) {
        col = b.index[j];
        v = beta * b.value[j++];
      } else {
        col = a.index[i];
        v = alpha * a.value[i++] + beta * b.value[j++];
      }
      if (v != 0.0) emit(col, v);
    }
  };

  Csr c;
  c.rows = a.rows;
  c.cols = a.cols;
  c.offsets.assign(c.rows + 1, 0);
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    std::size_t n = 0;
    merge_row(r, [&](std::size_t, double) { ++n; });
    c.offsets[r + 1] = n;
  }
  for (std::size_t r = 0; r < c.rows; ++r) c.offsets[r + 1] += c.offsets[r];
  c.index.resize(c.offsets.back());
  c.value.resize(c.offsets.back());
#pragma omp parallel for schedule(static)
  for (long r = 0; r < rows; ++r) {
    std::size_t k = c.offsets[r];
    merge_row(r, [&](std::size_t col, double v) {
      c.index[k] = col;
      c.value[k++] = v;
    });
  }
  return c;
}

}  // namespace parallel
}  // namespace meanerg
