#include <map>

#include "meanerg/csr.hpp"
#include "meanerg/errors.hpp"

namespace meanerg::serial {

void apply(const Csr& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.cols || y.size() != a.rows) throw DomainError("csr apply: dimension mismatch");
  for (std::size_t r = 0; r < a.rows; ++r) {
    double s = 0.0;
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) s += a.value[k] * x[a.index[k]];
    y[r] = s;
  }
}

void apply_transposed(const Csr& a, std::span<const double> x, std::span<double> y) {
  if (x.size() != a.rows || y.size() != a.cols) throw DomainError("csr apply_transposed: dimension mismatch");
  std::fill(y.begin(), y.end(), 0.0);
  for (std::size_t r = 0; r < a.rows; ++r)
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) y[a.index[k]] += x[r] * a.value[k];
}

Csr multiply(const Csr& a, const Csr& b) {
  if (a.cols != b.rows) throw DomainError("csr multiply: dimension mismatch");
  Csr c;
  c.rows = a.rows;
  c.cols = b.cols;
  c.offsets.assign(c.rows + 1, 0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    std::map<std::size_t, double> row;
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k)
      for (std::size_t l = b.offsets[a.index[k]]; l < b.offsets[a.index[k] + 1]; ++l)
        row[b.index[l]] += a.value[k] * b.value[l];
    for (auto [col, v] : row) {
      if (v == 0.0) continue;
      c.index.push_back(col);
      c.value.push_back(v);
    }
    c.offsets[r + 1] = c.index.size();
  }
  return c;
}

Csr axpby(double alpha, const Csr& a, double beta, const Csr& b) {
  if (a.rows != b.rows || a.cols != b.cols) throw DomainError("csr axpby: dimension mismatch");
  Csr c;
  c.rows = a.rows;
  c.cols = a.cols;
  c.offsets.assign(c.rows + 1, 0);
  for (std::size_t r = 0; r < a.rows; ++r) {
    std::map<std::size_t, double> row;
    for (std::size_t k = a.offsets[r]; k < a.offsets[r + 1]; ++k) row[a.index[k]] += alpha * a.value[k];
    for (std::size_t k = b.offsets[r]; k < b.offsets[r + 1]; ++k) row[b.index[k]] += beta * b.value[k];
    for (auto [col, v] : row) {
      if (v == 0.0) continue;
      c.index.push_back(col);
      c.value.push_back(v);
    }
    c.offsets[r + 1] = c.index.size();
  }
  return c;
}

}  // namespace meanerg::serial
