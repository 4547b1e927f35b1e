#include <benchmark/benchmark.h>

#include <algorithm>
#include <random>
#include <vector>

#include "meanerg/csr.hpp"

using meanerg::Csr;

namespace {

// Random row-stochastic matrix with `per_row` entries per row.
Csr random_kernel(std::size_t n, std::size_t per_row, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> col(0, n - 1);
  std::uniform_real_distribution<double> w(0.1, 1.0);
  Csr a;
  a.rows = a.cols = n;
  a.offsets.assign(1, 0);
  std::vector<std::pair<std::size_t, double>> row;
  for (std::size_t r = 0; r < n; ++r) {
    row.clear();
    for (std::size_t k = 0; k < per_row; ++k) row.emplace_back(col(rng), w(rng));
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end(), [](auto& x, auto& y) { return x.first == y.first; }), row.end());
    double total = 0.0;
    for (auto& [c, v] : row) total += v;
    for (auto& [c, v] : row) {
      a.index.push_back(c);
      a.value.push_back(v / total);
    }
    a.offsets.push_back(a.index.size());
  }
  return a;
}

void BM_apply_serial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 16, 1);
  std::vector<double> x(n, 1.0), y(n);
  for (auto _ : st) {
    meanerg::serial::apply(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * a.nnz()));
}

void BM_apply_parallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 16, 1);
  std::vector<double> x(n, 1.0), y(n);
  for (auto _ : st) {
    meanerg::parallel::apply(a, x, y);
    benchmark::DoNotOptimize(y.data());
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations() * a.nnz()));
}

void BM_multiply_serial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 8, 2), b = random_kernel(n, 8, 3);
  for (auto _ : st) benchmark::DoNotOptimize(meanerg::serial::multiply(a, b));
}

void BM_multiply_parallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 8, 2), b = random_kernel(n, 8, 3);
  for (auto _ : st) benchmark::DoNotOptimize(meanerg::parallel::multiply(a, b));
}

void BM_axpby_serial(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 16, 4), b = random_kernel(n, 16, 5);
  for (auto _ : st) benchmark::DoNotOptimize(meanerg::serial::axpby(0.5, a, 0.5, b));
}

void BM_axpby_parallel(benchmark::State& st) {
  const auto n = static_cast<std::size_t>(st.range(0));
  const Csr a = random_kernel(n, 16, 4), b = random_kernel(n, 16, 5);
  for (auto _ : st) benchmark::DoNotOptimize(meanerg::parallel::axpby(0.5, a, 0.5, b));
}

}  // namespace

BENCHMARK(BM_apply_serial)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->UseRealTime();
BENCHMARK(BM_apply_parallel)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->UseRealTime();
BENCHMARK(BM_multiply_serial)->RangeMultiplier(8)->Range(1 << 10, 1 << 16)->UseRealTime();
BENCHMARK(BM_multiply_parallel)->RangeMultiplier(8)->Range(1 << 10, 1 << 16)->UseRealTime();
BENCHMARK(BM_axpby_serial)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->UseRealTime();
BENCHMARK(BM_axpby_parallel)->RangeMultiplier(8)->Range(1 << 10, 1 << 19)->UseRealTime();

BENCHMARK_MAIN();
