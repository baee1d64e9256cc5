// Serial reference kernels against their OpenMP variants. Thread count comes
// from OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "iae/kernels.hpp"
#include "iae/tensor.hpp"

namespace iae {
namespace {

Tensor random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.values()) v = u(rng);
  return t;
}

using MatmulFn = void (*)(const Tensor&, const Tensor&, Tensor&);

template <MatmulFn F>
void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor a = random_matrix(n, n, 1), b = random_matrix(n, n, 2);
  Tensor out = Tensor::matrix(n, n);
  for (auto _ : state) {
    F(a, b, out);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <MatmulFn F>
void BM_PairwiseSqdist(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor p = random_matrix(n, 64, 3), q = random_matrix(n, 64, 4);
  Tensor out = Tensor::matrix(n, n);
  for (auto _ : state) {
    F(p, q, out);
    benchmark::DoNotOptimize(out.values().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

using SoftminFn = void (*)(const Tensor&, std::span<const double>, double, std::span<double>);

template <SoftminFn F>
void BM_SoftminRows(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Tensor cost = random_matrix(n, n, 5);
  const std::vector<double> pot(n, 0.1);
  std::vector<double> out(n);
  for (auto _ : state) {
    F(cost, pot, 0.05, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n));
}

BENCHMARK(BM_Matmul<kernels::serial::matmul>)->Name("matmul/serial")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_Matmul<kernels::omp::matmul>)->Name("matmul/omp")->RangeMultiplier(2)->Range(64, 512);
BENCHMARK(BM_PairwiseSqdist<kernels::serial::pairwise_sqdist>)
    ->Name("pairwise_sqdist/serial")
    ->RangeMultiplier(2)
    ->Range(128, 1024);
BENCHMARK(BM_PairwiseSqdist<kernels::omp::pairwise_sqdist>)
    ->Name("pairwise_sqdist/omp")
    ->RangeMultiplier(2)
    ->Range(128, 1024);
BENCHMARK(BM_SoftminRows<kernels::serial::softmin_rows>)
    ->Name("softmin_rows/serial")
    ->RangeMultiplier(2)
    ->Range(128, 1024);
BENCHMARK(BM_SoftminRows<kernels::omp::softmin_rows>)
    ->Name("softmin_rows/omp")
    ->RangeMultiplier(2)
    ->Range(128, 1024);

}  // namespace
}  // namespace iae

BENCHMARK_MAIN();
