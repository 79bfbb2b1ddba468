#include <benchmark/benchmark.h>

#include "simplerc/kernels.hpp"
#include "simplerc/model.hpp"
#include "simplerc/spectral.hpp"

using namespace simplerc;

namespace {

Matrix bench_mean(Index n) {
  PresetParams p;
  p.n = n;
  p.n0 = n / 10;
  return mean_matrix(preset_model(p));
}

template <bool Parallel>
void BM_SampleBernoulli(benchmark::State& state) {
  const Matrix H = bench_mean(state.range(0));
  std::uint64_t key = 0;
  for (auto _ : state) {
    Matrix X = Parallel ? kernels::omp::sample_bernoulli(H, false, ++key) : kernels::serial::sample_bernoulli(H, false, ++key);
    benchmark::DoNotOptimize(X.data());
  }
}

template <bool Parallel>
void BM_ResidualRows(benchmark::State& state) {
  const Index n = state.range(0);
  const Matrix X = kernels::serial::sample_bernoulli(bench_mean(n), false, 1);
  const Spectrum s = SymmetricEigenSolver::lanczos(X, 5);
  NodeSet rows;
  for (Index i = 0; i < 20; ++i) rows.push_back(i * (n / 20));
  for (auto _ : state) {
    Matrix R = Parallel ? kernels::omp::residual_rows(X, s, 5, rows) : kernels::serial::residual_rows(X, s, 5, rows);
    benchmark::DoNotOptimize(R.data());
  }
}

template <bool Parallel>
void BM_Pearson(benchmark::State& state) {
  const Matrix Z = Matrix::Random(250, state.range(0));
  for (auto _ : state) {
    Matrix R = Parallel ? kernels::omp::pearson(Z) : kernels::serial::pearson(Z);
    benchmark::DoNotOptimize(R.data());
  }
}

void BM_Lanczos(benchmark::State& state) {
  const Matrix X = kernels::serial::sample_bernoulli(bench_mean(state.range(0)), false, 1);
  for (auto _ : state) benchmark::DoNotOptimize(SymmetricEigenSolver::lanczos(X, 6).values.data());
}

}  // namespace

BENCHMARK(BM_SampleBernoulli<false>)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SampleBernoulli<true>)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResidualRows<false>)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ResidualRows<true>)->Arg(3000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pearson<false>)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Pearson<true>)->Arg(200)->Arg(800)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Lanczos)->Arg(1000)->Arg(3000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
