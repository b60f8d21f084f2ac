#include <benchmark/benchmark.h>

#include "pnreg/gamma.hpp"
#include "pnreg/leverage.hpp"
#include "pnreg/linear_solvers.hpp"
#include "pnreg/pnorm.hpp"
#include "pnreg/residual.hpp"

using namespace pnreg;

namespace {

SparseMatrix random_matrix(Index n, Index d, Index per_row, std::uint64_t seed) {
  SeededRng rng(seed);
  std::vector<Triplet> trips;
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < per_row; ++k)
      trips.push_back({i, static_cast<Index>(rng.next_u64() % static_cast<std::uint64_t>(d)),
                       rng.normal()});
  for (Index j = 0; j < d; ++j) trips.push_back({j, j, 1.0});
  return csr_from_triplets(trips, n, d);
}

Vector random_vector(Index n, std::uint64_t seed) {
  SeededRng rng(seed);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

void BM_Matvec(benchmark::State& state) {
  Index n = state.range(0);
  SparseMatrix A = random_matrix(n, 32, 4, 1);
  Vector x = random_vector(32, 2);
  for (auto _ : state) benchmark::DoNotOptimize(matvec(A, x));
  state.SetItemsProcessed(state.iterations() * A.nnz());
}
BENCHMARK(BM_Matvec)->Arg(1 << 12)->Arg(1 << 16);

void BM_InverseBuild(benchmark::State& state) {
  SparseMatrix A = random_matrix(4096, state.range(0), 4, 3);
  for (auto _ : state) benchmark::DoNotOptimize(InverseOperator::build(A));
}
BENCHMARK(BM_InverseBuild)->Arg(16)->Arg(128);

void BM_LeverageExact(benchmark::State& state) {
  SparseMatrix A = random_matrix(state.range(0), 16, 4, 4);
  for (auto _ : state) benchmark::DoNotOptimize(leverage_scores_exact(A));
}
BENCHMARK(BM_LeverageExact)->Arg(1 << 12)->Arg(1 << 15);

void BM_SpectralApproximation(benchmark::State& state) {
  SparseMatrix A = random_matrix(state.range(0), 8, 3, 5);
  for (auto _ : state) {
    SeededRng rng(6);
    benchmark::DoNotOptimize(spectral_approximation(A, rng));
  }
}
BENCHMARK(BM_SpectralApproximation)->Arg(1 << 13)->Unit(benchmark::kMillisecond);

void BM_GammaSample(benchmark::State& state) {
  const Index n = state.range(0);
  SparseMatrix A = random_matrix(n, 8, 3, 7);
  Vector t = Vector::Ones(n);
  GammaSampleConfig cfg;
  for (auto _ : state) {
    SeededRng rng(8);
    benchmark::DoNotOptimize(gamma_sample(A, t, 1.5, cfg, rng));
  }
}
BENCHMARK(BM_GammaSample)->Arg(1 << 13)->Unit(benchmark::kMillisecond);

void BM_SolveP1(benchmark::State& state) {
  RegressionProblem prob;
  prob.A = random_matrix(256, 8, 3, 9);
  prob.b = random_vector(256, 10);
  prob.p = static_cast<double>(state.range(0)) / 2.0;
  SolverConfig cfg;
  cfg.eps = 1e-8;
  for (auto _ : state) benchmark::DoNotOptimize(solve(prob, cfg));
}
BENCHMARK(BM_SolveP1)->Arg(3)->Arg(8)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
