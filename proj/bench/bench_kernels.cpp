// Serial reference vs OpenMP kernels. Run with --benchmark_filter=... as usual.

#include <array>
#include <vector>

#include <benchmark/benchmark.h>

#include "minaffine/cost.hpp"
#include "minaffine/measure.hpp"
#include "minaffine/parallel.hpp"
#include "minaffine/partition.hpp"

using namespace minaffine;

namespace {

const MinAffineCost& three_piece_cost() {
  static const MinAffineCost cost({{1, 0, 0}, {0, 1, 0}, {-1, 2, 0.5}});
  return cost;
}

std::vector<double> grid(int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[i] = (i + 0.5) / n;
  return v;
}

void BM_CostMatrixSerial(benchmark::State& state) {
  const auto xs = grid(static_cast<int>(state.range(0)));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::cost_matrix_serial(xs, xs, three_piece_cost()));
}

void BM_CostMatrixParallel(benchmark::State& state) {
  const auto xs = grid(static_cast<int>(state.range(0)));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        kernels::cost_matrix_parallel(xs, xs, three_piece_cost(), workers));
}

std::vector<std::array<double, 2>> points(int n) {
  std::vector<std::array<double, 2>> p;
  for (int i = 0; i < n; ++i) p.push_back({(i + 0.5) / n, 1.0 - (i + 0.5) / n});
  return p;
}

void BM_WorstPairSerial(benchmark::State& state) {
  const auto p = points(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(kernels::worst_pair_serial(p, three_piece_cost()));
}

void BM_WorstPairParallel(benchmark::State& state) {
  const auto p = points(static_cast<int>(state.range(0)));
  const int workers = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(kernels::worst_pair_parallel(p, three_piece_cost(), workers));
}

void BM_SubproblemSweep(benchmark::State& state) {
  const Measure1D u({{0.0, 0.0}, {1.0, 1.0}});
  const auto tasks = enumerate_subproblems(3);
  SolveOptions opt;
  opt.restarts = 4;
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) {
    if (workers <= 1) {
      benchmark::DoNotOptimize(solve_subproblems_serial(tasks, three_piece_cost(), u, u, opt));
    } else {
      benchmark::DoNotOptimize(
          solve_subproblems_parallel(tasks, three_piece_cost(), u, u, opt, workers));
    }
  }
}

}  // namespace

BENCHMARK(BM_CostMatrixSerial)->Arg(300)->Arg(1000);
BENCHMARK(BM_CostMatrixParallel)->Args({300, 2})->Args({1000, 2})->Args({1000, 4});
BENCHMARK(BM_WorstPairSerial)->Arg(1000);
BENCHMARK(BM_WorstPairParallel)->Args({1000, 2})->Args({1000, 4});
BENCHMARK(BM_SubproblemSweep)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
