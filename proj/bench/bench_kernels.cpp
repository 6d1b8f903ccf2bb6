// Serial reference vs OpenMP kernels. Set OMP_NUM_THREADS to vary the pool.

#include <random>

#include <benchmark/benchmark.h>

#include "beliefdyn/data_pipeline.hpp"
#include "beliefdyn/fit_engine.hpp"
#include "beliefdyn/kernels.hpp"
#include "beliefdyn/rng.hpp"

using namespace beliefdyn;

namespace {

const BeliefParams kParams(1.0, -4.0, 0.8, 0.3);

// Dense grid: `scale` magnitudes per unit over [-10, 10] times the reference shots.
BehaviorGrid dense_grid(int scale) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<GridCell> cells;
  const int n = 20 * scale + 1;
  for (int i = 0; i < n; ++i)
    for (auto s : reference_shot_values()) cells.push_back({-10.0 + 20.0 * i / (n - 1), s, u(rng), 100});
  return BehaviorGrid(cells);
}

std::vector<double> magnitudes(int count) {
  std::vector<double> m(count);
  for (int i = 0; i < count; ++i) m[i] = -10.0 + 20.0 * i / (count - 1);
  return m;
}

template <auto Kernel>
void BM_Loss(benchmark::State& state) {
  const auto grid = dense_grid(static_cast<int>(state.range(0)));
  const auto problem = kernels::LossProblem::build(grid, bin_weights(grid, 15));
  const kernels::Theta th{1.0, -4.0, 0.8, 0.3};
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(problem, th));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

template <auto Kernel>
void BM_Surface(benchmark::State& state) {
  const auto mags = magnitudes(static_cast<int>(state.range(0)));
  std::vector<std::int64_t> shots;
  for (std::int64_t n = 0; n < 256; ++n) shots.push_back(n);
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(kParams, mags, shots));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(mags.size() * shots.size()));
}

template <auto Kernel>
void BM_Binomial(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> p(n);
  std::vector<std::uint64_t> keys(n);
  for (std::size_t i = 0; i < n; ++i) {
    p[i] = static_cast<double>(i % 97) / 97.0;
    keys[i] = hash_combine(3, i);
  }
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(p, keys, 100));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}

template <auto Kernel>
void BM_Caa(benchmark::State& state) {
  std::vector<double> dir(64, 0.125);
  const std::size_t per_side = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(Kernel(dir, per_side, 1.0, 5));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * per_side));
}

}  // namespace

BENCHMARK(BM_Loss<kernels::loss_gradient_reference>)->Name("loss_gradient/reference")->Arg(1)->Arg(50)->Arg(500);
BENCHMARK(BM_Loss<kernels::loss_gradient_parallel>)->Name("loss_gradient/parallel")->Arg(1)->Arg(50)->Arg(500);
BENCHMARK(BM_Surface<kernels::posterior_surface_reference>)->Name("posterior_surface/reference")->Arg(33)->Arg(2001);
BENCHMARK(BM_Surface<kernels::posterior_surface_parallel>)->Name("posterior_surface/parallel")->Arg(33)->Arg(2001);
BENCHMARK(BM_Binomial<kernels::binomial_draws_reference>)->Name("binomial_draws/reference")->Arg(825)->Arg(100000);
BENCHMARK(BM_Binomial<kernels::binomial_draws_parallel>)->Name("binomial_draws/parallel")->Arg(825)->Arg(100000);
BENCHMARK(BM_Caa<kernels::gaussian_mean_difference_reference>)->Name("caa/reference")->Arg(10000)->Arg(500000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Caa<kernels::gaussian_mean_difference_parallel>)->Name("caa/parallel")->Arg(10000)->Arg(500000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
