// Serial reference kernels against their OpenMP counterparts.
//
//   ./build/bench/vegbif_bench --benchmark_filter=rhs
//
// Set OMP_NUM_THREADS to control the thread count of the parallel variants.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "vegbif/band_matrix.hpp"
#include "vegbif/discretization.hpp"
#include "vegbif/kernels.hpp"

using namespace vegbif;

namespace {

std::vector<double> random_state(const GridSpec& g) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> uB(0.0, 1.0), uW(0.1, 60.0), uT(0.0, 0.1);
  std::vector<double> u(g.unknowns());
  for (std::size_t i = 0; i < u.size(); i += 3) {
    u[i] = uB(rng);
    u[i + 1] = uW(rng);
    u[i + 2] = uT(rng);
  }
  return u;
}

template <auto Kernel>
void bm_rhs(benchmark::State& state) {
  const ModelParams m;
  const GridSpec g(8.0, static_cast<int>(state.range(0)));
  const auto u = random_state(g);
  std::vector<double> out(u.size());
  for (auto _ : state) {
    Kernel(g, u, 1.0, m, out, kernels::Terms::all);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * g.nodes());
}

template <auto Kernel>
void bm_jacobian(benchmark::State& state) {
  const ModelParams m;
  const GridSpec g(8.0, static_cast<int>(state.range(0)));
  const auto u = random_state(g);
  BandMatrix J(u.size(), kJacobianBandwidth, kJacobianBandwidth);
  for (auto _ : state) {
    Kernel(g, u, 1.0, m, J, kernels::Terms::all);
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * g.nodes());
}

template <auto Kernel>
void bm_turing(benchmark::State& state) {
  const ModelParams m;
  std::vector<double> ps(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < ps.size(); ++i) ps[i] = 0.65 + 1.35 * i / ps.size();
  std::vector<double> out(ps.size());
  for (auto _ : state) {
    Kernel(2, 8.0, m, ps, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(bm_rhs<kernels::rhs_serial>)->Name("rhs/serial")->RangeMultiplier(8)->Range(64, 1 << 18);
BENCHMARK(bm_rhs<kernels::rhs_parallel>)->Name("rhs/openmp")->RangeMultiplier(8)->Range(64, 1 << 18)->UseRealTime();
BENCHMARK(bm_jacobian<kernels::jacobian_serial>)->Name("jacobian/serial")->RangeMultiplier(8)->Range(64, 1 << 18);
BENCHMARK(bm_jacobian<kernels::jacobian_parallel>)
    ->Name("jacobian/openmp")
    ->RangeMultiplier(8)
    ->Range(64, 1 << 18)
    ->UseRealTime();
BENCHMARK(bm_turing<kernels::turing_objective_samples_serial>)->Name("turing/serial")->Arg(256)->Arg(4096);
BENCHMARK(bm_turing<kernels::turing_objective_samples_parallel>)
    ->Name("turing/openmp")
    ->Arg(256)
    ->Arg(4096)
    ->UseRealTime();

BENCHMARK_MAIN();
