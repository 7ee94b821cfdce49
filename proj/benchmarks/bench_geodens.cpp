#include <benchmark/benchmark.h>

#include <cmath>

#include "geodens/density_geodesic.hpp"
#include "geodens/epdiff.hpp"
#include "geodens/matching.hpp"
#include "geodens/spectral.hpp"

using namespace geodens;

namespace {

Grid grid_for(const benchmark::State& state) {
  return Grid(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)));
}

ScalarField density(const Grid& g) {
  ScalarField f = ScalarField::sample(g, [&](double x, double y) {
    return 1.0 + 0.4 * std::cos(x) * (g.dim() == 2 ? std::cos(y) : 1.0);
  });
  f *= 1.0 / f.mean();
  return f;
}

ScalarField momentum(const Grid& g) {
  return ScalarField::sample(g, [&](double x, double y) {
    return 0.2 * std::sin(x) * (g.dim() == 2 ? std::cos(2 * y) : 1.0);
  });
}

void grids(benchmark::internal::Benchmark* b) {
  b->Args({1, 64})->Args({1, 256})->Args({2, 32})->Args({2, 64});
}

}  // namespace

static void BM_ForwardInverse(benchmark::State& state) {
  const Grid g = grid_for(state);
  const ScalarField f = density(g);
  for (auto _ : state) benchmark::DoNotOptimize(inverse(g, forward(f)));
}
BENCHMARK(BM_ForwardInverse)->Apply(grids);

static void BM_ApplyLRho(benchmark::State& state) {
  const Grid g = grid_for(state);
  const ScalarField rho = density(g);
  const ScalarField p = momentum(g);
  for (auto _ : state) benchmark::DoNotOptimize(apply_L_rho(rho, p, 1));
}
BENCHMARK(BM_ApplyLRho)->Apply(grids);

static void BM_SolveLRho(benchmark::State& state) {
  const Grid g = grid_for(state);
  const ScalarField rho = density(g);
  const ScalarField rhodot = apply_L_rho(rho, momentum(g), 1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_L_rho(rho, rhodot, 1));
}
BENCHMARK(BM_SolveLRho)->Apply(grids);

static void BM_StepRK4(benchmark::State& state) {
  const Grid g = grid_for(state);
  const DensityState s = make_density_state(density(g), momentum(g), 1);
  for (auto _ : state) benchmark::DoNotOptimize(step_rk4(s, 1e-3));
}
BENCHMARK(BM_StepRK4)->Apply(grids);

static void BM_EpdiffRhs(benchmark::State& state) {
  const Grid g = grid_for(state);
  const VectorField u = horizontal_velocity(make_density_state(density(g), momentum(g), 1));
  for (auto _ : state) benchmark::DoNotOptimize(epdiff_rhs(u, 1));
}
BENCHMARK(BM_EpdiffRhs)->Apply(grids);

static void BM_Compose(benchmark::State& state) {
  const Grid g = grid_for(state);
  const VectorField u = horizontal_velocity(make_density_state(density(g), momentum(g), 1));
  const ScalarField f = density(g);
  for (auto _ : state) benchmark::DoNotOptimize(compose(f, u));
}
BENCHMARK(BM_Compose)->Args({1, 64})->Args({1, 256})->Args({2, 16})->Args({2, 32});

static void BM_Objective(benchmark::State& state) {
  const Grid g(1, static_cast<int>(state.range(0)));
  const MatchProblem problem{
      .rho0 = density(g), .rho1 = ScalarField::constant(g, 1.0), .T = 1.0, .dt = 1e-2, .n_modes = 8};
  const std::vector<double> c(coefficient_count(1, 8), 0.01);
  for (auto _ : state) benchmark::DoNotOptimize(objective(problem, c));
}
BENCHMARK(BM_Objective)->Arg(64)->Arg(128)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
