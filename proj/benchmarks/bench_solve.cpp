#include "dp/eigenvalue.hpp"
#include "dp/solver.hpp"

#include <benchmark/benchmark.h>

#include <cmath>
#include <numbers>

using namespace dp;

namespace {

void BM_Eigenvalue(benchmark::State& state) {
  const auto mesh = fem::build_uniform_mesh(fem::Box::unit(1), 256);
  const double r = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(eig::first_eigenvalue(mesh, r).lambda);
}

void BM_PicardExample2(benchmark::State& state) {
  const auto mesh = fem::build_uniform_mesh(fem::Box::unit(2), static_cast<int>(state.range(0)));
  const auto spec = convection::example2(
      {0.4, 0.3}, [](const fem::Point& x) { return std::sin(std::numbers::pi * x[0]); }, 1.0);
  const doublephase::FluxParams params(orlicz::PhaseExponents(2.0, 2.5, 3),
                                       orlicz::WeightField::constant(mesh, 1.0));
  solver::SolverConfig cfg;
  cfg.lambda_12 = 2.0 * std::numbers::pi * std::numbers::pi;
  for (auto _ : state) benchmark::DoNotOptimize(solver::picard_solve(spec, params, cfg).outer_iterations);
}

}  // namespace

BENCHMARK(BM_Eigenvalue)->Arg(2)->Arg(3)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PicardExample2)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);
