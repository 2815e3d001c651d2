#include "dp/doublephase.hpp"
#include "dp/random.hpp"

#include <benchmark/benchmark.h>

using namespace dp;

namespace {

struct Setup {
  explicit Setup(int n)
      : mesh(fem::build_uniform_mesh(fem::Box::unit(2), n)),
        params(orlicz::PhaseExponents(2.0, 3.0, 3), orlicz::WeightField::constant(mesh, 1.0)),
        u(mesh),
        rhs(fem::NodalVector::Zero(static_cast<Eigen::Index>(mesh->num_nodes()))) {
    Rng rng(1);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1, 1);
    fem::apply_dirichlet(u);
  }
  fem::MeshPtr mesh;
  doublephase::FluxParams params;
  fem::DiscreteField u;
  fem::NodalVector rhs;
};

void BM_Residual(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(doublephase::assemble_residual(s.u, s.rhs, s.params));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.mesh->num_elements()));
}

void BM_Jacobian(benchmark::State& state) {
  Setup s(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(doublephase::assemble_jacobian(s.u, s.params));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(s.mesh->num_elements()));
}

}  // namespace

BENCHMARK(BM_Residual)->Arg(16)->Arg(64);
BENCHMARK(BM_Jacobian)->Arg(16)->Arg(64);
