#include "doctest.h"

#include "dp/eigenvalue.hpp"
#include "dp/error.hpp"
#include "dp/parallel.hpp"
#include "dp/random.hpp"
#include "dp/solver.hpp"

#include <cmath>
#include <numbers>

using namespace dp;
using doublephase::FluxParams;
using fem::Point;
using orlicz::PhaseExponents;
using orlicz::WeightField;
using std::numbers::pi;

namespace {

fem::SmallVector grad1(double g) {
  fem::SmallVector v(1);
  v << g;
  return v;
}

convection::ConvectionSpec constant_source(convection::ScalarFunction g, double bound) {
  // f = g(x); c2 = 0 so the uniqueness bound is 0.
  return convection::example2({0.0}, std::move(g), bound);
}

solver::ManufacturedSolution sine_solution(convection::ScalarFunction load) {
  return {[](const Point& x) { return std::sin(pi * x[0]); },
          [](const Point& x) { return grad1(pi * std::cos(pi * x[0])); }, std::move(load)};
}

// p = 2, q = 3, mu = x, u = sin(pi x):
// -(u' + x |u'| u')' = pi^2 sin - pi^2 |cos| cos + 2 pi^3 x |cos| sin.
double dp_sine_load(const Point& x) {
  const double s = std::sin(pi * x[0]), c = std::cos(pi * x[0]);
  return pi * pi * s - pi * pi * std::abs(c) * c + 2.0 * pi * pi * pi * x[0] * std::abs(c) * s;
}

}  // namespace

TEST_SUITE("solver") {

TEST_CASE("SolverConfig validation") {
  solver::SolverConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  cfg.outer_tolerance = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.inner_max_iterations = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.backtrack = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  cfg = {};
  cfg.epsilon_schedule.factor = 1.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("solve_frozen with f = 0 returns zero from any frozen field") {
  Rng rng(1);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  const FluxParams params(PhaseExponents(2.0, 3.0, 3), WeightField::constant(m, 1.0));
  fem::DiscreteField frozen(m);
  for (std::size_t i = 0; i < frozen.size(); ++i) frozen[i] = rng.uniform(-2, 2);
  fem::apply_dirichlet(frozen);
  const auto res = solver::solve_frozen(frozen, convection::zero_convection(), params, {});
  CHECK(res.solution.values().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("solve_frozen: Poisson with pi^2 sin(pi x) is at least second order at the nodes") {
  std::vector<double> errors;
  for (int n : {16, 32, 64}) {
    auto m = fem::build_uniform_mesh(fem::Box::unit(1), n);
    const FluxParams params(PhaseExponents(2.0, 3.0, 3), WeightField::constant(m, 0.0));
    const auto spec = constant_source([](const Point& x) { return pi * pi * std::sin(pi * x[0]); }, pi * pi);
    const auto res = solver::solve_frozen(fem::DiscreteField(m), spec, params, {});
    const auto exact = fem::DiscreteField::interpolate(m, [](const Point& x) { return std::sin(pi * x[0]); });
    errors.push_back(orlicz::lp_norm(res.solution - exact, 2.0));
  }
  // 1D P1 nodal values are superconvergent, so the gap to the interpolant shrinks faster than h^2.
  CHECK(errors[0] / errors[1] >= 3.6);
  CHECK(errors[1] / errors[2] >= 3.6);
  CHECK(errors[2] < 1e-5);
}

TEST_CASE("solve_frozen: residual below 1e-10 for a double-phase manufactured load") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 40);
  const FluxParams params(PhaseExponents(2.0, 4.0, 5), WeightField::constant(m, 1.0));
  // u* = x(1 - x): u' = 1 - 2x, -(u' + u'^3)' = 2 + 6 (1 - 2x)^2
  const auto spec = constant_source([](const Point& x) { return 2.0 + 6.0 * std::pow(1.0 - 2.0 * x[0], 2); }, 8.0);
  const auto load = convection::assemble_load(spec, fem::DiscreteField(m));
  const auto res = solver::solve_monotone(fem::DiscreteField(m), load, params, {});
  CHECK(doublephase::assemble_residual(res.solution, load, params).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(res.residual_norm < 1e-10);
}

TEST_CASE("Newton merit is non-increasing across accepted steps") {
  Rng rng(2);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 8);
  for (double p : {1.5, 2.0, 3.0}) {
    const FluxParams params(PhaseExponents(p, p + 1.0, 3),
                            WeightField::interpolate(m, [](const Point& x) { return x[0]; }), 1e-6);
    fem::NodalVector load(static_cast<Eigen::Index>(m->num_nodes()));
    for (Eigen::Index i = 0; i < load.size(); ++i) load[i] = rng.uniform(-0.05, 0.05);
    fem::apply_dirichlet(*m, load);
    const auto res = solver::solve_monotone(fem::DiscreteField(m), load, params, {});
    // with continuation the last stage may start converged
    REQUIRE(res.merit_history.size() >= (p < 2.0 ? 1u : 2u));
    for (std::size_t i = 1; i < res.merit_history.size(); ++i) {
      CHECK(res.merit_history[i] <= res.merit_history[i - 1] + 1e-13 * std::abs(res.merit_history[i - 1]));
    }
    CHECK(res.residual_norm <= 1e-11);
  }
}

TEST_CASE("inner iteration cap is a numerical error") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 32);
  const FluxParams params(PhaseExponents(2.0, 5.0, 6), WeightField::constant(m, 1.0));
  const auto spec = constant_source([](const Point&) { return 50.0; }, 50.0);
  solver::SolverConfig cfg;
  cfg.inner_max_iterations = 1;
  CHECK_THROWS_AS(solver::solve_frozen(fem::DiscreteField(m), spec, params, cfg), NumericalError);
}

TEST_CASE("picard_solve with f = 0 converges in one iteration") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 16);
  const FluxParams params(PhaseExponents(2.0, 3.0, 3), WeightField::constant(m, 1.0));
  const auto rep = solver::picard_solve(convection::zero_convection(), params, {});
  CHECK(rep.converged);
  CHECK(rep.outer_iterations == 1);
  CHECK(rep.solution.values().norm() == 0.0);
  CHECK_FALSE(rep.contraction_factor);  // fewer than 3 iterations
}

TEST_CASE("picard_solve on Example 2 contracts within the proved bound") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 64);
  const double lambda = eig::first_eigenvalue(m, 2.0).lambda;
  const double beta = std::sqrt(0.5 * convection::example2_beta_sq_bound(lambda));
  const auto spec = convection::example2({beta}, [](const Point& x) { return std::sin(pi * x[0]); }, 1.0);
  const FluxParams params(PhaseExponents(2.0, 2.5, 3), WeightField::constant(m, 1.0));
  const auto rep = solver::picard_solve(spec, params, {});
  CHECK(rep.converged);
  CHECK(rep.uniqueness_certified);
  REQUIRE(rep.contraction_factor);
  REQUIRE(rep.contraction_bound);
  CHECK(*rep.contraction_bound == doctest::Approx(beta / std::sqrt(lambda)));
  CHECK(*rep.contraction_factor <= *rep.contraction_bound + solver::kContractionSlack);
  CHECK(rep.contraction_within_bound.value_or(false));
  CHECK(rep.history.back().residual_norm <= 10.0 * 1e-11);
  for (const auto& h : rep.history) CHECK(h.poincare_ok);
}

TEST_CASE("picard_solve on Example 1 at half its bound converges within 50 iterations") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 64);
  const double lambda = eig::first_eigenvalue(m, 2.0).lambda;
  const double d2 = 0.5 * convection::example1_d2_bound(2.0, lambda);
  const auto spec = convection::example1(1.0, d2, 3.0, 2.0);
  const FluxParams params(PhaseExponents(2.0, 2.5, 3), WeightField::constant(m, 1.0));
  solver::SolverConfig cfg;
  cfg.outer_max_iterations = 50;
  const auto rep = solver::picard_solve(spec, params, cfg);
  CHECK(rep.converged);
  CHECK(rep.outer_iterations <= 50);
}

TEST_CASE("outer non-convergence is reported, not thrown") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 32);
  const auto spec = convection::example2({12.0}, [](const Point&) { return 1.0; }, 1.0);
  const FluxParams params(PhaseExponents(2.0, 2.5, 3), WeightField::constant(m, 0.0));
  solver::SolverConfig cfg;
  cfg.outer_max_iterations = 5;
  const auto rep = solver::picard_solve(spec, params, cfg);
  CHECK_FALSE(rep.converged);
  CHECK(rep.outer_iterations == 5);
  CHECK_FALSE(rep.uniqueness_certified);
}

TEST_CASE("p < 2 uses epsilon continuation and converges") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 32);
  const auto spec = constant_source([](const Point&) { return 1.0; }, 1.0);
  const FluxParams params(PhaseExponents(1.5, 2.5, 3), WeightField::constant(m, 0.5), 1e-8);
  const auto rep = solver::picard_solve(spec, params, {});
  CHECK(rep.converged);
  CHECK(rep.solution.values().maxCoeff() > 0.0);
}

TEST_CASE("measure_contraction: f = 0 gives zero limits") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 16);
  const FluxParams params(PhaseExponents(2.0, 3.0, 3), WeightField::constant(m, 1.0));
  const auto stats = solver::measure_contraction(convection::zero_convection(), params, {}, 5, 3);
  CHECK(stats.all_converged);
  CHECK(stats.reports.size() == 5);
  for (const auto& r : stats.reports) CHECK(r.solution.values().cwiseAbs().maxCoeff() < 1e-10);
  CHECK(stats.max_pairwise_distance < 1e-9);
}

TEST_CASE("measure_contraction: Example 2 limits agree across random starts") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 48);
  const double lambda = eig::first_eigenvalue(m, 2.0).lambda;
  const double beta = std::sqrt(0.9 * convection::example2_beta_sq_bound(lambda));
  const auto spec = convection::example2({beta}, [](const Point& x) { return std::sin(pi * x[0]); }, 1.0);
  const FluxParams params(PhaseExponents(2.0, 2.5, 3), WeightField::constant(m, 1.0));
  solver::SolverConfig cfg;
  const auto stats = solver::measure_contraction(spec, params, cfg, 5, 17);
  CHECK(stats.all_converged);
  CHECK(stats.uniqueness_certified);
  CHECK(stats.max_pairwise_distance <= 10.0 * cfg.outer_tolerance);
  CHECK(stats.min_monotone_term >= -1e-12);
  for (double f : stats.contraction_factors) CHECK(f <= *stats.contraction_bound + solver::kContractionSlack);
}

TEST_CASE("monotone term is nonnegative on random field pairs") {
  Rng rng(4);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  const FluxParams params(PhaseExponents(2.0, 3.3, 4),
                          WeightField::interpolate(m, [](const Point& x) { return x[0] + x[1]; }));
  for (int trial = 0; trial < 100; ++trial) {
    fem::DiscreteField a(m), b(m);
    for (std::size_t i = 0; i < a.size(); ++i) {
      a[i] = rng.uniform(-2, 2);
      b[i] = rng.uniform(-2, 2);
    }
    CHECK(solver::monotone_term(a, b, params) >= -1e-12);
  }
}

TEST_CASE("MMS: Poisson rates") {
  solver::MmsProblem problem{PhaseExponents(2.0, 3.0, 3), [](const Point&) { return 0.0; }};
  const auto u = sine_solution([](const Point& x) { return pi * pi * std::sin(pi * x[0]); });
  const auto table =
      solver::mms_study(u, problem, convection::zero_convection(), fem::build_uniform_mesh(fem::Box::unit(1), 8), 5, {});
  REQUIRE(table.size() == 5);
  for (std::size_t i = 1; i < table.size(); ++i) {
    CHECK(table[i].converged);
    CHECK(*table[i].l2_rate == doctest::Approx(2.0).epsilon(0.05));
    CHECK(*table[i].h1_rate == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("MMS: double-phase with mu = x and a symbolic load") {
  solver::MmsProblem problem{PhaseExponents(2.0, 3.0, 3), [](const Point& x) { return x[0]; }};
  const auto table = solver::mms_study(sine_solution(dp_sine_load), problem, convection::zero_convection(),
                                       fem::build_uniform_mesh(fem::Box::unit(1), 8), 5, {});
  for (std::size_t i = 1; i < table.size(); ++i) CHECK(*table[i].h1_rate >= 0.9);
}

TEST_CASE("MMS: symbolic and numerically differentiated loads agree") {
  const PhaseExponents exps(2.0, 3.0, 3);
  const auto mu = [](const Point& x) { return x[0]; };
  const auto numeric = solver::numerical_manufactured_solution(
      [](const Point& x) { return std::sin(pi * x[0]); }, 1, exps, mu, 0.0);
  for (double x : {0.1, 0.3, 0.45, 0.8}) {
    Point p(1);
    p << x;
    CHECK(numeric.operator_load(p) == doctest::Approx(dp_sine_load(p)).epsilon(1e-6));
    CHECK(numeric.gradient(p)[0] == doctest::Approx(pi * std::cos(pi * x)).epsilon(1e-9));
  }
}

TEST_CASE("MMS: convection term and 2D manufactured solution") {
  const PhaseExponents exps(2.0, 2.5, 3);
  const auto mu = [](const Point&) { return 1.0; };
  const auto u = solver::numerical_manufactured_solution(
      [](const Point& x) { return std::sin(pi * x[0]) * std::sin(pi * x[1]); }, 2, exps, mu, 0.0);
  const auto spec = convection::example2({0.3, 0.2}, [](const Point&) { return 0.0; }, 0.0);
  solver::MmsProblem problem{exps, mu};
  const auto table = solver::mms_study(u, problem, spec, fem::build_uniform_mesh(fem::Box::unit(2), 4), 3, {});
  for (std::size_t i = 1; i < table.size(); ++i) {
    CHECK(table[i].converged);
    CHECK(*table[i].h1_rate >= 0.9);
    CHECK(*table[i].l2_rate >= 1.8);
  }
}

TEST_CASE("MMS: zero solution has zero error; nonvanishing boundary values are rejected") {
  solver::MmsProblem problem{PhaseExponents(2.0, 3.0, 3), [](const Point&) { return 1.0; }};
  const solver::ManufacturedSolution zero{[](const Point&) { return 0.0; }, [](const Point&) { return grad1(0.0); },
                                          [](const Point&) { return 0.0; }};
  const auto table =
      solver::mms_study(zero, problem, convection::zero_convection(), fem::build_uniform_mesh(fem::Box::unit(1), 4), 3, {});
  for (const auto& row : table) {
    CHECK(row.l2_error == 0.0);
    CHECK(row.h1_error == 0.0);
  }
  const solver::ManufacturedSolution bad{[](const Point& x) { return x[0]; }, [](const Point&) { return grad1(1.0); },
                                         [](const Point&) { return 0.0; }};
  CHECK_THROWS_AS(
      solver::mms_study(bad, problem, convection::zero_convection(), fem::build_uniform_mesh(fem::Box::unit(1), 4), 2, {}),
      ConfigError);
}

TEST_CASE("Picard iteration tables are identical across thread counts") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 12);
  const auto spec = convection::example2({0.4, 0.3}, [](const Point& x) { return x[0] * (1 - x[1]); }, 1.0);
  const FluxParams params(PhaseExponents(2.0, 2.5, 3),
                          WeightField::interpolate(m, [](const Point& x) { return 1.0 + x[1]; }));
  set_thread_count(1);
  const auto one = solver::picard_solve(spec, params, {});
  set_thread_count(4);
  const auto four = solver::picard_solve(spec, params, {});
  set_thread_count(1);
  REQUIRE(one.history.size() == four.history.size());
  for (std::size_t i = 0; i < one.history.size(); ++i) {
    CHECK(one.history[i].increment_norm == four.history[i].increment_norm);
    CHECK(one.history[i].residual_norm == four.history[i].residual_norm);
    CHECK(one.history[i].energy == four.history[i].energy);
  }
  CHECK(one.solution.values() == four.solution.values());
}

}  // TEST_SUITE
