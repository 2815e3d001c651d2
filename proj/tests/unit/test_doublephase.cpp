#include "doctest.h"

#include "dp/doublephase.hpp"
#include "dp/error.hpp"
#include "dp/random.hpp"
#include "oracles.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

using namespace dp;
using doublephase::FluxParams;
using fem::Point;
using fem::SmallVector;
using orlicz::PhaseExponents;
using orlicz::WeightField;

namespace {

SmallVector vec(double a, double b) {
  SmallVector v(2);
  v << a, b;
  return v;
}

fem::DiscreteField random_masked(const fem::MeshPtr& m, Rng& rng, double scale = 1.0) {
  fem::DiscreteField u(m);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = scale * rng.uniform(-1.0, 1.0);
  fem::apply_dirichlet(u);
  return u;
}

FluxParams params_on(const fem::MeshPtr& m, double p, double q, double mu, double eps) {
  return FluxParams(PhaseExponents(p, q, 3), WeightField::constant(m, mu), eps);
}

fem::NodalVector zero_rhs(const fem::MeshPtr& m) {
  return fem::NodalVector::Zero(static_cast<Eigen::Index>(m->num_nodes()));
}

// Element mean of the nodal weight: exact integral of a P1 function over a simplex / volume.
double element_mean(const fem::Mesh& m, const fem::DiscreteField& w, std::size_t e) {
  double s = 0.0;
  for (int k : m.element(e)) s += w[static_cast<std::size_t>(k)];
  return s / (m.dimension() + 1);
}

}  // namespace

TEST_SUITE("doublephase") {

TEST_CASE("FluxParams validation") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  CHECK_THROWS_AS(params_on(m, 2.0, 3.0, 1.0, -1e-3), ConfigError);
  CHECK_THROWS_AS(params_on(m, 1.5, 3.0, 1.0, 0.0), ConfigError);
  CHECK_THROWS_AS(params_on(m, 2.0, 3.0, 1.0, 0.0).with_epsilon(-1.0), ConfigError);
  CHECK_NOTHROW(params_on(m, 2.0, 3.0, 1.0, 0.0));
  CHECK_NOTHROW(params_on(m, 1.5, 3.0, 1.0, 1e-6));
}

TEST_CASE("flux examples") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
  const auto lap = params_on(m, 2.0, 3.0, 0.0, 0.0);
  const auto xi = vec(0.3, -1.7);
  CHECK((doublephase::flux(xi, 0.0, lap) - xi).norm() == 0.0);
  const auto qp = params_on(m, 2.0, 4.0, 1.0, 0.0);
  CHECK((doublephase::flux(vec(1, 0), 1.0, qp) - vec(2, 0)).norm() < 1e-15);
  CHECK(doublephase::flux(vec(0, 0), 1.0, params_on(m, 2.5, 4.0, 1.0, 0.0)).norm() == 0.0);
}

TEST_CASE("flux derivative: identity for the linear flux and continuous extension at zero") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
  const auto lap = params_on(m, 2.0, 3.0, 0.0, 0.0);
  Rng rng(1);
  for (int i = 0; i < 10; ++i) {
    const auto d = doublephase::flux_derivative(vec(rng.uniform(-5, 5), rng.uniform(-5, 5)), 0.0, lap);
    CHECK((d - fem::SmallMatrix::Identity(2, 2)).norm() < 1e-14);
  }
  const auto at_zero = doublephase::flux_derivative(vec(0, 0), 2.0, params_on(m, 2.0, 3.0, 2.0, 0.0));
  CHECK((at_zero - fem::SmallMatrix::Identity(2, 2)).norm() == 0.0);
}

TEST_CASE("flux derivative matches central differences on random samples") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
  Rng rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const double p = rng.uniform(1.2, 4.0);
    const double q = p + rng.uniform(0.1, 2.0);
    const double mu = rng.uniform(0.0, 3.0);
    const auto params = params_on(m, p, q, mu, 1e-3);
    const auto xi = vec(rng.uniform(-2, 2), rng.uniform(-2, 2));
    const auto d = doublephase::flux_derivative(xi, mu, params);
    fem::SmallMatrix fd(2, 2);
    const double h = 1e-6 * std::max(1.0, xi.norm());
    for (int j = 0; j < 2; ++j) {
      SmallVector e = SmallVector::Zero(2);
      e[j] = h;
      fd.col(j) = (doublephase::flux(xi + e, mu, params) - doublephase::flux(xi - e, mu, params)) / (2 * h);
    }
    CHECK((fd - d).norm() <= 1e-6 * d.norm());
    CHECK((d - d.transpose()).norm() <= 1e-14 * d.norm());
  }
}

TEST_CASE("flux derivative eigenvalues are bounded below") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const double p = rng.uniform(1.1, 4.0);
    const double q = p + rng.uniform(0.1, 2.0);
    const double mu = rng.uniform(0.0, 3.0);
    const double eps = 1e-4;
    const auto params = params_on(m, p, q, mu, eps);
    const auto xi = vec(rng.uniform(-3, 3), rng.uniform(-3, 3));
    const Eigen::Matrix2d d = doublephase::flux_derivative(xi, mu, params);
    const double smallest = Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d>(d).eigenvalues().minCoeff();
    const double norm_eps = std::sqrt(xi.squaredNorm() + eps * eps);
    const double bound = std::min(p - 1.0, 1.0) * std::pow(norm_eps, p - 2.0);
    CHECK(smallest >= bound * (1.0 - 1e-12));
    CHECK(smallest > 0.0);
  }
}

TEST_CASE("residual examples") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  const auto params = params_on(m, 2.0, 3.0, 1.0, 1e-10);
  CHECK(doublephase::assemble_residual(fem::DiscreteField(m), zero_rhs(m), params).norm() == 0.0);
  CHECK_THROWS_AS(doublephase::assemble_residual(fem::DiscreteField(m), fem::NodalVector::Zero(3), params),
                  ConfigError);
}

TEST_CASE("p = 2, mu = 0 residual equals an independent Laplacian applied to u") {
  Rng rng(3);
  for (int dim : {1, 2}) {
    auto m = fem::build_uniform_mesh(fem::Box::unit(dim), dim == 1 ? 17 : 6);
    const auto params = params_on(m, 2.0, 3.0, 0.0, 0.0);
    const auto u = random_masked(m, rng);
    fem::NodalVector rhs(static_cast<Eigen::Index>(m->num_nodes()));
    for (Eigen::Index i = 0; i < rhs.size(); ++i) rhs[i] = rng.uniform(-1, 1);
    fem::apply_dirichlet(*m, rhs);
    Eigen::VectorXd expected = oracle::laplacian(*m) * u.values() - rhs;
    for (int b : m->boundary_nodes()) expected[b] = 0.0;
    CHECK((doublephase::assemble_residual(u, rhs, params) - expected).cwiseAbs().maxCoeff() <=
          1e-12 * (1.0 + expected.cwiseAbs().maxCoeff()));
  }
}

TEST_CASE("energy consistency: <residual(u, 0), u> equals the modular of grad u") {
  Rng rng(4);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 7);
  const auto mu = WeightField::interpolate(m, [](const Point& x) { return 1.0 + x[0] * x[1]; });
  for (int trial = 0; trial < 10; ++trial) {
    const double p = rng.uniform(2.0, 3.0);
    const double q = p + rng.uniform(0.2, 1.5);
    const FluxParams params(PhaseExponents(p, q, 3), mu, 0.0);
    const auto u = random_masked(m, rng, 2.0);
    const double lhs = doublephase::assemble_residual(u, zero_rhs(m), params).dot(u.values());
    double rhs = 0.0;
    for (std::size_t e = 0; e < m->num_elements(); ++e) {
      const double g = oracle::element_gradient(*m, e, u.values()).norm();
      rhs += oracle::element_volume(*m, e) * (std::pow(g, p) + element_mean(*m, mu.field(), e) * std::pow(g, q));
    }
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
  }
}

TEST_CASE("special cases reduce to independent p- and (q,p)-Laplacian assemblies") {
  Rng rng(5);
  for (int dim : {1, 2}) {
    auto m = fem::build_uniform_mesh(fem::Box::unit(dim), dim == 1 ? 23 : 7);
    for (int trial = 0; trial < 5; ++trial) {
      const double p = rng.uniform(2.0, 3.5);
      const double q = p + rng.uniform(0.1, 1.5);
      const auto u = random_masked(m, rng, 3.0);
      auto mask = [&](Eigen::VectorXd v) {
        for (int b : m->boundary_nodes()) v[b] = 0.0;
        return v;
      };
      const auto one = [](std::size_t) { return 1.0; };
      const Eigen::VectorXd plap = mask(oracle::r_laplacian_residual(*m, u.values(), p, one));
      const Eigen::VectorXd qlap = mask(oracle::r_laplacian_residual(*m, u.values(), q, one));
      const auto r0 = doublephase::assemble_residual(u, zero_rhs(m), params_on(m, p, q, 0.0, 0.0));
      const auto r1 = doublephase::assemble_residual(u, zero_rhs(m), params_on(m, p, q, 1.0, 0.0));
      CHECK((r0 - plap).cwiseAbs().maxCoeff() <= 1e-12 * plap.cwiseAbs().maxCoeff());
      CHECK((r1 - plap - qlap).cwiseAbs().maxCoeff() <= 1e-12 * (plap + qlap).cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("Jacobian of the linear case is the Laplacian with identity boundary rows") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 5);
  Rng rng(6);
  const auto params = params_on(m, 2.0, 3.0, 0.0, 0.0);
  Eigen::MatrixXd ref = oracle::laplacian(*m);
  for (int b : m->boundary_nodes()) {
    ref.row(b).setZero();
    ref.col(b).setZero();
    ref(b, b) = 1.0;
  }
  for (int trial = 0; trial < 3; ++trial) {
    const Eigen::MatrixXd j(doublephase::assemble_jacobian(random_masked(m, rng), params));
    CHECK((j - ref).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("Jacobian matches directional finite differences and is symmetric") {
  Rng rng(7);
  for (int dim : {1, 2}) {
    auto m = fem::build_uniform_mesh(fem::Box::unit(dim), dim == 1 ? 20 : 6);
    const auto mu = WeightField::interpolate(m, [](const Point& x) { return 0.5 + x[0]; });
    for (int trial = 0; trial < 10; ++trial) {
      const double p = rng.uniform(1.5, 3.0);
      const double q = p + rng.uniform(0.2, 1.5);
      const FluxParams params(PhaseExponents(p, q, 3), mu, 1e-2);
      const auto u = random_masked(m, rng);
      const auto v = random_masked(m, rng);
      const auto jac = doublephase::assemble_jacobian(u, params);
      const double d = 1e-6;
      const fem::NodalVector fd = (doublephase::assemble_residual(u + d * v, zero_rhs(m), params) -
                                   doublephase::assemble_residual(u - d * v, zero_rhs(m), params)) /
                                  (2 * d);
      const fem::NodalVector jv = jac * v.values();
      CHECK((fd - jv).norm() <= 1e-5 * jv.norm());
      const Eigen::MatrixXd dense(jac);
      CHECK((dense - dense.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * dense.cwiseAbs().maxCoeff());
    }
  }
}

TEST_CASE("Jacobian is positive definite for eps > 0") {
  Rng rng(9);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 5);
  for (double p : {1.3, 2.0, 3.0}) {
    const auto params = params_on(m, p, p + 1.0, 0.7, 1e-3);
    const Eigen::MatrixXd j(doublephase::assemble_jacobian(random_masked(m, rng), params));
    CHECK(Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(j).eigenvalues().minCoeff() > 0.0);
  }
}

TEST_CASE("energy examples") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 256);
  CHECK(doublephase::energy(fem::DiscreteField(m), params_on(m, 2.0, 3.0, 1.0, 1e-10)) == 0.0);
  const auto u = fem::DiscreteField::interpolate(m, [](const Point& x) { return x[0] * (1.0 - x[0]); });
  CHECK(doublephase::energy(u, params_on(m, 2.0, 3.0, 0.0, 0.0)) == doctest::Approx(1.0 / 6.0).epsilon(1e-4));
}

TEST_CASE("energy first variation is the residual") {
  Rng rng(10);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  const auto mu = WeightField::interpolate(m, [](const Point& x) { return x[1]; });
  for (int trial = 0; trial < 10; ++trial) {
    const double p = rng.uniform(1.5, 3.0);
    const FluxParams params(PhaseExponents(p, p + 1.0, 3), mu, 1e-3);
    const auto u = random_masked(m, rng);
    const auto v = random_masked(m, rng);
    const double d = 1e-6;
    const double fd = (doublephase::energy(u + d * v, params) - doublephase::energy(u - d * v, params)) / (2 * d);
    const double exact = doublephase::assemble_residual(u, zero_rhs(m), params).dot(v.values());
    CHECK(std::abs(fd - exact) <= 1e-5 * std::abs(exact));
  }
}

TEST_CASE("monotonicity of the operator") {
  Rng rng(11);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 5);
  const auto mu = WeightField::interpolate(m, [](const Point& x) { return x[0] * x[0]; });
  for (int trial = 0; trial < 200; ++trial) {
    const double p = rng.uniform(2.0, 4.0);
    const FluxParams params(PhaseExponents(p, p + rng.uniform(0.1, 2.0), 3), mu, 0.0);
    const auto u = random_masked(m, rng, 2.0);
    const auto v = random_masked(m, rng, 2.0);
    const double inner = (doublephase::assemble_residual(u, zero_rhs(m), params) -
                          doublephase::assemble_residual(v, zero_rhs(m), params))
                             .dot(u.values() - v.values());
    CHECK(inner >= -1e-12);
  }
}

TEST_CASE("coercivity probe along a ray") {
  Rng rng(12);
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  const auto mu = WeightField::interpolate(m, [](const Point& x) { return x[0]; });
  const FluxParams params(PhaseExponents(2.0, 3.0, 3), mu, 0.0);
  auto u = random_masked(m, rng);
  u *= 1.0 / orlicz::luxemburg_norm(u, mu, params.exps, orlicz::Mode::Gradient);
  double prev = -1.0;
  for (int k = 0; k <= 10; ++k) {
    const double t = std::ldexp(1.0, k);
    const auto tu = t * u;
    const double ratio = doublephase::assemble_residual(tu, zero_rhs(m), params).dot(tu.values()) /
                         orlicz::luxemburg_norm(tu, mu, params.exps, orlicz::Mode::Gradient);
    CHECK(ratio > prev);
    prev = ratio;
  }
  CHECK(prev > 1e5);
}

}  // TEST_SUITE
