#include "doctest.h"

#include "dp/error.hpp"
#include "dp/fem.hpp"
#include "dp/parallel.hpp"
#include "dp/random.hpp"
#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

using namespace dp;
using fem::Point;

namespace {

Point pt(double x) {
  Point p(1);
  p << x;
  return p;
}
Point pt(double x, double y) {
  Point p(2);
  p << x, y;
  return p;
}

fem::DiscreteField random_field(const fem::MeshPtr& mesh, std::uint64_t seed) {
  Rng rng(seed);
  fem::DiscreteField u(mesh);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.0, 1.0);
  return u;
}

}  // namespace

TEST_SUITE("fem") {

TEST_CASE("uniform interval mesh counts") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  CHECK(m->num_nodes() == 5);
  CHECK(m->num_elements() == 4);
  REQUIRE(m->boundary_nodes().size() == 2);
  CHECK(m->is_boundary(0));
  CHECK(m->is_boundary(4));
  CHECK_FALSE(m->is_boundary(2));
  CHECK(m->measure() == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("uniform square mesh counts") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
  CHECK(m->num_nodes() == 9);
  CHECK(m->num_elements() == 8);
  CHECK(m->boundary_nodes().size() == 8);
  CHECK(m->num_free_nodes() == 1);
  for (std::size_t e = 0; e < m->num_elements(); ++e) CHECK(m->volume(e) == doctest::Approx(0.125));
}

TEST_CASE("invalid mesh parameters are configuration errors") {
  CHECK_THROWS_AS(fem::build_uniform_mesh(fem::Box::unit(1), 0), ConfigError);
  CHECK_THROWS_AS(fem::build_uniform_mesh(fem::Box::unit(2), -3), ConfigError);
  fem::Box bad;
  bad.dim = 3;
  CHECK_THROWS_AS(fem::build_uniform_mesh(bad, 2), ConfigError);
  fem::Box flat = fem::Box::unit(2);
  flat.upper[1] = 0.0;
  CHECK_THROWS_AS(fem::build_uniform_mesh(flat, 2), ConfigError);
}

TEST_CASE("mesh invariants are enforced on construction") {
  CHECK_THROWS_AS(fem::Mesh(1, {pt(0), pt(1)}, {{0, 2, 0}}, {0}), ConfigError);
  CHECK_THROWS_AS(fem::Mesh(1, {pt(0), pt(1)}, {{0, 1, 0}}, {5}), ConfigError);
  CHECK_THROWS_AS(fem::Mesh(1, {pt(0), pt(0)}, {{0, 1, 0}}, {0}), ConfigError);
  // overlapping intervals
  CHECK_THROWS_AS(fem::Mesh(1, {pt(0), pt(1), pt(0.5)}, {{0, 1, 0}, {0, 2, 0}}, {0, 1}), ConfigError);
  // collinear triangle
  CHECK_THROWS_AS(fem::Mesh(2, {pt(0, 0), pt(1, 1), pt(2, 2)}, {{0, 1, 2}}, {0}), ConfigError);
}

TEST_CASE("gradient_on_element of affine fields") {
  auto m1 = fem::build_uniform_mesh(fem::Box::unit(1), 7);
  auto ux = fem::DiscreteField::interpolate(m1, [](const Point& x) { return x[0]; });
  auto c = fem::DiscreteField::interpolate(m1, [](const Point&) { return 3.5; });
  for (std::size_t e = 0; e < m1->num_elements(); ++e) {
    CHECK(fem::gradient_on_element(ux, e)[0] == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(fem::gradient_on_element(c, e)[0] == doctest::Approx(0.0));
  }
  auto m2 = fem::build_uniform_mesh(fem::Box::unit(2), 5);
  auto u2 = fem::DiscreteField::interpolate(m2, [](const Point& x) { return 2.0 * x[0] - x[1]; });
  for (std::size_t e = 0; e < m2->num_elements(); ++e) {
    const auto g = fem::gradient_on_element(u2, e);
    CHECK(g[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(g[1] == doctest::Approx(-1.0).epsilon(1e-12));
  }
  CHECK_THROWS_AS(fem::gradient_on_element(u2, m2->num_elements()), std::out_of_range);
}

TEST_CASE("gradients match an independent vertex-matrix computation") {
  fem::Box box = fem::Box::unit(2);
  box.lower = {-1.0, 0.5};
  box.upper = {2.0, 1.25};
  auto m = fem::build_uniform_mesh(box, 6);
  auto u = random_field(m, 11);
  for (std::size_t e = 0; e < m->num_elements(); ++e) {
    const Eigen::VectorXd ref = oracle::element_gradient(*m, e, u.values());
    const auto g = fem::gradient_on_element(u, e);
    CHECK((g - ref).norm() <= 1e-11 * (1.0 + ref.norm()));
    CHECK(m->volume(e) == doctest::Approx(oracle::element_volume(*m, e)).epsilon(1e-13));
  }
}

TEST_CASE("integrate constant and linear integrands") {
  auto sq = fem::build_uniform_mesh(fem::Box::unit(2), 3);
  CHECK(fem::integrate(*sq, [](const fem::QuadraturePoint&) { return 1.0; }, fem::make_quadrature(2, 1)) ==
        doctest::Approx(1.0).epsilon(1e-14));
  auto line = fem::build_uniform_mesh(fem::Box::unit(1), 5);
  CHECK(fem::integrate(*line, [](const fem::QuadraturePoint& q) { return q.x[0]; }, fem::make_quadrature(1, 2)) ==
        doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("integrate sin(pi x) matches the closed form 2/pi") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 128);
  const double val = fem::integrate(
      *m, [](const fem::QuadraturePoint& q) { return std::sin(std::numbers::pi * q.x[0]); }, fem::make_quadrature(1, 4));
  const double exact = 2.0 / std::numbers::pi;
  CHECK(std::abs(val - exact) < 1e-6);
  // independent check of the oracle value itself
  CHECK(oracle::simpson([](double x) { return std::sin(std::numbers::pi * x); }, 0.0, 1.0) ==
        doctest::Approx(exact).epsilon(1e-12));
}

TEST_CASE("integrate rejects a rule of the wrong dimension") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  CHECK_THROWS_AS(fem::integrate(*m, [](const fem::QuadraturePoint&) { return 1.0; }, fem::make_quadrature(2, 2)),
                  ConfigError);
}

TEST_CASE("quadrature rules: positive weights summing to the reference volume") {
  for (int dim : {1, 2}) {
    const int max_deg = dim == 1 ? 9 : 5;
    for (int deg = 0; deg <= max_deg; ++deg) {
      const auto rule = fem::make_quadrature(dim, deg);
      CHECK(rule.degree >= deg);
      double sum = 0.0;
      for (double w : rule.weights) {
        CHECK(w > 0.0);
        sum += w;
      }
      CHECK(sum == doctest::Approx(rule.reference_volume()).epsilon(1e-14));
      for (const auto& b : rule.points) {
        double s = 0.0;
        for (int k = 0; k <= dim; ++k) s += b[static_cast<std::size_t>(k)];
        CHECK(s == doctest::Approx(1.0).epsilon(1e-14));  // partition of unity at every point
      }
    }
  }
  CHECK_THROWS_AS(fem::make_quadrature(1, 10), ConfigError);
  CHECK_THROWS_AS(fem::make_quadrature(2, 6), ConfigError);
  CHECK_THROWS_AS(fem::make_quadrature(3, 2), ConfigError);
}

TEST_CASE("quadrature exactness on random polynomials") {
  Rng rng(2024);
  SUBCASE("1D, all degrees up to 9") {
    auto m = fem::build_uniform_mesh(fem::Box::unit(1), 3);
    for (int deg = 1; deg <= 9; ++deg) {
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<double> c(static_cast<std::size_t>(deg + 1));
        double exact = 0.0;
        for (int k = 0; k <= deg; ++k) {
          c[static_cast<std::size_t>(k)] = rng.uniform(-1.0, 1.0);
          exact += c[static_cast<std::size_t>(k)] / (k + 1);  // int_0^1 x^k
        }
        const double val = fem::integrate(
            *m,
            [&](const fem::QuadraturePoint& q) {
              double s = 0.0;
              for (int k = deg; k >= 0; --k) s = s * q.x[0] + c[static_cast<std::size_t>(k)];
              return s;
            },
            fem::make_quadrature(1, deg));
        CHECK(std::abs(val - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
      }
    }
  }
  SUBCASE("2D, all degrees up to 5") {
    auto m = fem::build_uniform_mesh(fem::Box::unit(2), 2);
    for (int deg = 1; deg <= 5; ++deg) {
      for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::tuple<int, int, double>> terms;
        double exact = 0.0;
        for (int a = 0; a <= deg; ++a) {
          for (int b = 0; a + b <= deg; ++b) {
            const double coef = rng.uniform(-1.0, 1.0);
            terms.emplace_back(a, b, coef);
            exact += coef / ((a + 1.0) * (b + 1.0));  // int over the unit square of x^a y^b
          }
        }
        const double val = fem::integrate(
            *m,
            [&](const fem::QuadraturePoint& q) {
              double s = 0.0;
              for (auto [a, b, coef] : terms) s += coef * std::pow(q.x[0], a) * std::pow(q.x[1], b);
              return s;
            },
            fem::make_quadrature(2, deg));
        CHECK(std::abs(val - exact) <= 1e-12 * std::max(1.0, std::abs(exact)));
      }
    }
  }
}

TEST_CASE("partition of unity: the all-ones field interpolates to 1 at every quadrature point") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 4);
  fem::DiscreteField one(m, fem::NodalVector::Ones(static_cast<Eigen::Index>(m->num_nodes())));
  const auto rule = fem::make_quadrature(2, 5);
  for (std::size_t e = 0; e < m->num_elements(); ++e) {
    for (const auto& b : rule.points) CHECK(one.value_at(e, b) == doctest::Approx(1.0).epsilon(1e-15));
  }
}

TEST_CASE("apply_dirichlet on fields") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 6);
  auto u = random_field(m, 5);
  CHECK_FALSE(u.satisfies_dirichlet());
  fem::apply_dirichlet(u);
  CHECK(u.satisfies_dirichlet());
  for (int b : m->boundary_nodes()) CHECK(u[static_cast<std::size_t>(b)] == 0.0);
  const auto once = u.values();
  fem::apply_dirichlet(u);
  CHECK(u.values() == once);  // idempotent
}

TEST_CASE("apply_dirichlet on an assembled Laplacian") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 4);
  auto k = fem::stiffness_matrix(*m);
  fem::apply_dirichlet(*m, k);
  const Eigen::MatrixXd dense(k);
  const Eigen::MatrixXd ref = oracle::laplacian(*m);
  for (Eigen::Index i = 0; i < dense.rows(); ++i) {
    for (Eigen::Index j = 0; j < dense.cols(); ++j) {
      const bool bi = m->is_boundary(static_cast<std::size_t>(i));
      const bool bj = m->is_boundary(static_cast<std::size_t>(j));
      const double expected = (bi || bj) ? (i == j ? 1.0 : 0.0) : ref(i, j);
      CHECK(dense(i, j) == doctest::Approx(expected).epsilon(1e-12));
    }
  }
  auto k2 = k;
  fem::apply_dirichlet(*m, k2);
  CHECK((Eigen::MatrixXd(k2) - dense).norm() == 0.0);
}

TEST_CASE("stiffness and mass matrices against dense oracles") {
  for (int dim : {1, 2}) {
    auto m = fem::build_uniform_mesh(fem::Box::unit(dim), dim == 1 ? 9 : 4);
    const Eigen::MatrixXd k(fem::stiffness_matrix(*m));
    CHECK((k - oracle::laplacian(*m)).cwiseAbs().maxCoeff() <= 1e-12);
    const Eigen::MatrixXd mass(fem::mass_matrix(*m));
    CHECK(mass.sum() == doctest::Approx(1.0).epsilon(1e-13));  // 1^T M 1 = |Omega|
    // x^T M x = int x^2 for the exactly interpolated linear function x
    auto x = fem::DiscreteField::interpolate(m, [](const Point& p) { return p[0]; });
    CHECK(x.values().dot(mass * x.values()) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  }
}

TEST_CASE("uniform refinement") {
  auto m1 = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  auto r1 = fem::refine_uniform(*m1);
  CHECK(r1->num_nodes() == 9);
  CHECK(r1->num_elements() == 8);
  CHECK(r1->boundary_nodes().size() == 2);
  CHECK(r1->max_diameter() == doctest::Approx(0.125));

  auto m2 = fem::build_uniform_mesh(fem::Box::unit(2), 3);
  auto r2 = fem::refine_uniform(*m2);
  CHECK(r2->num_nodes() == 49);
  CHECK(r2->num_elements() == 4 * m2->num_elements());
  CHECK(r2->boundary_nodes().size() == 24);
  CHECK(r2->measure() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(r2->max_diameter() == doctest::Approx(0.5 * m2->max_diameter()).epsilon(1e-14));
  for (int b : r2->boundary_nodes()) {
    const auto& x = r2->node(static_cast<std::size_t>(b));
    const bool on_edge = std::abs(x[0]) < 1e-14 || std::abs(x[0] - 1) < 1e-14 || std::abs(x[1]) < 1e-14 ||
                         std::abs(x[1] - 1) < 1e-14;
    CHECK(on_edge);
  }
}

TEST_CASE("mesh text format round trip and comments") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 3);
  std::stringstream buf;
  fem::write_mesh(buf, *m);
  auto back = fem::read_mesh(buf);
  REQUIRE(back->num_nodes() == m->num_nodes());
  REQUIRE(back->num_elements() == m->num_elements());
  CHECK(back->boundary_nodes() == m->boundary_nodes());
  for (std::size_t i = 0; i < m->num_nodes(); ++i) CHECK((back->node(i) - m->node(i)).norm() == 0.0);

  std::istringstream text(
      "# two intervals\n"
      "dim 1\n"
      "nodes 3  # coordinates follow\n0\n0.5\n1\n"
      "elements 2\n0 1\n1 2\n"
      "boundary 2\n0 2\n");
  auto small = fem::read_mesh(text);
  CHECK(small->num_elements() == 2);
  CHECK(small->measure() == doctest::Approx(1.0));

  std::istringstream broken("dim 1\nnodes 2\n0\n1\nelements 1\n0 7\nboundary 0\n");
  CHECK_THROWS_AS(fem::read_mesh(broken), ConfigError);
  std::istringstream truncated("dim 2\nnodes 3\n0 0\n1 0\n");
  CHECK_THROWS_AS(fem::read_mesh(truncated), ConfigError);
  CHECK_THROWS_AS(fem::load_mesh("/nonexistent/mesh.txt"), ConfigError);
}

TEST_CASE("field arithmetic and size checks") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  auto other = fem::build_uniform_mesh(fem::Box::unit(1), 4);
  auto a = random_field(m, 1);
  auto b = random_field(m, 2);
  auto c = a + b;
  CHECK((c.values() - (a.values() + b.values())).norm() == 0.0);
  CHECK(((2.0 * a).values() - 2.0 * a.values()).norm() == 0.0);
  CHECK_THROWS_AS(a + random_field(other, 3), ConfigError);
  CHECK_THROWS_AS(fem::DiscreteField(m, fem::NodalVector::Zero(3)), ConfigError);
}

TEST_CASE("integration and assembly are bit-identical across thread counts") {
  auto m = fem::build_uniform_mesh(fem::Box::unit(2), 24);
  auto u = random_field(m, 9);
  auto run = [&] {
    const double v = fem::integrate(
        *m, [&](const fem::QuadraturePoint& q) { return std::exp(u.value_at(q.element, q.bary)) * q.x[1]; },
        fem::make_quadrature(2, 5));
    return std::pair{v, Eigen::MatrixXd(fem::stiffness_matrix(*m))};
  };
  set_thread_count(1);
  const auto one = run();
  set_thread_count(4);
  const auto four = run();
  set_thread_count(1);
  CHECK(one.first == four.first);
  CHECK(one.second == four.second);
  CHECK_THROWS_AS(set_thread_count(0), ConfigError);
}

}  // TEST_SUITE
