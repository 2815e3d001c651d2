#include "dp/doublephase.hpp"

#include "dp/error.hpp"
#include "dp/parallel.hpp"

#include <cmath>

namespace dp::doublephase {

FluxParams::FluxParams(orlicz::PhaseExponents exps_in, orlicz::WeightField mu_in, double epsilon_in,
                       int quadrature_degree_in)
    : exps(exps_in), mu(std::move(mu_in)), epsilon(epsilon_in), quadrature_degree(quadrature_degree_in) {
  if (!(epsilon >= 0.0)) throw ConfigError("regularization epsilon must be >= 0");
  if (epsilon == 0.0 && (exps.p() < 2.0 || exps.q() < 2.0)) {
    throw ConfigError("epsilon = 0 requires p >= 2 and q >= 2");
  }
}

FluxParams FluxParams::with_epsilon(double eps) const { return FluxParams(exps, mu, eps, quadrature_degree); }

namespace {

void require_mesh(const fem::DiscreteField& u, const FluxParams& params) {
  if (&u.mesh() != &params.mu.mesh()) throw ConfigError("field and weight live on different meshes");
}

// One term |xi|_eps^{r-2}(I + (r-2) xi xi^T / |xi|_eps^2).
void add_derivative_term(fem::SmallMatrix& out, const fem::SmallVector& xi, double norm, double r, double scale) {
  const auto d = xi.size();
  if (norm == 0.0) {
    if (r == 2.0) {
      out += scale * fem::SmallMatrix::Identity(d, d);
    } else if (r < 2.0) {
      throw SingularityError("flux derivative is singular at zero gradient for exponent < 2");
    }
    return;
  }
  const double s = std::pow(norm, r - 2.0);
  out += scale * s * (fem::SmallMatrix::Identity(d, d) + (r - 2.0) * (xi * xi.transpose()) / (norm * norm));
}

}  // namespace

fem::SmallVector flux(const fem::SmallVector& xi, double mu, const FluxParams& params) {
  const double norm = std::sqrt(xi.squaredNorm() + params.epsilon * params.epsilon);
  if (norm == 0.0) return fem::SmallVector::Zero(xi.size());
  double coeff = std::pow(norm, params.exps.p() - 2.0);
  if (mu != 0.0) coeff += mu * std::pow(norm, params.exps.q() - 2.0);
  return coeff * xi;
}

fem::SmallMatrix flux_derivative(const fem::SmallVector& xi, double mu, const FluxParams& params) {
  const double norm = std::sqrt(xi.squaredNorm() + params.epsilon * params.epsilon);
  fem::SmallMatrix out = fem::SmallMatrix::Zero(xi.size(), xi.size());
  add_derivative_term(out, xi, norm, params.exps.p(), 1.0);
  if (mu != 0.0) add_derivative_term(out, xi, norm, params.exps.q(), mu);
  return out;
}

fem::NodalVector assemble_residual(const fem::DiscreteField& u, const fem::NodalVector& rhs,
                                   const FluxParams& params) {
  require_mesh(u, params);
  const auto& mesh = u.mesh();
  if (static_cast<std::size_t>(rhs.size()) != mesh.num_nodes()) throw ConfigError("load vector size mismatch");
  const auto rule = fem::make_quadrature(mesh.dimension(), params.quadrature_degree);
  const double ref = rule.reference_volume();
  fem::NodalVector r = fem::assemble_vector(mesh, [&](std::size_t e, fem::LocalVector& local) {
    const fem::SmallVector g = fem::gradient_on_element(u, e);
    fem::SmallVector a = fem::SmallVector::Zero(g.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      a += rule.weights[q] * flux(g, params.mu.at(e, rule.points[q]), params);
    }
    a *= mesh.volume(e) / ref;
    for (int k = 0; k < mesh.nodes_per_element(); ++k) local[k] = a.dot(mesh.basis_gradient(e, k));
  });
  r -= rhs;
  fem::apply_dirichlet(mesh, r);
  return r;
}

fem::SparseMatrix assemble_jacobian(const fem::DiscreteField& u, const FluxParams& params) {
  require_mesh(u, params);
  const auto& mesh = u.mesh();
  const auto rule = fem::make_quadrature(mesh.dimension(), params.quadrature_degree);
  const double ref = rule.reference_volume();
  fem::SparseMatrix j = fem::assemble_matrix(mesh, [&](std::size_t e, fem::LocalMatrix& local) {
    const fem::SmallVector g = fem::gradient_on_element(u, e);
    fem::SmallMatrix da = fem::SmallMatrix::Zero(g.size(), g.size());
    for (std::size_t q = 0; q < rule.size(); ++q) {
      da += rule.weights[q] * flux_derivative(g, params.mu.at(e, rule.points[q]), params);
    }
    da *= mesh.volume(e) / ref;
    const int nloc = mesh.nodes_per_element();
    for (int a = 0; a < nloc; ++a)
      for (int b = 0; b < nloc; ++b) local(a, b) = mesh.basis_gradient(e, a).dot(da * mesh.basis_gradient(e, b));
  });
  fem::apply_dirichlet(mesh, j);
  return j;
}

AssembledSystem assemble_system(const fem::DiscreteField& u, const fem::NodalVector& rhs, const FluxParams& params) {
  return {assemble_residual(u, rhs, params), assemble_jacobian(u, params)};
}

double energy(const fem::DiscreteField& u, const FluxParams& params) {
  require_mesh(u, params);
  const auto& mesh = u.mesh();
  const auto rule = fem::make_quadrature(mesh.dimension(), params.quadrature_degree);
  const double p = params.exps.p();
  const double q = params.exps.q();
  const double eps = params.epsilon;
  const double eps_p = std::pow(eps, p);
  const double eps_q = std::pow(eps, q);
  std::vector<double> grad_norm(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    grad_norm[e] = std::sqrt(fem::gradient_on_element(u, e).squaredNorm() + eps * eps);
  }
  return fem::integrate(
      mesh,
      [&](const fem::QuadraturePoint& qp) {
        const double n = grad_norm[qp.element];
        const double mu = params.mu.at(qp.element, qp.bary);
        double value = (std::pow(n, p) - eps_p) / p;
        if (mu != 0.0) value += mu * (std::pow(n, q) - eps_q) / q;
        return value;
      },
      rule);
}

}  // namespace dp::doublephase
