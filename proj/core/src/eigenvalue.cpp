#include "dp/eigenvalue.hpp"

#include "dp/error.hpp"
#include "dp/parallel.hpp"

#include <Eigen/SparseCholesky>

#include <cmath>
#include <sstream>

namespace dp::eig {

namespace {

using fem::NodalVector;
using fem::SparseMatrix;

// |v|^{r-2} v, continuous at 0 for r > 1.
double signed_power(double v, double r) {
  if (v == 0.0) return 0.0;
  return std::pow(std::abs(v), r - 1.0) * (v > 0.0 ? 1.0 : -1.0);
}

// Mass matrix restricted to free nodes (Dirichlet rows/columns zero).
SparseMatrix free_mass(const fem::Mesh& mesh) {
  SparseMatrix m = fem::mass_matrix(mesh);
  const auto& mask = mesh.dirichlet_mask();
  for (int k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (mask[static_cast<std::size_t>(it.row())] || mask[static_cast<std::size_t>(it.col())]) it.valueRef() = 0.0;
  m.prune(0.0);
  return m;
}

SparseMatrix free_stiffness(const fem::Mesh& mesh) {
  SparseMatrix k = fem::stiffness_matrix(mesh);
  fem::apply_dirichlet(mesh, k);
  return k;
}

struct QuotientParts {
  double numerator = 0.0;    // int |grad u|^r
  double denominator = 0.0;  // int |u|^r
};

QuotientParts quotient_parts(const fem::DiscreteField& u, double r, const fem::QuadratureRule& rule) {
  const auto& mesh = u.mesh();
  QuotientParts parts;
  parts.numerator = parallel::ordered_sum(mesh.num_elements(), [&](std::size_t e) {
    return mesh.volume(e) * std::pow(fem::gradient_on_element(u, e).norm(), r);
  });
  parts.denominator = fem::integrate(
      mesh, [&](const fem::QuadraturePoint& qp) { return std::pow(std::abs(u.value_at(qp.element, qp.bary)), r); },
      rule);
  return parts;
}

// Gradient of the Rayleigh quotient with respect to nodal values (free nodes only).
NodalVector quotient_gradient(const fem::DiscreteField& u, double r, const QuotientParts& parts,
                              const fem::QuadratureRule& rule) {
  const auto& mesh = u.mesh();
  const double ref = rule.reference_volume();
  const double quotient = parts.numerator / parts.denominator;
  NodalVector g = fem::assemble_vector(mesh, [&](std::size_t e, fem::LocalVector& local) {
    const fem::SmallVector grad = fem::gradient_on_element(u, e);
    const double n = grad.norm();
    const double coeff = n == 0.0 ? 0.0 : std::pow(n, r - 2.0);
    const double scale = mesh.volume(e) / ref;
    for (int k = 0; k < mesh.nodes_per_element(); ++k) {
      double d_num = mesh.volume(e) * coeff * grad.dot(mesh.basis_gradient(e, k));
      double d_den = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        d_den += rule.weights[q] * scale * signed_power(u.value_at(e, rule.points[q]), r) *
                 rule.points[q][static_cast<std::size_t>(k)];
      }
      local[k] = r * (d_num - quotient * d_den) / parts.denominator;
    }
  });
  fem::apply_dirichlet(mesh, g);
  return g;
}

void normalize(fem::DiscreteField& u, double r, int degree) {
  const double norm = orlicz::lp_norm(u, r, orlicz::Mode::Value, degree);
  if (!(norm > 0.0)) throw NumericalError("eigenfunction iterate collapsed to zero");
  u *= 1.0 / norm;
  if (u.values().sum() < 0.0) u *= -1.0;
}

EigenResult inverse_iteration(const fem::MeshPtr& mesh, const EigenOptions& opts) {
  if (mesh->num_free_nodes() == 0) throw ConfigError("mesh has no interior nodes");
  const SparseMatrix k = free_stiffness(*mesh);
  const SparseMatrix m = free_mass(*mesh);
  Eigen::SimplicialLDLT<SparseMatrix> solver(k);
  if (solver.info() != Eigen::Success) throw SingularityError("stiffness factorization failed");

  NodalVector u = NodalVector::Ones(static_cast<Eigen::Index>(mesh->num_nodes()));
  fem::apply_dirichlet(*mesh, u);
  double lambda = 0.0;
  for (int it = 1; it <= opts.max_iterations; ++it) {
    NodalVector y = solver.solve(m * u);
    const double my = y.dot(m * y);
    const double next = y.dot(k * y) / my;
    u = y / std::sqrt(my);
    const double change = std::abs(next - lambda);
    lambda = next;
    if (change < opts.tolerance * lambda) {
      fem::DiscreteField field(mesh, u);
      normalize(field, 2.0, opts.quadrature_degree);
      const double quotient = rayleigh_quotient(field, 2.0, opts.quadrature_degree);
      return EigenResult{2.0, quotient, std::move(field), it, change};
    }
  }
  std::ostringstream msg;
  msg << "inverse power iteration did not converge in " << opts.max_iterations << " iterations (lambda=" << lambda
      << ")";
  throw NumericalError(msg.str());
}

}  // namespace

double rayleigh_quotient(const fem::DiscreteField& u, double r, int degree) {
  const auto rule = fem::make_quadrature(u.mesh().dimension(), degree);
  const auto parts = quotient_parts(u, r, rule);
  if (!(parts.denominator > 0.0)) throw NumericalError("Rayleigh quotient of the zero field");
  return parts.numerator / parts.denominator;
}

EigenResult minimize_rayleigh(const fem::DiscreteField& initial, double r, const EigenOptions& opts) {
  if (!(r > 1.0)) throw ConfigError("eigenvalue exponent r must exceed 1");
  const auto& mesh = initial.mesh();
  const auto rule = fem::make_quadrature(mesh.dimension(), opts.quadrature_degree);
  Eigen::SimplicialLDLT<SparseMatrix> precond(free_stiffness(mesh));
  if (precond.info() != Eigen::Success) throw SingularityError("preconditioner factorization failed");

  fem::DiscreteField u = initial;
  fem::apply_dirichlet(u);
  normalize(u, r, opts.quadrature_degree);
  QuotientParts parts = quotient_parts(u, r, rule);
  double value = parts.numerator / parts.denominator;
  double decrement = 0.0;

  for (int it = 1; it <= opts.max_iterations; ++it) {
    const NodalVector grad = quotient_gradient(u, r, parts, rule);
    NodalVector dir = -precond.solve(grad);
    fem::apply_dirichlet(mesh, dir);
    const double slope = grad.dot(dir);
    if (-slope <= opts.tolerance * value) {
      return EigenResult{r, value, std::move(u), it - 1, -slope};
    }
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-16) {
      fem::DiscreteField trial = u;
      trial.values() += alpha * dir;
      const QuotientParts trial_parts = quotient_parts(trial, r, rule);
      const double trial_value = trial_parts.numerator / trial_parts.denominator;
      if (trial_value <= value + opts.armijo * alpha * slope) {
        decrement = value - trial_value;
        u = std::move(trial);
        normalize(u, r, opts.quadrature_degree);
        parts = quotient_parts(u, r, rule);
        value = parts.numerator / parts.denominator;
        accepted = true;
        break;
      }
      alpha *= opts.backtrack;
    }
    if (!accepted) {
      // No representable decrease left: the iterate is optimal to rounding.
      if (-slope <= 1e-8 * value) {
        return EigenResult{r, value, std::move(u), it, -slope};
      }
      std::ostringstream msg;
      msg << "Rayleigh descent stalled at iteration " << it << " (quotient=" << value << ", slope=" << slope << ")";
      throw NumericalError(msg.str());
    }
  }
  std::ostringstream msg;
  msg << "Rayleigh descent did not converge in " << opts.max_iterations << " iterations (quotient=" << value
      << ", last decrement=" << decrement << ")";
  throw NumericalError(msg.str());
}

EigenResult first_eigenvalue(const fem::MeshPtr& mesh, double r, const EigenOptions& opts) {
  if (!(r > 1.0)) throw ConfigError("eigenvalue exponent r must exceed 1");
  EigenResult base = inverse_iteration(mesh, opts);
  if (r == 2.0) return base;
  EigenResult res = minimize_rayleigh(base.eigenfunction, r, opts);
  res.iterations += base.iterations;
  return res;
}

PoincareReport poincare_check(const fem::DiscreteField& u, double r, double lambda, double slack, int degree) {
  if (!(lambda > 0.0)) throw ConfigError("eigenvalue must be positive");
  const auto rule = fem::make_quadrature(u.mesh().dimension(), degree);
  const auto parts = quotient_parts(u, r, rule);
  PoincareReport rep;
  rep.lhs = parts.denominator;
  rep.rhs = parts.numerator / lambda;
  rep.holds = rep.lhs <= rep.rhs * (1.0 + slack);
  return rep;
}

}  // namespace dp::eig
