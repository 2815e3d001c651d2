#pragma once

#include "dp/fem.hpp"
#include "dp/orlicz.hpp"

namespace dp::doublephase {

// Parameters of the flux a(x, xi) = |xi|_eps^{p-2} xi + mu(x) |xi|_eps^{q-2} xi
// with |xi|_eps = sqrt(|xi|^2 + eps^2).
struct FluxParams {
  FluxParams(orlicz::PhaseExponents exps, orlicz::WeightField mu, double epsilon = 1e-10,
             int quadrature_degree = orlicz::kDefaultQuadratureDegree);

  orlicz::PhaseExponents exps;
  orlicz::WeightField mu;
  double epsilon;
  int quadrature_degree;

  // Same parameters with a different regularization (validated).
  [[nodiscard]] FluxParams with_epsilon(double eps) const;
};

fem::SmallVector flux(const fem::SmallVector& xi, double mu, const FluxParams& params);

// d a / d xi. At |xi|_eps = 0 the continuous extension is returned where it
// exists (exponent 2 contributes I, exponents > 2 contribute 0); exponents
// below 2 throw SingularityError there.
fem::SmallMatrix flux_derivative(const fem::SmallVector& xi, double mu, const FluxParams& params);

// Full-length vector: entry i is <A(u), phi_i> - rhs_i on free nodes and 0 on
// Dirichlet nodes.
fem::NodalVector assemble_residual(const fem::DiscreteField& u, const fem::NodalVector& rhs,
                                   const FluxParams& params);

// Jacobian of assemble_residual; Dirichlet rows and columns are identity.
fem::SparseMatrix assemble_jacobian(const fem::DiscreteField& u, const FluxParams& params);

struct AssembledSystem {
  fem::NodalVector residual;
  fem::SparseMatrix jacobian;
};

AssembledSystem assemble_system(const fem::DiscreteField& u, const fem::NodalVector& rhs, const FluxParams& params);

// int (|grad u|_eps^p - eps^p)/p + mu (|grad u|_eps^q - eps^q)/q dx.
// Its first variation is assemble_residual(u, 0).
double energy(const fem::DiscreteField& u, const FluxParams& params);

}  // namespace dp::doublephase
