#pragma once

#include "dp/fem.hpp"
#include "dp/orlicz.hpp"

namespace dp::eig {

struct EigenOptions {
  double tolerance = 1e-12;     // relative eigenvalue change / predicted decrease
  int max_iterations = 10000;
  int quadrature_degree = orlicz::kDefaultQuadratureDegree;
  double armijo = 1e-4;
  double backtrack = 0.5;
};

struct EigenResult {
  double r = 2.0;
  double lambda = 0.0;
  fem::DiscreteField eigenfunction;  // ||u||_r = 1, zero on the Dirichlet nodes
  int iterations = 0;
  double final_decrement = 0.0;
};

// int |grad u|^r / int |u|^r
double rayleigh_quotient(const fem::DiscreteField& u, double r,
                         int degree = orlicz::kDefaultQuadratureDegree);

// First Dirichlet eigenvalue of the r-Laplacian on the mesh.
// r = 2: inverse power iteration on K u = lambda M u.
// r != 2: Rayleigh-quotient descent started from the r = 2 eigenfunction.
// Throws NumericalError if the iteration budget is exhausted.
EigenResult first_eigenvalue(const fem::MeshPtr& mesh, double r, const EigenOptions& opts = {});

// Projected descent on {||u||_r = 1}: steps along the gradient preconditioned
// by the Dirichlet Laplacian, Armijo backtracking, renormalization each step.
EigenResult minimize_rayleigh(const fem::DiscreteField& initial, double r, const EigenOptions& opts = {});

struct PoincareReport {
  double lhs = 0.0;  // ||u||_r^r
  double rhs = 0.0;  // lambda^-1 ||grad u||_r^r
  bool holds = true;
};

// ||u||_r^r <= lambda^-1 ||grad u||_r^r with relative slack.
PoincareReport poincare_check(const fem::DiscreteField& u, double r, double lambda, double slack = 1e-10,
                              int degree = orlicz::kDefaultQuadratureDegree);

}  // namespace dp::eig
