#pragma once

#include "dp/convection.hpp"
#include "dp/doublephase.hpp"
#include "dp/fem.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace dp::solver {

// Geometric schedule for the flux regularization, used when p < 2 or q < 2.
struct EpsilonSchedule {
  double start = 1e-2;
  double end = 1e-10;
  double factor = 10.0;
};

struct SolverConfig {
  double outer_tolerance = 1e-8;  // on ||grad(u_{k+1} - u_k)||_2, relative to 1 + ||grad u_{k+1}||_2
  int outer_max_iterations = 100;
  double inner_tolerance = 1e-11;  // max-norm of the Newton residual
  int inner_max_iterations = 50;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double min_step = 1e-14;
  std::optional<fem::DiscreteField> initial_guess;  // zero when absent
  EpsilonSchedule epsilon_schedule;
  bool keep_iterates = false;
  // Dirichlet Laplacian eigenvalue for the Poincare chain and contraction
  // bound; computed on the mesh when absent.
  std::optional<double> lambda_12;

  void validate() const;
};

struct InnerResult {
  fem::DiscreteField solution;
  int newton_steps = 0;
  double residual_norm = 0.0;
  std::vector<double> merit_history;  // energy(u) - <load, u> after each accepted step (first entry: start)
};

// Solves <A(u), phi_i> = load_i on free nodes by damped Newton on the convex
// merit energy(u) - <load, u>, starting from `start`.
InnerResult solve_monotone(const fem::DiscreteField& start, const fem::NodalVector& load,
                           const doublephase::FluxParams& params, const SolverConfig& cfg);

// One frozen-convection step: solve A(u) = N_f(u_frozen), warm-started at u_frozen.
InnerResult solve_frozen(const fem::DiscreteField& u_frozen, const convection::ConvectionSpec& spec,
                         const doublephase::FluxParams& params, const SolverConfig& cfg);

struct IterationRecord {
  int k = 0;
  double increment_norm = 0.0;  // ||grad(u_k - u_{k-1})||_2
  double residual_norm = 0.0;   // max-norm of the full weak-form residual at u_k
  double energy = 0.0;
  int newton_steps = 0;
  bool poincare_ok = true;      // ||u_k||_2^2 <= lambda_12^-1 ||grad u_k||_2^2
};

struct SolverReport {
  bool converged = false;
  int outer_iterations = 0;
  std::vector<IterationRecord> history;
  double lambda_12 = 0.0;
  std::optional<double> contraction_factor;  // geometric mean of increment ratios (>= 3 iterations)
  std::optional<double> contraction_bound;   // c1/lambda_12 + c2/sqrt(lambda_12) when certified
  bool uniqueness_certified = false;         // bound < 1 and p = 2
  std::optional<bool> contraction_within_bound;  // factor <= bound + 0.05 when certified
  std::optional<convection::CertificateVerdict> verdict;
  fem::DiscreteField solution;
  std::vector<fem::DiscreteField> iterates;  // filled when keep_iterates
};

inline constexpr double kContractionSlack = 0.05;

// Frozen-convection Picard iteration u_{k+1} = solve_frozen(u_k). Converged
// means the increment is below tolerance and the full weak-form residual is
// below 10x the inner tolerance. Non-convergence is reported, not thrown.
SolverReport picard_solve(const convection::ConvectionSpec& spec, const doublephase::FluxParams& params,
                          const SolverConfig& cfg);

// int mu (|grad a|^{q-2} grad a - |grad b|^{q-2} grad b) . grad(a - b) dx (unregularized).
double monotone_term(const fem::DiscreteField& a, const fem::DiscreteField& b, const doublephase::FluxParams& params);

struct ContractionStats {
  int trials = 0;
  bool all_converged = false;
  bool uniqueness_certified = false;
  double max_pairwise_distance = 0.0;  // max ||grad(u_i - u_j)||_2 over trial limits
  double min_monotone_term = 0.0;      // over successive iterate pairs
  std::vector<double> contraction_factors;
  std::optional<double> contraction_bound;
  std::vector<SolverReport> reports;
};

// Runs picard_solve from `trials` seeded random initial guesses. Throws
// InvariantViolation if the uniqueness condition holds but limits differ by
// more than 10 x outer tolerance.
ContractionStats measure_contraction(const convection::ConvectionSpec& spec, const doublephase::FluxParams& params,
                                     const SolverConfig& cfg, int trials, std::uint64_t seed);

// Closed-form solution for manufactured-solution studies.
struct ManufacturedSolution {
  convection::ScalarFunction value;
  std::function<fem::SmallVector(const fem::Point&)> gradient;
  convection::ScalarFunction operator_load;  // -div a(x, grad u*)
};

// Builds gradient and -div a(x, grad u*) from `value` by fourth-order central
// differences with step `h`.
ManufacturedSolution numerical_manufactured_solution(convection::ScalarFunction value, int dim,
                                                     const orlicz::PhaseExponents& exps,
                                                     convection::ScalarFunction mu, double epsilon,
                                                     double h = 1e-3);

struct MmsProblem {
  orlicz::PhaseExponents exps;
  convection::ScalarFunction mu;
  double epsilon = 1e-10;
  int quadrature_degree = orlicz::kDefaultQuadratureDegree;
};

struct MmsLevel {
  int level = 0;
  std::size_t nodes = 0;
  double h = 0.0;
  double l2_error = 0.0;
  double h1_error = 0.0;
  std::optional<double> l2_rate;
  std::optional<double> h1_rate;
  bool converged = false;
  int outer_iterations = 0;
};

// Solves with right-hand side f + g, g = -div a(x, grad u*) - f(x, u*, grad u*),
// on `levels` uniformly refined meshes starting from `base`.
// Throws ConfigError if u* does not vanish on the boundary of `base`.
std::vector<MmsLevel> mms_study(const ManufacturedSolution& u_star, const MmsProblem& problem,
                                const convection::ConvectionSpec& spec, const fem::MeshPtr& base, int levels,
                                const SolverConfig& cfg);

}  // namespace dp::solver
