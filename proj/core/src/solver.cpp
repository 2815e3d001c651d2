#include "dp/solver.hpp"

#include "dp/eigenvalue.hpp"
#include "dp/error.hpp"
#include "dp/random.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace dp::solver {

void SolverConfig::validate() const {
  if (!(outer_tolerance > 0.0) || !(inner_tolerance > 0.0)) throw ConfigError("solver tolerances must be > 0");
  if (outer_max_iterations < 1 || inner_max_iterations < 1) throw ConfigError("iteration caps must be >= 1");
  if (!(armijo > 0.0 && armijo < 1.0)) throw ConfigError("Armijo parameter must lie in (0, 1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtracking factor must lie in (0, 1)");
  if (!(epsilon_schedule.start > 0.0) || !(epsilon_schedule.end > 0.0) || !(epsilon_schedule.factor > 1.0)) {
    throw ConfigError("epsilon schedule needs start > 0, end > 0 and factor > 1");
  }
}

namespace {

double max_norm(const fem::NodalVector& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

double gradient_l2(const fem::DiscreteField& u) {
  return orlicz::lp_norm(u, 2.0, orlicz::Mode::Gradient);
}

InnerResult newton(const fem::DiscreteField& start, const fem::NodalVector& load, const doublephase::FluxParams& params,
                   const SolverConfig& cfg) {
  InnerResult res;
  res.solution = start;
  fem::apply_dirichlet(res.solution);
  fem::DiscreteField& u = res.solution;
  auto merit = [&](const fem::DiscreteField& v) { return doublephase::energy(v, params) - load.dot(v.values()); };
  double current = merit(u);
  res.merit_history.push_back(current);

  for (int it = 0; it <= cfg.inner_max_iterations; ++it) {
    auto sys = doublephase::assemble_system(u, load, params);
    res.residual_norm = max_norm(sys.residual);
    if (res.residual_norm <= cfg.inner_tolerance) return res;
    if (it == cfg.inner_max_iterations) break;

    Eigen::SimplicialLDLT<fem::SparseMatrix> solver(sys.jacobian);
    if (solver.info() != Eigen::Success) throw SingularityError("Newton: Jacobian factorization failed");
    fem::NodalVector step = -solver.solve(sys.residual);
    if (solver.info() != Eigen::Success || !step.allFinite()) throw SingularityError("Newton: linear solve failed");
    fem::apply_dirichlet(u.mesh(), step);
    const double slope = sys.residual.dot(step);
    if (!(slope < 0.0)) {
      std::ostringstream msg;
      msg << "Newton: direction is not a descent direction (slope=" << slope << ", residual=" << res.residual_norm
          << ")";
      throw NumericalError(msg.str());
    }

    // Merit values below this threshold are indistinguishable from rounding.
    const double noise = 1e-14 * (std::abs(doublephase::energy(u, params)) + std::abs(load.dot(u.values())) + 1e-300);
    double alpha = 1.0;
    for (;;) {
      fem::DiscreteField trial = u;
      trial.values() += alpha * step;
      const double value = merit(trial);
      if (value <= current + cfg.armijo * alpha * slope + noise) {
        u = std::move(trial);
        current = value;
        res.merit_history.push_back(current);
        break;
      }
      alpha *= cfg.backtrack;
      if (alpha < cfg.min_step) {
        std::ostringstream msg;
        msg << "Newton stagnated: line search step below " << cfg.min_step << " at iteration " << it
            << " (residual=" << res.residual_norm << ", merit=" << current << ")";
        throw NumericalError(msg.str());
      }
    }
    ++res.newton_steps;
  }
  std::ostringstream msg;
  msg << "Newton did not reach residual " << cfg.inner_tolerance << " in " << cfg.inner_max_iterations
      << " iterations (residual=" << res.residual_norm << ")";
  throw NumericalError(msg.str());
}

bool needs_continuation(const doublephase::FluxParams& params) {
  return params.exps.p() < 2.0 || params.exps.q() < 2.0;
}

}  // namespace

InnerResult solve_monotone(const fem::DiscreteField& start, const fem::NodalVector& load,
                           const doublephase::FluxParams& params, const SolverConfig& cfg) {
  if (!needs_continuation(params)) return newton(start, load, params, cfg);
  fem::DiscreteField u = start;
  int steps = 0;
  const auto& sched = cfg.epsilon_schedule;
  for (double eps = sched.start; eps > params.epsilon && eps >= sched.end; eps /= sched.factor) {
    auto stage = newton(u, load, params.with_epsilon(eps), cfg);
    steps += stage.newton_steps;
    u = std::move(stage.solution);
  }
  auto last = newton(u, load, params, cfg);
  last.newton_steps += steps;
  return last;
}

InnerResult solve_frozen(const fem::DiscreteField& u_frozen, const convection::ConvectionSpec& spec,
                         const doublephase::FluxParams& params, const SolverConfig& cfg) {
  const auto load = convection::assemble_load(spec, u_frozen, params.quadrature_degree);
  return solve_monotone(u_frozen, load, params, cfg);
}

SolverReport picard_solve(const convection::ConvectionSpec& spec, const doublephase::FluxParams& params,
                          const SolverConfig& cfg) {
  cfg.validate();
  spec.validate();
  const auto& mesh_ptr = params.mu.field().mesh_ptr();
  SolverReport rep;
  rep.lambda_12 = cfg.lambda_12 ? *cfg.lambda_12 : eig::first_eigenvalue(mesh_ptr, 2.0).lambda;

  if (spec.lipschitz && spec.linear_gradient) {
    rep.contraction_bound =
        spec.lipschitz->c1 / rep.lambda_12 + spec.linear_gradient->c2 / std::sqrt(rep.lambda_12);
    rep.uniqueness_certified = *rep.contraction_bound < 1.0 && params.exps.p() == 2.0;
  }

  fem::DiscreteField u = cfg.initial_guess ? *cfg.initial_guess : fem::DiscreteField(mesh_ptr);
  if (u.mesh_ptr() != mesh_ptr) throw ConfigError("initial guess lives on a different mesh");
  fem::apply_dirichlet(u);
  if (cfg.keep_iterates) rep.iterates.push_back(u);

  fem::NodalVector load = convection::assemble_load(spec, u, params.quadrature_degree);
  for (int k = 1; k <= cfg.outer_max_iterations; ++k) {
    auto inner = solve_monotone(u, load, params, cfg);
    const double increment = gradient_l2(inner.solution - u);
    u = std::move(inner.solution);
    load = convection::assemble_load(spec, u, params.quadrature_degree);

    IterationRecord rec;
    rec.k = k;
    rec.increment_norm = increment;
    rec.residual_norm = max_norm(doublephase::assemble_residual(u, load, params));
    rec.energy = doublephase::energy(u, params);
    rec.newton_steps = inner.newton_steps;
    rec.poincare_ok = eig::poincare_check(u, 2.0, rep.lambda_12).holds;
    rep.history.push_back(rec);
    rep.outer_iterations = k;
    if (cfg.keep_iterates) rep.iterates.push_back(u);

    const double grad_norm = gradient_l2(u);
    if (increment <= cfg.outer_tolerance * (1.0 + grad_norm) && rec.residual_norm <= 10.0 * cfg.inner_tolerance) {
      rep.converged = true;
      break;
    }
  }
  rep.solution = std::move(u);

  if (rep.history.size() >= 3) {
    double log_sum = 0.0;
    int count = 0;
    for (std::size_t i = 1; i < rep.history.size(); ++i) {
      const double prev = rep.history[i - 1].increment_norm;
      const double next = rep.history[i].increment_norm;
      if (prev > 0.0 && next > 0.0) {
        log_sum += std::log(next / prev);
        ++count;
      }
    }
    if (count > 0) rep.contraction_factor = std::exp(log_sum / count);
  }
  if (rep.uniqueness_certified && rep.contraction_factor) {
    rep.contraction_within_bound = *rep.contraction_factor <= *rep.contraction_bound + kContractionSlack;
  }
  return rep;
}

double monotone_term(const fem::DiscreteField& a, const fem::DiscreteField& b, const doublephase::FluxParams& params) {
  if (!a.same_mesh(b)) throw ConfigError("monotone term needs fields on the same mesh");
  const auto& mesh = a.mesh();
  const double q = params.exps.q();
  std::vector<double> inner(mesh.num_elements());
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    const fem::SmallVector ga = fem::gradient_on_element(a, e);
    const fem::SmallVector gb = fem::gradient_on_element(b, e);
    const double na = ga.norm(), nb = gb.norm();
    const fem::SmallVector fa = na == 0.0 ? fem::SmallVector(ga * 0.0) : fem::SmallVector(std::pow(na, q - 2.0) * ga);
    const fem::SmallVector fb = nb == 0.0 ? fem::SmallVector(gb * 0.0) : fem::SmallVector(std::pow(nb, q - 2.0) * gb);
    inner[e] = (fa - fb).dot(ga - gb);
  }
  const auto rule = fem::make_quadrature(mesh.dimension(), params.quadrature_degree);
  return fem::integrate(
      mesh, [&](const fem::QuadraturePoint& qp) { return params.mu.at(qp.element, qp.bary) * inner[qp.element]; },
      rule);
}

ContractionStats measure_contraction(const convection::ConvectionSpec& spec, const doublephase::FluxParams& params,
                                     const SolverConfig& cfg, int trials, std::uint64_t seed) {
  if (trials < 1) throw ConfigError("contraction study needs at least one trial");
  const auto& mesh_ptr = params.mu.field().mesh_ptr();
  SolverConfig run_cfg = cfg;
  run_cfg.keep_iterates = true;
  if (!run_cfg.lambda_12) run_cfg.lambda_12 = eig::first_eigenvalue(mesh_ptr, 2.0).lambda;

  ContractionStats stats;
  stats.trials = trials;
  stats.all_converged = true;
  stats.min_monotone_term = std::numeric_limits<double>::infinity();
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    fem::DiscreteField guess(mesh_ptr);
    for (std::size_t i = 0; i < guess.size(); ++i) guess[i] = rng.uniform(-1.0, 1.0);
    fem::apply_dirichlet(guess);
    run_cfg.initial_guess = guess;
    auto rep = picard_solve(spec, params, run_cfg);
    stats.all_converged = stats.all_converged && rep.converged;
    stats.uniqueness_certified = rep.uniqueness_certified;
    stats.contraction_bound = rep.contraction_bound;
    if (rep.contraction_factor) stats.contraction_factors.push_back(*rep.contraction_factor);
    for (std::size_t i = 1; i < rep.iterates.size(); ++i) {
      stats.min_monotone_term = std::min(stats.min_monotone_term, monotone_term(rep.iterates[i], rep.iterates[i - 1], params));
    }
    rep.iterates.clear();
    stats.reports.push_back(std::move(rep));
  }
  if (!std::isfinite(stats.min_monotone_term)) stats.min_monotone_term = 0.0;
  for (std::size_t i = 0; i < stats.reports.size(); ++i) {
    for (std::size_t j = i + 1; j < stats.reports.size(); ++j) {
      stats.max_pairwise_distance =
          std::max(stats.max_pairwise_distance, gradient_l2(stats.reports[i].solution - stats.reports[j].solution));
    }
  }
  if (stats.uniqueness_certified && stats.all_converged && stats.max_pairwise_distance > 10.0 * cfg.outer_tolerance) {
    std::ostringstream msg;
    msg << "uniqueness condition holds but Picard limits differ by " << stats.max_pairwise_distance;
    throw InvariantViolation(msg.str());
  }
  return stats;
}

ManufacturedSolution numerical_manufactured_solution(convection::ScalarFunction value, int dim,
                                                     const orlicz::PhaseExponents& exps,
                                                     convection::ScalarFunction mu, double epsilon, double h) {
  if (dim != 1 && dim != 2) throw ConfigError("manufactured solution dimension must be 1 or 2");
  // Fourth-order central difference of g along axis k.
  auto central = [h](const auto& g, fem::Point x, int k) {
    auto at = [&](double offset) {
      fem::Point y = x;
      y[k] += offset;
      return g(y);
    };
    return (-at(2.0 * h) + 8.0 * at(h) - 8.0 * at(-h) + at(-2.0 * h)) / (12.0 * h);
  };
  auto gradient = [value, dim, central](const fem::Point& x) {
    fem::SmallVector g(dim);
    for (int k = 0; k < dim; ++k) g[k] = central(value, x, k);
    return g;
  };
  auto load = [gradient, mu, exps, epsilon, dim, central](const fem::Point& x) {
    double div = 0.0;
    for (int k = 0; k < dim; ++k) {
      auto component = [&](const fem::Point& y) {
        const fem::SmallVector g = gradient(y);
        const double n = std::sqrt(g.squaredNorm() + epsilon * epsilon);
        if (n == 0.0) return 0.0;
        return (std::pow(n, exps.p() - 2.0) + mu(y) * std::pow(n, exps.q() - 2.0)) * g[k];
      };
      div += central(component, x, k);
    }
    return -div;
  };
  return ManufacturedSolution{std::move(value), gradient, load};
}

std::vector<MmsLevel> mms_study(const ManufacturedSolution& u_star, const MmsProblem& problem,
                                const convection::ConvectionSpec& spec, const fem::MeshPtr& base, int levels,
                                const SolverConfig& cfg) {
  if (levels < 1) throw ConfigError("MMS study needs at least one level");
  for (int b : base->boundary_nodes()) {
    if (std::abs(u_star.value(base->node(static_cast<std::size_t>(b)))) > 1e-10) {
      throw ConfigError("manufactured solution does not vanish on the boundary");
    }
  }

  convection::ConvectionSpec augmented = spec;
  augmented.name = spec.name + "+mms";
  const auto f = spec.f;
  augmented.f = [f, u_star](const fem::Point& x, double s, const fem::SmallVector& xi) {
    const double g = u_star.operator_load(x) - f(x, u_star.value(x), u_star.gradient(x));
    return f(x, s, xi) + g;
  };

  std::vector<MmsLevel> table;
  fem::MeshPtr mesh = base;
  for (int level = 0; level < levels; ++level) {
    if (level > 0) mesh = fem::refine_uniform(*mesh);
    doublephase::FluxParams params(problem.exps, orlicz::WeightField::interpolate(mesh, problem.mu), problem.epsilon,
                                   problem.quadrature_degree);
    SolverConfig level_cfg = cfg;
    level_cfg.initial_guess.reset();
    level_cfg.lambda_12.reset();
    auto rep = picard_solve(augmented, params, level_cfg);

    const auto rule = fem::make_quadrature(mesh->dimension(), std::max(problem.quadrature_degree, 5));
    const auto& uh = rep.solution;
    const double l2 = fem::integrate(
        *mesh,
        [&](const fem::QuadraturePoint& qp) {
          const double diff = uh.value_at(qp.element, qp.bary) - u_star.value(qp.x);
          return diff * diff;
        },
        rule);
    const double h1 = fem::integrate(
        *mesh,
        [&](const fem::QuadraturePoint& qp) {
          return (fem::gradient_on_element(uh, qp.element) - u_star.gradient(qp.x)).squaredNorm();
        },
        rule);

    MmsLevel row;
    row.level = level;
    row.nodes = mesh->num_nodes();
    row.h = mesh->max_diameter();
    row.l2_error = std::sqrt(l2);
    row.h1_error = std::sqrt(h1);
    row.converged = rep.converged;
    row.outer_iterations = rep.outer_iterations;
    if (!table.empty()) {
      const auto& prev = table.back();
      const double ratio = std::log(prev.h / row.h);
      if (prev.l2_error > 0.0 && row.l2_error > 0.0) row.l2_rate = std::log(prev.l2_error / row.l2_error) / ratio;
      if (prev.h1_error > 0.0 && row.h1_error > 0.0) row.h1_rate = std::log(prev.h1_error / row.h1_error) / ratio;
    }
    table.push_back(row);
  }
  return table;
}

}  // namespace dp::solver
