#include "dp/orlicz.hpp"

#include "dp/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace dp::orlicz {

PhaseExponents::PhaseExponents(double p, double q, int N) : p_(p), q_(q), N_(N) {
  if (!(p > 1.0 && q > p)) {
    std::ostringstream msg;
    msg << "exponents must satisfy 1 < p < q (got p=" << p << ", q=" << q << ")";
    throw ConfigError(msg.str());
  }
  if (N < 1) throw ConfigError("space dimension N must be >= 1");
}

bool PhaseExponents::admissible_poincare() const { return q_ / p_ < 1.0 + 1.0 / N_; }
bool PhaseExponents::subcritical_range() const { return q_ < N_; }
bool PhaseExponents::uniqueness_case() const { return p_ == 2.0 && q_ < N_; }

WeightField::WeightField(fem::DiscreteField values) : values_(std::move(values)) {
  if (values_.size() > 0 && values_.values().minCoeff() < 0.0) {
    throw ConfigError("weight mu must be nonnegative at every node");
  }
  const auto& mesh = values_.mesh();
  for (std::size_t e = 0; e < mesh.num_elements(); ++e) {
    lipschitz_ = std::max(lipschitz_, fem::gradient_on_element(values_, e).norm());
  }
}

WeightField WeightField::constant(fem::MeshPtr mesh, double value) {
  fem::DiscreteField f(std::move(mesh));
  f.values().setConstant(value);
  return WeightField(std::move(f));
}

WeightField WeightField::interpolate(fem::MeshPtr mesh, const std::function<double(const fem::Point&)>& fn) {
  return WeightField(fem::DiscreteField::interpolate(std::move(mesh), fn));
}

namespace {

struct PowerIntegrals {
  double plain = 0.0;     // int |v|^p
  double weighted = 0.0;  // int mu |v|^q
};

void require_same_mesh(const fem::DiscreteField& u, const WeightField& mu) {
  if (&u.mesh() != &mu.mesh()) throw ConfigError("field and weight live on different meshes");
}

// Integrates phi(|v|, mu) where v is u or |grad u| at quadrature points.
template <class Fn>
double integrate_magnitude(const fem::DiscreteField& u, const WeightField* mu, Mode mode, int degree, Fn&& fn) {
  const auto& mesh = u.mesh();
  const auto rule = fem::make_quadrature(mesh.dimension(), degree);
  return fem::integrate(
      mesh,
      [&](const fem::QuadraturePoint& qp) {
        const double v = mode == Mode::Value ? std::abs(u.value_at(qp.element, qp.bary))
                                             : fem::gradient_on_element(u, qp.element).norm();
        const double w = mu ? mu->at(qp.element, qp.bary) : 0.0;
        return fn(v, w);
      },
      rule);
}

PowerIntegrals power_integrals(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps,
                               Mode mode, int degree) {
  require_same_mesh(u, mu);
  PowerIntegrals out;
  out.plain = integrate_magnitude(u, &mu, mode, degree, [&](double v, double) { return std::pow(v, exps.p()); });
  out.weighted =
      integrate_magnitude(u, &mu, mode, degree, [&](double v, double w) { return w * std::pow(v, exps.q()); });
  return out;
}

// Root of plain * t^-p + weighted * t^-q = 1; the left side is strictly
// decreasing in t whenever plain + weighted > 0.
double solve_unit_modular(double plain, double weighted, double p, double q, double rel_tol) {
  if (plain + weighted <= 0.0) return 0.0;
  auto excess = [&](double t) { return plain * std::pow(t, -p) + weighted * std::pow(t, -q) - 1.0; };
  double guess = plain > 0.0 ? std::pow(plain, 1.0 / p) : std::pow(weighted, 1.0 / q);
  double lo = guess, hi = guess;
  int steps = 0;
  while (excess(lo) <= 0.0) {
    lo *= 0.5;
    if (++steps > 2000) throw NumericalError("Luxemburg norm: failed to bracket root");
  }
  while (excess(hi) > 0.0) {
    hi *= 2.0;
    if (++steps > 2000) throw NumericalError("Luxemburg norm: failed to bracket root");
  }
  for (int iter = 0; iter < 200; ++iter) {
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= rel_tol * hi || mid == lo || mid == hi) return mid;
    if (excess(mid) > 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  throw NumericalError("Luxemburg norm: bisection did not converge within 200 iterations");
}

}  // namespace

double modular(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps, Mode mode,
               int degree) {
  const auto ints = power_integrals(u, mu, exps, mode, degree);
  return ints.plain + ints.weighted;
}

double luxemburg_norm(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps, Mode mode,
                      int degree, double rel_tol) {
  const auto ints = power_integrals(u, mu, exps, mode, degree);
  return solve_unit_modular(ints.plain, ints.weighted, exps.p(), exps.q(), rel_tol);
}

double weighted_seminorm(const fem::DiscreteField& u, const WeightField& mu, double q, Mode mode, int degree) {
  if (!(q > 1.0)) throw ConfigError("seminorm exponent q must exceed 1");
  require_same_mesh(u, mu);
  const double integral =
      integrate_magnitude(u, &mu, mode, degree, [&](double v, double w) { return w * std::pow(v, q); });
  return std::pow(integral, 1.0 / q);
}

double lp_norm(const fem::DiscreteField& v, double r, Mode mode, int degree) {
  if (!(r >= 1.0)) throw ConfigError("Lebesgue exponent r must be >= 1");
  const double integral =
      integrate_magnitude(v, nullptr, mode, degree, [&](double value, double) { return std::pow(value, r); });
  return std::pow(integral, 1.0 / r);
}

double critical_exponent(const PhaseExponents& exps) {
  const double N = exps.N();
  if (exps.p() >= N) {
    std::ostringstream msg;
    msg << "critical exponent undefined for p >= N (p=" << exps.p() << ", N=" << exps.N() << ")";
    throw DomainError(msg.str());
  }
  return N * exps.p() / (N - exps.p());
}

SandwichReport check_sandwich(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps,
                              Mode mode, double slack, int degree) {
  const auto ints = power_integrals(u, mu, exps, mode, degree);
  SandwichReport r;
  r.norm = solve_unit_modular(ints.plain, ints.weighted, exps.p(), exps.q(), 1e-12);
  const double np = std::pow(r.norm, exps.p());
  const double nq = std::pow(r.norm, exps.q());
  r.lhs = std::min(np, nq);
  r.rhs = std::max(np, nq);
  r.mid = ints.plain + ints.weighted;
  r.holds = r.lhs <= r.mid * (1.0 + slack) && r.mid <= r.rhs * (1.0 + slack);
  return r;
}

double lq_embedding_constant(const PhaseExponents& exps, double mu_max, double volume) {
  if (!(volume > 0.0) || mu_max < 0.0) throw ConfigError("embedding constant needs volume > 0 and mu_max >= 0");
  return solve_unit_modular(std::pow(volume, 1.0 - exps.p() / exps.q()), mu_max, exps.p(), exps.q(), 1e-14);
}

}  // namespace dp::orlicz
