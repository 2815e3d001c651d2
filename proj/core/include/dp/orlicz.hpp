#pragma once

#include "dp/fem.hpp"

#include <functional>

namespace dp::orlicz {

inline constexpr int kDefaultQuadratureDegree = 4;

// Exponents 1 < p < q and the analytic space dimension N used by the
// theorems. Violating 1 < p < q throws ConfigError; the remaining
// conditions are reported as flags.
class PhaseExponents {
 public:
  PhaseExponents(double p, double q, int N);

  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] double q() const { return q_; }
  [[nodiscard]] int N() const { return N_; }

  // q/p < 1 + 1/N
  [[nodiscard]] bool admissible_poincare() const;
  // q < N
  [[nodiscard]] bool subcritical_range() const;
  // p = 2 and q < N
  [[nodiscard]] bool uniqueness_case() const;

  bool operator==(const PhaseExponents&) const = default;

 private:
  double p_;
  double q_;
  int N_;
};

// Nodal P1 weight mu >= 0 with an estimated Lipschitz constant
// (max over elements of |grad mu_h|).
class WeightField {
 public:
  explicit WeightField(fem::DiscreteField values);

  static WeightField constant(fem::MeshPtr mesh, double value);
  static WeightField interpolate(fem::MeshPtr mesh, const std::function<double(const fem::Point&)>& fn);

  [[nodiscard]] const fem::DiscreteField& field() const { return values_; }
  [[nodiscard]] const fem::Mesh& mesh() const { return values_.mesh(); }
  [[nodiscard]] double lipschitz_estimate() const { return lipschitz_; }
  [[nodiscard]] double max_value() const { return values_.values().maxCoeff(); }
  [[nodiscard]] double at(std::size_t element, const std::array<double, 3>& bary) const {
    return values_.value_at(element, bary);
  }

 private:
  fem::DiscreteField values_;
  double lipschitz_ = 0.0;
};

// Value mode integrates |u|; gradient mode integrates |grad u| (the
// W^{1,H}_0 variants).
enum class Mode { Value, Gradient };

// rho_H(u) = int |u|^p + mu |u|^q dx
double modular(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps,
               Mode mode = Mode::Value, int degree = kDefaultQuadratureDegree);

// inf{tau > 0 : rho_H(u / tau) <= 1}, by bracketing and bisection.
double luxemburg_norm(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps,
                      Mode mode = Mode::Value, int degree = kDefaultQuadratureDegree,
                      double rel_tol = 1e-12);

// (int mu |u|^q dx)^(1/q)
double weighted_seminorm(const fem::DiscreteField& u, const WeightField& mu, double q,
                         Mode mode = Mode::Value, int degree = kDefaultQuadratureDegree);

// (int |v|^r dx)^(1/r); throws ConfigError for r < 1.
double lp_norm(const fem::DiscreteField& v, double r, Mode mode = Mode::Value,
               int degree = kDefaultQuadratureDegree);

// Np / (N - p); throws DomainError when p >= N.
double critical_exponent(const PhaseExponents& exps);

struct SandwichReport {
  double norm = 0.0;  // ||u||_H (or ||grad u||_H)
  double lhs = 0.0;   // min{norm^p, norm^q}
  double mid = 0.0;   // ||u||_p^p + ||u||_{q,mu}^q
  double rhs = 0.0;   // max{norm^p, norm^q}
  bool holds = true;
};

// Evaluates min{|u|_H^p, |u|_H^q} <= |u|_p^p + |u|_{q,mu}^q <= max{...}
// with relative slack `slack`. Violations are reported, not thrown.
SandwichReport check_sandwich(const fem::DiscreteField& u, const WeightField& mu, const PhaseExponents& exps,
                              Mode mode = Mode::Value, double slack = 1e-10,
                              int degree = kDefaultQuadratureDegree);

// Constant C with ||u||_H <= C ||u||_q whenever mu <= mu_max on a domain of
// measure `volume`: the root of volume^(1-p/q) C^-p + mu_max C^-q = 1.
double lq_embedding_constant(const PhaseExponents& exps, double mu_max, double volume);

}  // namespace dp::orlicz
