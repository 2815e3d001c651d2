#pragma once

#include "dp/expression.hpp"
#include "dp/fem.hpp"
#include "dp/orlicz.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace dp::convection {

// f(x, s, xi). Must be safe to call concurrently.
using Evaluator = std::function<double(const fem::Point& x, double s, const fem::SmallVector& xi)>;
using ScalarFunction = std::function<double(const fem::Point& x)>;

// |f| <= a1 |xi|^{p(q1-1)/q1} + a2 |s|^{q1-1} + alpha, alpha a uniform bound.
struct GrowthCertificate {
  double a1 = 0.0;
  double a2 = 0.0;
  double alpha = 0.0;
  double q1 = 2.0;
};

// f s <= b1 |xi|^p + b2 |s|^p + omega, omega a uniform bound.
struct SignCertificate {
  double b1 = 0.0;
  double b2 = 0.0;
  double omega = 0.0;
};

// (f(x,s,xi) - f(x,t,xi))(s - t) <= c1 |s - t|^2
struct LipschitzCertificate {
  double c1 = 0.0;
};

// xi -> f(x,s,xi) - rho(x) linear with |f - rho| <= c2 |xi|.
struct LinearGradientCertificate {
  double c2 = 0.0;
  ScalarFunction rho;
  double r_prime = 2.0;
};

struct ConvectionSpec {
  std::string name;
  Evaluator f;
  GrowthCertificate growth;
  SignCertificate sign;
  std::optional<LipschitzCertificate> lipschitz;
  std::optional<LinearGradientCertificate> linear_gradient;

  // Throws ConfigError for negative constants or q1 <= 1.
  void validate() const;
};

// f = 0 with all constants zero.
ConvectionSpec zero_convection();

// f(s, xi) = -d1 |s|^{q1-2} s + d2 |xi|^{p-1}. Certificates follow from
// Young's inequality: b1 = d2 (p-1)/p, b2 = d2/p, omega = 0; c1 = 0.
ConvectionSpec example1(double d1, double d2, double q1, double p);

// f(x, xi) = beta . xi + rho(x) for p = 2, with |rho| <= rho_bound.
// Certificates: a1 = |beta|, alpha = rho_bound, q1 = 2; b1 = |beta|^2,
// b2 = 1/2, omega = rho_bound^2; c1 = 0; c2 = |beta|.
ConvectionSpec example2(std::vector<double> beta, ScalarFunction rho, double rho_bound);

// Same evaluator and default certificates as example2, named separately so
// configs can declare their own constants.
ConvectionSpec linear_gradient(std::vector<double> beta, ScalarFunction rho, double rho_bound);

// f given by an expression in x, y, s, g1, g2 with user-declared certificates.
ConvectionSpec from_expression(const expr::Expression& expression, GrowthCertificate growth, SignCertificate sign,
                               std::optional<LipschitzCertificate> lipschitz,
                               std::optional<LinearGradientCertificate> linear_gradient);

// Variables accepted by from_expression, in evaluation order.
const std::vector<std::string>& expression_variables();

// Largest admissible d2 in example1: p / (p - 1 + 1/lambda_1p).
double example1_d2_bound(double p, double lambda_1p);
// Bound on |beta|^2 in example2: min{1 - 1/(2 lambda_12), lambda_12}.
double example2_beta_sq_bound(double lambda_12);

// f(x, s, xi); throws EvaluationError on a non-finite result.
double evaluate(const ConvectionSpec& spec, const fem::Point& x, double s, const fem::SmallVector& xi);

struct AuditOptions {
  std::size_t budget = 100000;
  double s_range = 10.0;   // s, t uniform in [-s_range, s_range]
  double xi_range = 10.0;  // xi, zeta uniform in [-xi_range, xi_range]^d
  std::uint64_t seed = 1;
  double rel_tol = 1e-10;  // relative slack before a sample counts as a violation
};

struct Witness {
  fem::Point x;
  double s = 0.0;
  double t = 0.0;
  fem::SmallVector xi;
  fem::SmallVector zeta;
  double lhs = 0.0;
  double rhs = 0.0;
};

struct ConditionAudit {
  std::string name;
  bool declared = false;
  bool ok = true;
  double worst_margin = 0.0;  // min over samples of rhs - lhs
  std::size_t samples = 0;
  std::optional<Witness> witness;  // first violating sample
};

struct AuditReport {
  ConditionAudit growth;
  ConditionAudit sign;
  ConditionAudit u1;
  ConditionAudit u2_bound;
  ConditionAudit u2_linearity;
  bool q1_subcritical = true;  // 1 < q1 < p* (p* from the declared N; true when p >= N)
  std::optional<double> critical_exponent;

  [[nodiscard]] bool passed() const;
};

// Monte-Carlo audit of each declared inequality at quadrature points of the
// mesh. A passing audit is evidence, not proof.
AuditReport audit_certificates(const ConvectionSpec& spec, const orlicz::PhaseExponents& exps,
                               const fem::Mesh& mesh, const AuditOptions& opts = {});

struct ConditionCheck {
  double value = 0.0;
  bool ok = false;
  bool applicable = true;  // uniqueness only: requires p = 2
};

// b1 + b2 / lambda_1p < 1
ConditionCheck check_existence_condition(const ConvectionSpec& spec, double lambda_1p);
// c1 / lambda_12 + c2 / sqrt(lambda_12) < 1, and p = 2.
// Throws ConfigError if the (U1)/(U2) certificates are missing.
ConditionCheck check_uniqueness_condition(const ConvectionSpec& spec, double lambda_12,
                                          const orlicz::PhaseExponents& exps);

struct CertificateVerdict {
  bool growth_ok = false;
  bool sign_ok = false;
  double existence_value = 0.0;
  double existence_value_deflated = 0.0;  // with 0.95 lambda_1p
  bool existence_ok = false;
  bool has_uniqueness_certificates = false;
  bool u1_ok = false;
  bool u2_ok = false;
  double uniqueness_value = 0.0;
  double uniqueness_value_deflated = 0.0;  // with 0.95 lambda_12
  bool uniqueness_ok = false;
  double lambda_1p = 0.0;
  double lambda_12 = 0.0;
  bool admissible_poincare = false;
  bool subcritical_range = false;
  bool uniqueness_case = false;
  bool q1_subcritical = false;

  // growth, sign and existence; plus (U1), (U2) and uniqueness when the
  // certificates are present and p = 2.
  [[nodiscard]] bool passed() const;
};

inline constexpr double kLambdaSafetyFactor = 0.95;

CertificateVerdict make_verdict(const ConvectionSpec& spec, const orlicz::PhaseExponents& exps,
                                const AuditReport& audit, double lambda_1p, double lambda_12);

// load_i = int f(x, u, grad u) phi_i dx with (u, grad u) from the frozen
// field; Dirichlet entries are zero.
fem::NodalVector assemble_load(const ConvectionSpec& spec, const fem::DiscreteField& u_frozen,
                               int degree = orlicz::kDefaultQuadratureDegree);

}  // namespace dp::convection
