#include "dp/convection.hpp"

#include "dp/error.hpp"
#include "dp/random.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>

namespace dp::convection {

namespace {

double norm_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

void require_nonnegative(double v, const char* name) {
  if (!(v >= 0.0)) throw ConfigError(std::string("certificate constant ") + name + " must be >= 0");
}

Evaluator linear_gradient_evaluator(std::vector<double> beta, ScalarFunction rho) {
  return [beta = std::move(beta), rho = std::move(rho)](const fem::Point& x, double, const fem::SmallVector& xi) {
    if (static_cast<std::size_t>(xi.size()) != beta.size()) {
      throw EvaluationError("beta has " + std::to_string(beta.size()) + " components but the gradient has " +
                            std::to_string(xi.size()));
    }
    double v = rho(x);
    for (std::size_t i = 0; i < beta.size(); ++i) v += beta[i] * xi[static_cast<Eigen::Index>(i)];
    return v;
  };
}

}  // namespace

void ConvectionSpec::validate() const {
  if (!f) throw ConfigError("convection spec has no evaluator");
  require_nonnegative(growth.a1, "a1");
  require_nonnegative(growth.a2, "a2");
  require_nonnegative(growth.alpha, "alpha");
  if (!(growth.q1 > 1.0)) throw ConfigError("growth exponent q1 must exceed 1");
  require_nonnegative(sign.b1, "b1");
  require_nonnegative(sign.b2, "b2");
  require_nonnegative(sign.omega, "omega");
  if (lipschitz) require_nonnegative(lipschitz->c1, "c1");
  if (linear_gradient) {
    require_nonnegative(linear_gradient->c2, "c2");
    if (!linear_gradient->rho) throw ConfigError("linear-gradient certificate needs rho");
    if (!(linear_gradient->r_prime > 1.0)) throw ConfigError("certificate exponent r' must exceed 1");
  }
}

ConvectionSpec zero_convection() {
  ConvectionSpec spec;
  spec.name = "zero";
  spec.f = [](const fem::Point&, double, const fem::SmallVector&) { return 0.0; };
  spec.lipschitz = LipschitzCertificate{0.0};
  spec.linear_gradient = LinearGradientCertificate{0.0, [](const fem::Point&) { return 0.0; }, 2.0};
  return spec;
}

ConvectionSpec example1(double d1, double d2, double q1, double p) {
  if (d1 < 0.0 || d2 < 0.0) throw ConfigError("example1 requires d1 >= 0 and d2 >= 0");
  if (!(q1 > 1.0)) throw ConfigError("example1 requires q1 > 1");
  if (!(p > 1.0)) throw ConfigError("example1 requires p > 1");
  ConvectionSpec spec;
  spec.name = "example1";
  spec.f = [d1, d2, q1, p](const fem::Point&, double s, const fem::SmallVector& xi) {
    const double s_term = s == 0.0 ? 0.0 : std::pow(std::abs(s), q1 - 1.0) * (s > 0.0 ? 1.0 : -1.0);
    return -d1 * s_term + d2 * std::pow(xi.norm(), p - 1.0);
  };
  // |xi|^{p-1} <= |xi|^{p(q1-1)/q1} + 1 once the growth exponent is at least p - 1.
  const double growth_exp = p * (q1 - 1.0) / q1;
  spec.growth = GrowthCertificate{d2, d1, growth_exp > p - 1.0 ? d2 : 0.0, q1};
  spec.sign = SignCertificate{d2 * (p - 1.0) / p, d2 / p, 0.0};
  spec.lipschitz = LipschitzCertificate{0.0};
  return spec;
}

ConvectionSpec example2(std::vector<double> beta, ScalarFunction rho, double rho_bound) {
  if (beta.empty() || beta.size() > 2) throw ConfigError("beta must have 1 or 2 components");
  if (!(rho_bound >= 0.0)) throw ConfigError("rho bound must be >= 0");
  const double bn = norm_of(beta);
  ConvectionSpec spec;
  spec.name = "example2";
  spec.f = linear_gradient_evaluator(beta, rho);
  spec.growth = GrowthCertificate{bn, 0.0, rho_bound, 2.0};
  spec.sign = SignCertificate{bn * bn, 0.5, rho_bound * rho_bound};
  spec.lipschitz = LipschitzCertificate{0.0};
  spec.linear_gradient = LinearGradientCertificate{bn, std::move(rho), 2.0};
  return spec;
}

ConvectionSpec linear_gradient(std::vector<double> beta, ScalarFunction rho, double rho_bound) {
  auto spec = example2(std::move(beta), std::move(rho), rho_bound);
  spec.name = "linear_gradient";
  return spec;
}

const std::vector<std::string>& expression_variables() {
  static const std::vector<std::string> vars{"x", "y", "s", "g1", "g2"};
  return vars;
}

ConvectionSpec from_expression(const expr::Expression& expression, GrowthCertificate growth, SignCertificate sign,
                               std::optional<LipschitzCertificate> lipschitz,
                               std::optional<LinearGradientCertificate> linear_gradient) {
  if (expression.variables() != expression_variables()) {
    throw ConfigError("convection expression must be compiled over x, y, s, g1, g2");
  }
  ConvectionSpec spec;
  spec.name = "expression";
  spec.f = [expression](const fem::Point& x, double s, const fem::SmallVector& xi) {
    const std::array<double, 5> vals{x[0], x.size() > 1 ? x[1] : 0.0, s, xi[0], xi.size() > 1 ? xi[1] : 0.0};
    return expression.evaluate(vals);
  };
  spec.growth = growth;
  spec.sign = sign;
  spec.lipschitz = lipschitz;
  spec.linear_gradient = std::move(linear_gradient);
  spec.validate();
  return spec;
}

double example1_d2_bound(double p, double lambda_1p) {
  if (!(lambda_1p > 0.0)) throw ConfigError("eigenvalue must be positive");
  return p / (p - 1.0 + 1.0 / lambda_1p);
}

double example2_beta_sq_bound(double lambda_12) {
  if (!(lambda_12 > 0.0)) throw ConfigError("eigenvalue must be positive");
  return std::min(1.0 - 0.5 / lambda_12, lambda_12);
}

double evaluate(const ConvectionSpec& spec, const fem::Point& x, double s, const fem::SmallVector& xi) {
  const double v = spec.f(x, s, xi);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "convection term '" << spec.name << "' is not finite at x=(" << x.transpose() << "), s=" << s
        << ", grad=(" << xi.transpose() << ")";
    throw EvaluationError(msg.str());
  }
  return v;
}

bool AuditReport::passed() const {
  return growth.ok && sign.ok && u1.ok && u2_bound.ok && u2_linearity.ok && q1_subcritical;
}

namespace {

class ConditionTracker {
 public:
  ConditionTracker(ConditionAudit& audit, double rel_tol) : audit_(audit), rel_tol_(rel_tol) {
    audit_.worst_margin = std::numeric_limits<double>::infinity();
  }

  void record(double lhs, double rhs, const Witness& where) {
    ++audit_.samples;
    const double margin = rhs - lhs;
    audit_.worst_margin = std::min(audit_.worst_margin, margin);
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    if (margin < -rel_tol_ * scale && audit_.ok) {
      audit_.ok = false;
      audit_.witness = where;
      audit_.witness->lhs = lhs;
      audit_.witness->rhs = rhs;
    }
  }

  void finish() {
    if (audit_.samples == 0) audit_.worst_margin = 0.0;
  }

 private:
  ConditionAudit& audit_;
  double rel_tol_;
};

}  // namespace

AuditReport audit_certificates(const ConvectionSpec& spec, const orlicz::PhaseExponents& exps, const fem::Mesh& mesh,
                               const AuditOptions& opts) {
  if (opts.budget < 1) throw ConfigError("audit budget must be >= 1");
  spec.validate();
  AuditReport rep;
  rep.growth.name = "growth";
  rep.sign.name = "sign";
  rep.u1.name = "U1";
  rep.u2_bound.name = "U2_bound";
  rep.u2_linearity.name = "U2_linearity";
  rep.growth.declared = rep.sign.declared = true;
  rep.u1.declared = spec.lipschitz.has_value();
  rep.u2_bound.declared = rep.u2_linearity.declared = spec.linear_gradient.has_value();

  try {
    rep.critical_exponent = orlicz::critical_exponent(exps);
    rep.q1_subcritical = spec.growth.q1 < *rep.critical_exponent;
  } catch (const DomainError&) {
    rep.q1_subcritical = true;
  }

  const double p = exps.p();
  const double q1 = spec.growth.q1;
  const double growth_exp = p * (q1 - 1.0) / q1;
  const auto rule = fem::make_quadrature(mesh.dimension(), orlicz::kDefaultQuadratureDegree);
  const int d = mesh.dimension();
  Rng rng(opts.seed);

  ConditionTracker growth(rep.growth, opts.rel_tol), sign(rep.sign, opts.rel_tol), u1(rep.u1, opts.rel_tol),
      u2b(rep.u2_bound, opts.rel_tol), u2l(rep.u2_linearity, opts.rel_tol);

  for (std::size_t n = 0; n < opts.budget; ++n) {
    Witness w;
    const auto e = static_cast<std::size_t>(rng.index(mesh.num_elements()));
    const auto qi = static_cast<std::size_t>(rng.index(rule.size()));
    w.x = mesh.map_to_physical(e, rule.points[qi]);
    w.s = rng.uniform(-opts.s_range, opts.s_range);
    w.t = rng.uniform(-opts.s_range, opts.s_range);
    w.xi = fem::SmallVector(d);
    w.zeta = fem::SmallVector(d);
    for (int k = 0; k < d; ++k) w.xi[k] = rng.uniform(-opts.xi_range, opts.xi_range);
    for (int k = 0; k < d; ++k) w.zeta[k] = rng.uniform(-opts.xi_range, opts.xi_range);
    const double c = rng.uniform(-2.0, 2.0);

    const double fs = evaluate(spec, w.x, w.s, w.xi);
    const double xin = w.xi.norm();
    const double as = std::abs(w.s);

    growth.record(std::abs(fs),
                  spec.growth.a1 * std::pow(xin, growth_exp) + spec.growth.a2 * std::pow(as, q1 - 1.0) +
                      spec.growth.alpha,
                  w);
    sign.record(fs * w.s, spec.sign.b1 * std::pow(xin, p) + spec.sign.b2 * std::pow(as, p) + spec.sign.omega, w);

    if (spec.lipschitz) {
      const double ft = evaluate(spec, w.x, w.t, w.xi);
      u1.record((fs - ft) * (w.s - w.t), spec.lipschitz->c1 * (w.s - w.t) * (w.s - w.t), w);
    }
    if (spec.linear_gradient) {
      const auto& cert = *spec.linear_gradient;
      const double rho = cert.rho(w.x);
      const double lin = fs - rho;
      u2b.record(std::abs(lin), cert.c2 * xin, w);
      const double lin_zeta = evaluate(spec, w.x, w.s, w.zeta) - rho;
      const double lin_sum = evaluate(spec, w.x, w.s, w.xi + w.zeta) - rho;
      const double lin_scaled = evaluate(spec, w.x, w.s, c * w.xi) - rho;
      const double scale = std::max({1.0, std::abs(lin), std::abs(lin_zeta), std::abs(lin_sum)});
      // Additivity and homogeneity defects, measured against the relative tolerance.
      const double defect = std::max(std::abs(lin_sum - lin - lin_zeta), std::abs(lin_scaled - c * lin)) / scale;
      u2l.record(defect, 0.0, w);
    }
  }
  growth.finish();
  sign.finish();
  u1.finish();
  u2b.finish();
  u2l.finish();
  return rep;
}

ConditionCheck check_existence_condition(const ConvectionSpec& spec, double lambda_1p) {
  if (!(lambda_1p > 0.0)) throw ConfigError("lambda_1p must be positive");
  ConditionCheck c;
  c.value = spec.sign.b1 + spec.sign.b2 / lambda_1p;
  c.ok = c.value < 1.0;
  return c;
}

ConditionCheck check_uniqueness_condition(const ConvectionSpec& spec, double lambda_12,
                                          const orlicz::PhaseExponents& exps) {
  if (!(lambda_12 > 0.0)) throw ConfigError("lambda_12 must be positive");
  if (!spec.lipschitz || !spec.linear_gradient) {
    throw ConfigError("uniqueness condition needs both the c1 (U1) and c2 (U2) certificates");
  }
  ConditionCheck c;
  c.value = spec.lipschitz->c1 / lambda_12 + spec.linear_gradient->c2 / std::sqrt(lambda_12);
  c.applicable = exps.p() == 2.0;
  c.ok = c.value < 1.0 && c.applicable;
  return c;
}

bool CertificateVerdict::passed() const {
  bool ok = growth_ok && sign_ok && existence_ok && q1_subcritical;
  if (has_uniqueness_certificates && uniqueness_case) ok = ok && u1_ok && u2_ok && uniqueness_ok;
  return ok;
}

CertificateVerdict make_verdict(const ConvectionSpec& spec, const orlicz::PhaseExponents& exps,
                                const AuditReport& audit, double lambda_1p, double lambda_12) {
  CertificateVerdict v;
  v.lambda_1p = lambda_1p;
  v.lambda_12 = lambda_12;
  v.growth_ok = audit.growth.ok;
  v.sign_ok = audit.sign.ok;
  const auto ex = check_existence_condition(spec, lambda_1p);
  v.existence_value = ex.value;
  v.existence_ok = ex.ok;
  v.existence_value_deflated = check_existence_condition(spec, kLambdaSafetyFactor * lambda_1p).value;
  v.admissible_poincare = exps.admissible_poincare();
  v.subcritical_range = exps.subcritical_range();
  v.uniqueness_case = exps.p() == 2.0;
  v.q1_subcritical = audit.q1_subcritical;
  v.has_uniqueness_certificates = spec.lipschitz.has_value() && spec.linear_gradient.has_value();
  v.u1_ok = audit.u1.declared && audit.u1.ok;
  v.u2_ok = audit.u2_bound.declared && audit.u2_bound.ok && audit.u2_linearity.ok;
  if (v.has_uniqueness_certificates) {
    const auto un = check_uniqueness_condition(spec, lambda_12, exps);
    v.uniqueness_value = un.value;
    v.uniqueness_ok = un.ok;
    v.uniqueness_value_deflated = check_uniqueness_condition(spec, kLambdaSafetyFactor * lambda_12, exps).value;
  }
  return v;
}

fem::NodalVector assemble_load(const ConvectionSpec& spec, const fem::DiscreteField& u_frozen, int degree) {
  const auto& mesh = u_frozen.mesh();
  const auto rule = fem::make_quadrature(mesh.dimension(), degree);
  const double ref = rule.reference_volume();
  fem::NodalVector load = fem::assemble_vector(mesh, [&](std::size_t e, fem::LocalVector& local) {
    const fem::SmallVector g = fem::gradient_on_element(u_frozen, e);
    const double scale = mesh.volume(e) / ref;
    for (std::size_t q = 0; q < rule.size(); ++q) {
      const fem::Point x = mesh.map_to_physical(e, rule.points[q]);
      const double fv = evaluate(spec, x, u_frozen.value_at(e, rule.points[q]), g);
      for (int k = 0; k < mesh.nodes_per_element(); ++k) {
        local[k] += rule.weights[q] * scale * fv * rule.points[q][static_cast<std::size_t>(k)];
      }
    }
  });
  fem::apply_dirichlet(mesh, load);
  return load;
}

}  // namespace dp::convection
