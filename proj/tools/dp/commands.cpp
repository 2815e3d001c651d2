#include "commands.hpp"

#include "dp/eigenvalue.hpp"
#include "dp/error.hpp"
#include "dp/expression.hpp"
#include "dp/orlicz.hpp"
#include "dp/parallel.hpp"
#include "dp/random.hpp"

#include <CLI11.hpp>
#include <Eigen/Core>

#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

#ifndef DP_VERSION
#define DP_VERSION "unknown"
#endif

namespace dp::cli {

using nlohmann::json;

namespace {

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

convection::ScalarFunction xy_function(const std::string& source) {
  auto e = expr::Expression::parse(source, {"x", "y"});
  return [e](const fem::Point& x) {
    const std::array<double, 2> vals{x[0], x.size() > 1 ? x[1] : 0.0};
    return e.evaluate(vals);
  };
}

std::string timestamp_utc() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

json mesh_json(const fem::Mesh& mesh, const RunConfig& cfg) {
  return {{"dimension", mesh.dimension()},
          {"nodes", mesh.num_nodes()},
          {"elements", mesh.num_elements()},
          {"boundary_nodes", mesh.boundary_nodes().size()},
          {"measure", mesh.measure()},
          {"h_min", mesh.min_diameter()},
          {"h_max", mesh.max_diameter()},
          {"one_dimensional_extension", mesh.dimension() == 1},
          {"declared_N", cfg.problem.N},
          {"N_differs_from_mesh_dimension", cfg.problem.N != mesh.dimension()}};
}

json exponents_json(const orlicz::PhaseExponents& exps) {
  json j{{"p", exps.p()},
         {"q", exps.q()},
         {"N", exps.N()},
         {"admissible_poincare", exps.admissible_poincare()},
         {"subcritical_range", exps.subcritical_range()},
         {"uniqueness_case", exps.uniqueness_case()}};
  try {
    j["critical_exponent"] = orlicz::critical_exponent(exps);
  } catch (const DomainError&) {
    j["critical_exponent"] = nullptr;
  }
  return j;
}

json audit_json(const convection::ConditionAudit& a) {
  json j{{"declared", a.declared}, {"ok", a.ok}, {"worst_margin", a.worst_margin}, {"samples", a.samples}};
  if (a.witness) {
    const auto& w = *a.witness;
    j["witness"] = {{"x", std::vector<double>(w.x.data(), w.x.data() + w.x.size())},
                    {"s", w.s},
                    {"t", w.t},
                    {"xi", std::vector<double>(w.xi.data(), w.xi.data() + w.xi.size())},
                    {"zeta", std::vector<double>(w.zeta.data(), w.zeta.data() + w.zeta.size())},
                    {"lhs", w.lhs},
                    {"rhs", w.rhs}};
  }
  return j;
}

json audit_report_json(const convection::AuditReport& a) {
  return {{"growth", audit_json(a.growth)},
          {"sign", audit_json(a.sign)},
          {"u1", audit_json(a.u1)},
          {"u2_bound", audit_json(a.u2_bound)},
          {"u2_linearity", audit_json(a.u2_linearity)},
          {"q1_subcritical", a.q1_subcritical},
          {"critical_exponent", optional_json(a.critical_exponent)},
          {"passed", a.passed()}};
}

json verdict_json(const convection::CertificateVerdict& v) {
  return {{"growth_ok", v.growth_ok},
          {"sign_ok", v.sign_ok},
          {"existence_value", v.existence_value},
          {"existence_margin", 1.0 - v.existence_value},
          {"existence_value_deflated", v.existence_value_deflated},
          {"existence_ok", v.existence_ok},
          {"has_uniqueness_certificates", v.has_uniqueness_certificates},
          {"u1_ok", v.u1_ok},
          {"u2_ok", v.u2_ok},
          {"uniqueness_value", v.uniqueness_value},
          {"uniqueness_margin", 1.0 - v.uniqueness_value},
          {"uniqueness_value_deflated", v.uniqueness_value_deflated},
          {"uniqueness_ok", v.uniqueness_ok},
          {"admissible_poincare", v.admissible_poincare},
          {"subcritical_range", v.subcritical_range},
          {"uniqueness_case", v.uniqueness_case},
          {"q1_subcritical", v.q1_subcritical},
          {"passed", v.passed()}};
}

json certificates_json(const convection::ConvectionSpec& spec) {
  json j{{"name", spec.name},
         {"a1", spec.growth.a1},
         {"a2", spec.growth.a2},
         {"alpha", spec.growth.alpha},
         {"q1", spec.growth.q1},
         {"b1", spec.sign.b1},
         {"b2", spec.sign.b2},
         {"omega", spec.sign.omega}};
  j["c1"] = spec.lipschitz ? json(spec.lipschitz->c1) : json(nullptr);
  j["c2"] = spec.linear_gradient ? json(spec.linear_gradient->c2) : json(nullptr);
  return j;
}

struct Eigenvalues {
  double lambda_12 = 0.0;
  double lambda_1p = 0.0;
};

Eigenvalues eigenvalues(const fem::MeshPtr& mesh, double p) {
  Eigenvalues ev;
  ev.lambda_12 = eig::first_eigenvalue(mesh, 2.0).lambda;
  ev.lambda_1p = p == 2.0 ? ev.lambda_12 : eig::first_eigenvalue(mesh, p).lambda;
  return ev;
}

convection::CertificateVerdict verdict_for(const RunConfig& cfg, const convection::ConvectionSpec& spec,
                                           const fem::Mesh& mesh, const Eigenvalues& ev, json& report) {
  const orlicz::PhaseExponents exps(cfg.problem.p, cfg.problem.q, cfg.problem.N);
  convection::AuditOptions ao;
  ao.budget = cfg.solver.audit_budget;
  ao.seed = cfg.solver.seed;
  const auto audit = convection::audit_certificates(spec, exps, mesh, ao);
  auto verdict = convection::make_verdict(spec, exps, audit, ev.lambda_1p, ev.lambda_12);
  report["audit"] = audit_report_json(audit);
  report["verdict"] = verdict_json(verdict);
  report["certificates"] = certificates_json(spec);
  return verdict;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write output file: " + path);
  out << text;
}

void write_field_file(const std::string& path, const fem::DiscreteField& field) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write output file: " + path);
  write_field(out, field);
}

fem::DiscreteField initial_guess(const RunConfig& cfg, const fem::MeshPtr& mesh) {
  fem::DiscreteField u(mesh);
  if (cfg.solver.initial == "random") {
    Rng rng(cfg.solver.seed);
    for (std::size_t i = 0; i < u.size(); ++i) u[i] = rng.uniform(-1.0, 1.0);
    fem::apply_dirichlet(u);
  }
  return u;
}

json field_norms(const fem::DiscreteField& u, const doublephase::FluxParams& params) {
  return {{"l2", orlicz::lp_norm(u, 2.0)},
          {"grad_l2", orlicz::lp_norm(u, 2.0, orlicz::Mode::Gradient)},
          {"max_abs", u.values().cwiseAbs().maxCoeff()},
          {"modular_gradient", orlicz::modular(u, params.mu, params.exps, orlicz::Mode::Gradient)},
          {"luxemburg_gradient", orlicz::luxemburg_norm(u, params.mu, params.exps, orlicz::Mode::Gradient)},
          {"energy", doublephase::energy(u, params)}};
}

json history_json(const std::vector<solver::IterationRecord>& history) {
  json rows = json::array();
  for (const auto& h : history) {
    rows.push_back({{"k", h.k},
                    {"increment_norm", h.increment_norm},
                    {"residual_norm", h.residual_norm},
                    {"energy", h.energy},
                    {"newton_steps", h.newton_steps},
                    {"poincare_ok", h.poincare_ok}});
  }
  return rows;
}

std::string history_csv(const std::vector<solver::IterationRecord>& history) {
  std::ostringstream out;
  out << std::setprecision(17) << "k,increment_norm,residual_norm,energy\n";
  for (const auto& h : history) out << h.k << ',' << h.increment_norm << ',' << h.residual_norm << ',' << h.energy << '\n';
  return out.str();
}

CommandResult cmd_solve(const RunConfig& cfg, json report) {
  const auto mesh = make_mesh(cfg);
  const auto spec = make_spec(cfg);
  const auto params = make_flux_params(cfg, mesh);
  const auto ev = eigenvalues(mesh, cfg.problem.p);
  report["mesh"] = mesh_json(*mesh, cfg);
  report["lambda"] = {{"lambda_12", ev.lambda_12}, {"lambda_1p", ev.lambda_1p}};
  const auto verdict = verdict_for(cfg, spec, *mesh, ev, report);

  auto scfg = make_solver_config(cfg);
  scfg.initial_guess = initial_guess(cfg, mesh);
  scfg.lambda_12 = ev.lambda_12;
  auto rep = solver::picard_solve(spec, params, scfg);
  rep.verdict = verdict;

  report["result"] = {{"converged", rep.converged},
                      {"outer_iterations", rep.outer_iterations},
                      {"contraction_factor", optional_json(rep.contraction_factor)},
                      {"contraction_bound", optional_json(rep.contraction_bound)},
                      {"uniqueness_certified", rep.uniqueness_certified},
                      {"contraction_within_bound",
                       rep.contraction_within_bound ? json(*rep.contraction_within_bound) : json(nullptr)},
                      {"norms", field_norms(rep.solution, params)},
                      {"history", history_json(rep.history)}};
  if (!cfg.output.history.empty()) write_text(cfg.output.history, history_csv(rep.history));
  if (!cfg.output.field.empty()) write_field_file(cfg.output.field, rep.solution);
  return {rep.converged ? kExitOk : kExitNonConvergence, std::move(report)};
}

CommandResult cmd_eig(const RunConfig& cfg, json report) {
  const auto mesh = make_mesh(cfg);
  eig::EigenOptions eo;
  eo.tolerance = cfg.eigen.tolerance;
  eo.max_iterations = cfg.eigen.max_iterations;
  eo.quadrature_degree = cfg.problem.quadrature_degree;
  const auto res = eig::first_eigenvalue(mesh, cfg.eigen.r, eo);
  const auto pc = eig::poincare_check(res.eigenfunction, res.r, res.lambda, 1e-10, eo.quadrature_degree);
  report["mesh"] = mesh_json(*mesh, cfg);
  report["result"] = {{"r", res.r},
                      {"lambda", res.lambda},
                      {"iterations", res.iterations},
                      {"final_decrement", res.final_decrement},
                      {"eigenfunction_norm", orlicz::lp_norm(res.eigenfunction, res.r)},
                      {"poincare", {{"lhs", pc.lhs}, {"rhs", pc.rhs}, {"holds", pc.holds}}}};
  if (!cfg.output.field.empty()) write_field_file(cfg.output.field, res.eigenfunction);
  return {kExitOk, std::move(report)};
}

CommandResult cmd_check(const RunConfig& cfg, json report) {
  const auto mesh = make_mesh(cfg);
  const auto spec = make_spec(cfg);
  const auto ev = eigenvalues(mesh, cfg.problem.p);
  report["mesh"] = mesh_json(*mesh, cfg);
  report["lambda"] = {{"lambda_12", ev.lambda_12},
                      {"lambda_1p", ev.lambda_1p},
                      {"lambda_12_deflated", convection::kLambdaSafetyFactor * ev.lambda_12},
                      {"lambda_1p_deflated", convection::kLambdaSafetyFactor * ev.lambda_1p}};
  report["exponents"] = exponents_json(orlicz::PhaseExponents(cfg.problem.p, cfg.problem.q, cfg.problem.N));
  const auto verdict = verdict_for(cfg, spec, *mesh, ev, report);
  json bounds = json::object();
  if (cfg.convection.type == "example1") {
    const double bound = convection::example1_d2_bound(cfg.problem.p, ev.lambda_1p);
    bounds["d2_bound"] = bound;
    bounds["d2_fraction_of_bound"] = cfg.convection.d2 / bound;
  }
  if (cfg.convection.type == "example2" || cfg.convection.type == "linear_gradient") {
    double beta_sq = 0.0;
    for (double b : cfg.convection.beta) beta_sq += b * b;
    const double bound = convection::example2_beta_sq_bound(ev.lambda_12);
    bounds["beta_sq_bound"] = bound;
    bounds["beta_sq_fraction_of_bound"] = beta_sq / bound;
  }
  report["example_bounds"] = bounds;
  report["result"] = {{"passed", verdict.passed()}};
  return {verdict.passed() ? kExitOk : kExitCertificate, std::move(report)};
}

CommandResult cmd_norms(const RunConfig& cfg, json report) {
  if (cfg.problem.field_file.empty()) throw ConfigError("norms needs problem.field_file");
  const auto mesh = make_mesh(cfg);
  std::ifstream in(cfg.problem.field_file);
  if (!in) throw ConfigError("cannot open field file: " + cfg.problem.field_file);
  const auto u = read_field(in, mesh);
  const auto mu = make_weight(cfg, mesh);
  const orlicz::PhaseExponents exps(cfg.problem.p, cfg.problem.q, cfg.problem.N);
  const int deg = cfg.problem.quadrature_degree;
  auto sandwich = [&](orlicz::Mode mode) {
    const auto s = orlicz::check_sandwich(u, mu, exps, mode, 1e-10, deg);
    return json{{"norm", s.norm}, {"lhs", s.lhs}, {"mid", s.mid}, {"rhs", s.rhs}, {"holds", s.holds}};
  };
  report["mesh"] = mesh_json(*mesh, cfg);
  report["exponents"] = exponents_json(exps);
  report["result"] = {{"modular", orlicz::modular(u, mu, exps, orlicz::Mode::Value, deg)},
                      {"luxemburg_norm", orlicz::luxemburg_norm(u, mu, exps, orlicz::Mode::Value, deg)},
                      {"lp_norm", orlicz::lp_norm(u, exps.p(), orlicz::Mode::Value, deg)},
                      {"weighted_seminorm", orlicz::weighted_seminorm(u, mu, exps.q(), orlicz::Mode::Value, deg)},
                      {"gradient_luxemburg_norm",
                       orlicz::luxemburg_norm(u, mu, exps, orlicz::Mode::Gradient, deg)},
                      {"mu_lipschitz_estimate", mu.lipschitz_estimate()},
                      {"sandwich", sandwich(orlicz::Mode::Value)},
                      {"sandwich_gradient", sandwich(orlicz::Mode::Gradient)}};
  return {kExitOk, std::move(report)};
}

CommandResult cmd_mms(const RunConfig& cfg, json report) {
  const auto mesh = make_mesh(cfg);
  const auto spec = make_spec(cfg);
  const orlicz::PhaseExponents exps(cfg.problem.p, cfg.problem.q, cfg.problem.N);
  const auto mu = make_mu_function(cfg);
  const auto u_star =
      solver::numerical_manufactured_solution(xy_function(cfg.solver.u_star), mesh->dimension(), exps, mu,
                                              cfg.problem.epsilon);
  solver::MmsProblem problem{exps, mu, cfg.problem.epsilon, cfg.problem.quadrature_degree};
  const auto table = solver::mms_study(u_star, problem, spec, mesh, cfg.solver.levels, make_solver_config(cfg));
  report["mesh"] = mesh_json(*mesh, cfg);
  json rows = json::array();
  bool all_converged = true;
  for (const auto& l : table) {
    all_converged = all_converged && l.converged;
    rows.push_back({{"level", l.level},
                    {"nodes", l.nodes},
                    {"h", l.h},
                    {"l2_error", l.l2_error},
                    {"h1_error", l.h1_error},
                    {"l2_rate", optional_json(l.l2_rate)},
                    {"h1_rate", optional_json(l.h1_rate)},
                    {"converged", l.converged},
                    {"outer_iterations", l.outer_iterations}});
  }
  report["result"] = {{"levels", rows}, {"all_converged", all_converged}};
  return {all_converged ? kExitOk : kExitNonConvergence, std::move(report)};
}

CommandResult cmd_contraction(const RunConfig& cfg, json report) {
  const auto mesh = make_mesh(cfg);
  const auto spec = make_spec(cfg);
  const auto params = make_flux_params(cfg, mesh);
  const auto ev = eigenvalues(mesh, cfg.problem.p);
  report["mesh"] = mesh_json(*mesh, cfg);
  report["lambda"] = {{"lambda_12", ev.lambda_12}, {"lambda_1p", ev.lambda_1p}};
  verdict_for(cfg, spec, *mesh, ev, report);
  auto scfg = make_solver_config(cfg);
  scfg.lambda_12 = ev.lambda_12;
  const auto stats = solver::measure_contraction(spec, params, scfg, cfg.solver.trials, cfg.solver.seed);
  json trials = json::array();
  for (const auto& r : stats.reports) {
    trials.push_back({{"converged", r.converged},
                      {"outer_iterations", r.outer_iterations},
                      {"contraction_factor", optional_json(r.contraction_factor)}});
  }
  report["result"] = {{"trials", stats.trials},
                      {"all_converged", stats.all_converged},
                      {"uniqueness_certified", stats.uniqueness_certified},
                      {"max_pairwise_distance", stats.max_pairwise_distance},
                      {"min_monotone_term", stats.min_monotone_term},
                      {"contraction_bound", optional_json(stats.contraction_bound)},
                      {"runs", trials}};
  return {stats.all_converged ? kExitOk : kExitNonConvergence, std::move(report)};
}

json error_json(const char* type, const std::string& message, int code) {
  return {{"error", {{"type", type}, {"message", message}}}, {"exit_code", code}};
}

}  // namespace

fem::MeshPtr make_mesh(const RunConfig& cfg) {
  if (!cfg.problem.mesh_file.empty()) return fem::load_mesh(cfg.problem.mesh_file);
  const auto& d = cfg.problem.domain;
  fem::Box box;
  box.dim = static_cast<int>(d.size() / 2);
  for (int k = 0; k < box.dim; ++k) {
    box.lower[static_cast<std::size_t>(k)] = d[2 * static_cast<std::size_t>(k)];
    box.upper[static_cast<std::size_t>(k)] = d[2 * static_cast<std::size_t>(k) + 1];
  }
  return fem::build_uniform_mesh(box, cfg.problem.resolution);
}

convection::ScalarFunction make_mu_function(const RunConfig& cfg) {
  if (cfg.problem.mu == "zero") return [](const fem::Point&) { return 0.0; };
  if (cfg.problem.mu == "one") return [](const fem::Point&) { return 1.0; };
  return xy_function(cfg.problem.mu);
}

orlicz::WeightField make_weight(const RunConfig& cfg, const fem::MeshPtr& mesh) {
  return orlicz::WeightField::interpolate(mesh, make_mu_function(cfg));
}

convection::ConvectionSpec make_spec(const RunConfig& cfg) {
  const auto& c = cfg.convection;
  convection::ConvectionSpec spec;
  if (c.type == "zero") {
    spec = convection::zero_convection();
  } else if (c.type == "example1") {
    spec = convection::example1(c.d1, c.d2, c.q1, cfg.problem.p);
  } else if (c.type == "example2") {
    spec = convection::example2(c.beta, xy_function(c.rho), c.rho_bound);
  } else if (c.type == "linear_gradient") {
    spec = convection::linear_gradient(c.beta, xy_function(c.rho), c.rho_bound);
  } else {
    const auto e = expr::Expression::parse(c.expression, convection::expression_variables());
    convection::GrowthCertificate growth{c.a1.value_or(0.0), c.a2.value_or(0.0), c.alpha.value_or(0.0), c.q1};
    convection::SignCertificate sign{c.b1.value_or(0.0), c.b2.value_or(0.0), c.omega.value_or(0.0)};
    std::optional<convection::LipschitzCertificate> lip;
    if (c.c1) lip = convection::LipschitzCertificate{*c.c1};
    std::optional<convection::LinearGradientCertificate> lin;
    if (c.c2) lin = convection::LinearGradientCertificate{*c.c2, xy_function(c.rho), 2.0};
    return convection::from_expression(e, growth, sign, lip, lin);
  }
  if (c.a1) spec.growth.a1 = *c.a1;
  if (c.a2) spec.growth.a2 = *c.a2;
  if (c.alpha) spec.growth.alpha = *c.alpha;
  if (c.b1) spec.sign.b1 = *c.b1;
  if (c.b2) spec.sign.b2 = *c.b2;
  if (c.omega) spec.sign.omega = *c.omega;
  if (c.c1) spec.lipschitz = convection::LipschitzCertificate{*c.c1};
  if (c.c2) {
    if (spec.linear_gradient) {
      spec.linear_gradient->c2 = *c.c2;
    } else {
      spec.linear_gradient = convection::LinearGradientCertificate{*c.c2, xy_function(c.rho), 2.0};
    }
  }
  spec.validate();
  return spec;
}

doublephase::FluxParams make_flux_params(const RunConfig& cfg, const fem::MeshPtr& mesh) {
  return doublephase::FluxParams(orlicz::PhaseExponents(cfg.problem.p, cfg.problem.q, cfg.problem.N),
                                 make_weight(cfg, mesh), cfg.problem.epsilon, cfg.problem.quadrature_degree);
}

solver::SolverConfig make_solver_config(const RunConfig& cfg) {
  const auto& s = cfg.solver;
  solver::SolverConfig out;
  out.outer_tolerance = s.outer_tolerance;
  out.outer_max_iterations = s.outer_max_iterations;
  out.inner_tolerance = s.inner_tolerance;
  out.inner_max_iterations = s.inner_max_iterations;
  out.armijo = s.armijo;
  out.backtrack = s.backtrack;
  out.epsilon_schedule = {s.epsilon_start, s.epsilon_end, s.epsilon_factor};
  return out;
}

void write_field(std::ostream& out, const fem::DiscreteField& field) {
  out << "field n=" << field.size() << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < field.size(); ++i) out << field[i] << '\n';
}

fem::DiscreteField read_field(std::istream& in, const fem::MeshPtr& mesh) {
  std::string header;
  if (!std::getline(in, header) || header.rfind("field n=", 0) != 0) {
    throw ConfigError("field file must start with 'field n=<count>'");
  }
  std::size_t n = 0;
  try {
    n = std::stoul(header.substr(8));
  } catch (const std::exception&) {
    throw ConfigError("field file header has an invalid count: " + header);
  }
  if (n != mesh->num_nodes()) {
    throw ConfigError("field file has " + std::to_string(n) + " values but the mesh has " +
                      std::to_string(mesh->num_nodes()) + " nodes");
  }
  fem::DiscreteField u(mesh);
  for (std::size_t i = 0; i < n; ++i) {
    if (!(in >> u[i])) throw ConfigError("field file ended after " + std::to_string(i) + " values");
  }
  return u;
}

CommandResult run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts) {
  set_thread_count(cfg.solver.threads);
  json report;
  report["schema"] = 1;
  report["command"] = name;
  report["version"] = {{"dp", DP_VERSION},
                       {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                     "." + std::to_string(EIGEN_MINOR_VERSION)}};
  if (opts.timestamp) report["timestamp"] = timestamp_utc();
  report["config"] = serialize(cfg);

  CommandResult result;
  if (name == "solve") {
    result = cmd_solve(cfg, std::move(report));
  } else if (name == "eig") {
    result = cmd_eig(cfg, std::move(report));
  } else if (name == "check") {
    result = cmd_check(cfg, std::move(report));
  } else if (name == "norms") {
    result = cmd_norms(cfg, std::move(report));
  } else if (name == "mms") {
    result = cmd_mms(cfg, std::move(report));
  } else if (name == "contraction") {
    result = cmd_contraction(cfg, std::move(report));
  } else {
    throw ConfigError("unknown command: " + name);
  }
  result.report["exit_code"] = result.exit_code;
  return result;
}

int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Double-phase FEM solver and verification harness"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  bool no_timestamp = false;
  for (const char* name : {"solve", "eig", "check", "norms", "mms", "contraction"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("-c,--config", config_path, "Config file");
    sub->add_option("-s,--set", overrides, "Override, section.key=value");
    sub->add_flag("--no-timestamp", no_timestamp, "Omit the timestamp from the report");
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << error_json("usage", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    RunConfig cfg;
    if (!config_path.empty()) cfg = load_config(config_path);
    for (const auto& o : overrides) apply_override(cfg, o);
    validate(cfg);
    CommandOptions opts;
    opts.timestamp = !no_timestamp;
    const auto result = run_command(command, cfg, opts);
    const std::string text = result.report.dump(2) + "\n";
    out << text;
    if (!cfg.output.report.empty()) write_text(cfg.output.report, text);
    return result.exit_code;
  } catch (const ConfigError& e) {
    err << error_json("config", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << error_json("domain", e.what(), kExitConfig).dump() << '\n';
    return kExitConfig;
  } catch (const SingularityError& e) {
    err << error_json("singularity", e.what(), kExitNonConvergence).dump() << '\n';
    return kExitNonConvergence;
  } catch (const NumericalError& e) {
    err << error_json("numerical", e.what(), kExitNonConvergence).dump() << '\n';
    return kExitNonConvergence;
  } catch (const EvaluationError& e) {
    err << error_json("evaluation", e.what(), kExitNonConvergence).dump() << '\n';
    return kExitNonConvergence;
  } catch (const std::exception& e) {
    err << error_json("internal", e.what(), kExitInternal).dump() << '\n';
    return kExitInternal;
  }
}

}  // namespace dp::cli
