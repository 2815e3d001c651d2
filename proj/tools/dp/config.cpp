#include "config.hpp"

#include "dp/convection.hpp"
#include "dp/error.hpp"
#include "dp/expression.hpp"
#include "dp/orlicz.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

namespace dp::cli {
namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError("invalid value for '" + key + "': '" + value + "' (expected " + what + ")");
}

double to_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "a number");
  return out;
}

template <class Int>
Int to_integer(const std::string& key, const std::string& value) {
  Int out = 0;
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value, "an integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& value) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(value);
  while (in >> item) {
    if (!item.empty() && item.back() == ',') item.pop_back();
    if (!item.empty()) out.push_back(to_double(key, item));
  }
  if (out.empty()) bad_value(key, value, "a list of numbers");
  return out;
}

std::string format(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

std::string format(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? " " : "") + format(v[i]);
  return out;
}

struct Field {
  std::string section;
  std::string key;
  std::function<void(RunConfig&, const std::string&, const std::string&)> set;
  std::function<std::optional<std::string>(const RunConfig&)> get;
};

template <class S, class T>
Field make_field(std::string section, std::string key, S RunConfig::*sec, T S::*member) {
  Field f{std::move(section), std::move(key), {}, {}};
  f.set = [sec, member](RunConfig& c, const std::string& name, const std::string& v) {
    T& slot = c.*sec.*member;
    if constexpr (std::is_same_v<T, double>) {
      slot = to_double(name, v);
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      slot = to_double(name, v);
    } else if constexpr (std::is_same_v<T, std::vector<double>>) {
      slot = to_list(name, v);
    } else if constexpr (std::is_same_v<T, std::string>) {
      slot = v;
    } else {
      slot = to_integer<T>(name, v);
    }
  };
  f.get = [sec, member](const RunConfig& c) -> std::optional<std::string> {
    const T& slot = c.*sec.*member;
    if constexpr (std::is_same_v<T, double> || std::is_same_v<T, std::vector<double>>) {
      return format(slot);
    } else if constexpr (std::is_same_v<T, std::optional<double>>) {
      if (!slot) return std::nullopt;
      return format(*slot);
    } else if constexpr (std::is_same_v<T, std::string>) {
      return slot;
    } else {
      return std::to_string(slot);
    }
  };
  return f;
}

const std::vector<Field>& fields() {
  using R = RunConfig;
  static const std::vector<Field> table = [] {
    std::vector<Field> t;
    auto P = [&](const char* k, auto m) { t.push_back(make_field("problem", k, &R::problem, m)); };
    P("domain", &ProblemSection::domain);
    P("resolution", &ProblemSection::resolution);
    P("mesh_file", &ProblemSection::mesh_file);
    P("p", &ProblemSection::p);
    P("q", &ProblemSection::q);
    P("N", &ProblemSection::N);
    P("mu", &ProblemSection::mu);
    P("epsilon", &ProblemSection::epsilon);
    P("quadrature_degree", &ProblemSection::quadrature_degree);
    P("field_file", &ProblemSection::field_file);
    auto C = [&](const char* k, auto m) { t.push_back(make_field("convection", k, &R::convection, m)); };
    C("type", &ConvectionSection::type);
    C("d1", &ConvectionSection::d1);
    C("d2", &ConvectionSection::d2);
    C("q1", &ConvectionSection::q1);
    C("beta", &ConvectionSection::beta);
    C("rho", &ConvectionSection::rho);
    C("rho_bound", &ConvectionSection::rho_bound);
    C("expression", &ConvectionSection::expression);
    C("a1", &ConvectionSection::a1);
    C("a2", &ConvectionSection::a2);
    C("alpha", &ConvectionSection::alpha);
    C("b1", &ConvectionSection::b1);
    C("b2", &ConvectionSection::b2);
    C("omega", &ConvectionSection::omega);
    C("c1", &ConvectionSection::c1);
    C("c2", &ConvectionSection::c2);
    auto S = [&](const char* k, auto m) { t.push_back(make_field("solver", k, &R::solver, m)); };
    S("outer_tolerance", &SolverSection::outer_tolerance);
    S("outer_max_iterations", &SolverSection::outer_max_iterations);
    S("inner_tolerance", &SolverSection::inner_tolerance);
    S("inner_max_iterations", &SolverSection::inner_max_iterations);
    S("armijo", &SolverSection::armijo);
    S("backtrack", &SolverSection::backtrack);
    S("epsilon_start", &SolverSection::epsilon_start);
    S("epsilon_end", &SolverSection::epsilon_end);
    S("epsilon_factor", &SolverSection::epsilon_factor);
    S("initial", &SolverSection::initial);
    S("seed", &SolverSection::seed);
    S("threads", &SolverSection::threads);
    S("trials", &SolverSection::trials);
    S("levels", &SolverSection::levels);
    S("u_star", &SolverSection::u_star);
    S("audit_budget", &SolverSection::audit_budget);
    auto E = [&](const char* k, auto m) { t.push_back(make_field("eigen", k, &R::eigen, m)); };
    E("r", &EigenSection::r);
    E("tolerance", &EigenSection::tolerance);
    E("max_iterations", &EigenSection::max_iterations);
    auto O = [&](const char* k, auto m) { t.push_back(make_field("output", k, &R::output, m)); };
    O("report", &OutputSection::report);
    O("history", &OutputSection::history);
    O("field", &OutputSection::field);
    return t;
  }();
  return table;
}

std::size_t edit_distance(const std::string& a, const std::string& b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0 : 1)});
      diag = up;
    }
  }
  return row[b.size()];
}

bool known_section(const std::string& s) {
  return s == "problem" || s == "convection" || s == "solver" || s == "eigen" || s == "output";
}

const Field& find_field(const std::string& section, const std::string& key) {
  if (!known_section(section)) throw ConfigError("unknown section [" + section + "]");
  for (const auto& f : fields()) {
    if (f.section == section && f.key == key) return f;
  }
  std::string msg = "unknown key '" + key + "' in [" + section + "]";
  if (auto s = suggest_key(section, key)) msg += "; did you mean '" + *s + "'?";
  throw ConfigError(msg);
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ConfigError("invalid value for '" + key + "': " + what);
}

void check_expression(const std::string& key, const std::string& src, const std::vector<std::string>& vars) {
  try {
    (void)expr::Expression::parse(src, vars);
  } catch (const ConfigError& e) {
    throw ConfigError("invalid expression for '" + key + "': " + e.what());
  }
}

void require_file(const std::string& key, const std::string& path) {
  if (!path.empty() && !std::filesystem::is_regular_file(path)) {
    throw ConfigError("file for '" + key + "' does not exist: " + path);
  }
}

}  // namespace

std::optional<std::string> suggest_key(const std::string& section, const std::string& key) {
  std::optional<std::string> best;
  std::size_t best_d = 3;
  for (const auto& f : fields()) {
    if (f.section != section) continue;
    const std::size_t d = edit_distance(key, f.key);
    if (d < best_d) {
      best_d = d;
      best = f.key;
    }
  }
  return best;
}

void validate(const RunConfig& c) {
  const auto& pr = c.problem;
  require(pr.domain.size() == 2 || pr.domain.size() == 4, "problem.domain", "needs 2 (1D) or 4 (2D) numbers");
  for (std::size_t i = 0; i + 1 < pr.domain.size(); i += 2) {
    require(pr.domain[i] < pr.domain[i + 1], "problem.domain", "lower bound must be below upper bound");
  }
  require(pr.resolution >= 1, "problem.resolution", "must be >= 1");
  require_file("problem.mesh_file", pr.mesh_file);
  require_file("problem.field_file", pr.field_file);
  (void)orlicz::PhaseExponents(pr.p, pr.q, pr.N);
  if (pr.mu != "zero" && pr.mu != "one") check_expression("problem.mu", pr.mu, {"x", "y"});
  require(pr.epsilon >= 0.0, "problem.epsilon", "must be >= 0");
  require(pr.epsilon > 0.0 || (pr.p >= 2.0 && pr.q >= 2.0), "problem.epsilon",
          "epsilon = 0 needs p >= 2 and q >= 2");
  require(pr.quadrature_degree >= 1 && pr.quadrature_degree <= 5, "problem.quadrature_degree", "must be in [1, 5]");

  const auto& cv = c.convection;
  static const std::vector<std::string> types{"zero", "example1", "example2", "linear_gradient", "expression"};
  require(std::find(types.begin(), types.end(), cv.type) != types.end(), "convection.type",
          "must be one of zero, example1, example2, linear_gradient, expression");
  require(cv.d1 >= 0.0 && cv.d2 >= 0.0, "convection.d1/d2", "must be >= 0");
  require(cv.q1 > 1.0, "convection.q1", "must be > 1");
  require(!cv.beta.empty() && cv.beta.size() <= 2, "convection.beta", "needs 1 or 2 components");
  require(cv.rho_bound >= 0.0, "convection.rho_bound", "must be >= 0");
  check_expression("convection.rho", cv.rho, {"x", "y"});
  if (cv.type == "expression") {
    require(!cv.expression.empty(), "convection.expression", "required when type = expression");
    check_expression("convection.expression", cv.expression, convection::expression_variables());
  }
  for (const auto& [name, v] : {std::pair{"a1", cv.a1}, {"a2", cv.a2}, {"alpha", cv.alpha}, {"b1", cv.b1},
                                {"b2", cv.b2}, {"omega", cv.omega}, {"c1", cv.c1}, {"c2", cv.c2}}) {
    require(!v || *v >= 0.0, std::string("convection.") + name, "certificate constants must be >= 0");
  }

  const auto& s = c.solver;
  require(s.outer_tolerance > 0.0, "solver.outer_tolerance", "must be > 0");
  require(s.inner_tolerance > 0.0, "solver.inner_tolerance", "must be > 0");
  require(s.outer_max_iterations >= 1, "solver.outer_max_iterations", "must be >= 1");
  require(s.inner_max_iterations >= 1, "solver.inner_max_iterations", "must be >= 1");
  require(s.armijo > 0.0 && s.armijo < 1.0, "solver.armijo", "must lie in (0, 1)");
  require(s.backtrack > 0.0 && s.backtrack < 1.0, "solver.backtrack", "must lie in (0, 1)");
  require(s.epsilon_start > 0.0 && s.epsilon_end > 0.0, "solver.epsilon_start/end", "must be > 0");
  require(s.epsilon_factor > 1.0, "solver.epsilon_factor", "must be > 1");
  require(s.initial == "zero" || s.initial == "random", "solver.initial", "must be zero or random");
  require(s.threads >= 1, "solver.threads", "must be >= 1");
  require(s.trials >= 1, "solver.trials", "must be >= 1");
  require(s.levels >= 1, "solver.levels", "must be >= 1");
  require(s.audit_budget >= 1, "solver.audit_budget", "must be >= 1");
  check_expression("solver.u_star", s.u_star, {"x", "y"});

  require(c.eigen.r > 1.0, "eigen.r", "must be > 1");
  require(c.eigen.tolerance > 0.0, "eigen.tolerance", "must be > 0");
  require(c.eigen.max_iterations >= 1, "eigen.max_iterations", "must be >= 1");
}

RunConfig parse_config(std::istream& in) {
  RunConfig cfg;
  std::string section;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line.erase(comment);
    const std::string text = trim(line);
    if (text.empty()) continue;
    if (text.front() == '[') {
      if (text.back() != ']') throw ConfigError("line " + std::to_string(lineno) + ": malformed section header");
      section = trim(std::string_view(text).substr(1, text.size() - 2));
      if (!known_section(section)) throw ConfigError("unknown section [" + section + "]");
      continue;
    }
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    if (section.empty()) throw ConfigError("line " + std::to_string(lineno) + ": key outside of a section");
    const std::string key = trim(std::string_view(text).substr(0, eq));
    const std::string value = trim(std::string_view(text).substr(eq + 1));
    find_field(section, key).set(cfg, section + "." + key, value);
  }
  validate(cfg);
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse_config(in);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  const auto dot = assignment.find('.');
  if (eq == std::string::npos || dot == std::string::npos || dot > eq) {
    throw ConfigError("override must look like section.key=value: " + assignment);
  }
  const std::string section = trim(std::string_view(assignment).substr(0, dot));
  const std::string key = trim(std::string_view(assignment).substr(dot + 1, eq - dot - 1));
  const std::string value = trim(std::string_view(assignment).substr(eq + 1));
  find_field(section, key).set(cfg, section + "." + key, value);
  validate(cfg);
}

std::string serialize(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    if (f.section != section) {
      if (!section.empty()) out << '\n';
      section = f.section;
      out << '[' << section << "]\n";
    }
    if (auto v = f.get(cfg)) out << f.key << " = " << *v << '\n';
  }
  return out.str();
}

}  // namespace dp::cli
