#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dp::cli {

struct ProblemSection {
  std::vector<double> domain{0.0, 1.0};  // lower/upper per axis: "0 1" or "0 1 0 1"
  int resolution = 32;
  std::string mesh_file;  // overrides domain/resolution when set
  double p = 2.0;
  double q = 3.0;
  int N = 3;
  std::string mu = "one";  // zero | one | expression in x, y
  double epsilon = 1e-10;
  int quadrature_degree = 4;
  std::string field_file;  // input field for `norms`

  bool operator==(const ProblemSection&) const = default;
};

struct ConvectionSection {
  std::string type = "zero";  // zero | example1 | example2 | linear_gradient | expression
  double d1 = 0.0;
  double d2 = 0.0;
  double q1 = 2.0;
  std::vector<double> beta{0.0};
  std::string rho = "0";
  double rho_bound = 0.0;
  std::string expression;
  // Certificate overrides; unset keeps the built-in values.
  std::optional<double> a1, a2, alpha, b1, b2, omega, c1, c2;

  bool operator==(const ConvectionSection&) const = default;
};

struct SolverSection {
  double outer_tolerance = 1e-8;
  int outer_max_iterations = 100;
  double inner_tolerance = 1e-11;
  int inner_max_iterations = 50;
  double armijo = 1e-4;
  double backtrack = 0.5;
  double epsilon_start = 1e-2;
  double epsilon_end = 1e-10;
  double epsilon_factor = 10.0;
  std::string initial = "zero";  // zero | random
  std::uint64_t seed = 1;
  int threads = 1;
  int trials = 5;
  int levels = 4;
  std::string u_star = "sin(pi*x)";
  std::size_t audit_budget = 100000;

  bool operator==(const SolverSection&) const = default;
};

struct EigenSection {
  double r = 2.0;
  double tolerance = 1e-12;
  int max_iterations = 10000;

  bool operator==(const EigenSection&) const = default;
};

struct OutputSection {
  std::string report;   // JSON report path; stdout only when empty
  std::string history;  // CSV iteration table
  std::string field;    // nodal field file

  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  ProblemSection problem;
  ConvectionSection convection;
  SolverSection solver;
  EigenSection eigen;
  OutputSection output;

  bool operator==(const RunConfig&) const = default;
};

// Sectioned `key = value` text. `#` and `;` start comments. Unknown sections
// or keys, malformed values and out-of-range settings throw ConfigError
// naming the key. Referenced input files must exist.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// Applies one `section.key=value` override and revalidates.
void apply_override(RunConfig& cfg, const std::string& assignment);

void validate(const RunConfig& cfg);

// Canonical text form; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& cfg);

// Closest known key within edit distance 2, if any.
std::optional<std::string> suggest_key(const std::string& section, const std::string& key);

}  // namespace dp::cli
