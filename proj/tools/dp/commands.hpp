#pragma once

#include "config.hpp"

#include "dp/convection.hpp"
#include "dp/doublephase.hpp"
#include "dp/fem.hpp"
#include "dp/solver.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>

namespace dp::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 1,
  kExitCertificate = 2,
  kExitNonConvergence = 3,
  kExitInternal = 4,
};

struct CommandOptions {
  bool timestamp = true;
};

struct CommandResult {
  int exit_code = kExitOk;
  nlohmann::json report;
};

// Builders shared by the subcommands.
fem::MeshPtr make_mesh(const RunConfig& cfg);
convection::ScalarFunction make_mu_function(const RunConfig& cfg);
orlicz::WeightField make_weight(const RunConfig& cfg, const fem::MeshPtr& mesh);
convection::ConvectionSpec make_spec(const RunConfig& cfg);
doublephase::FluxParams make_flux_params(const RunConfig& cfg, const fem::MeshPtr& mesh);
solver::SolverConfig make_solver_config(const RunConfig& cfg);

// Field files: header `field n=<count>` then one value per line.
void write_field(std::ostream& out, const fem::DiscreteField& field);
fem::DiscreteField read_field(std::istream& in, const fem::MeshPtr& mesh);

// Runs one of solve, eig, check, norms, mms, contraction. Library errors
// propagate; run_cli maps them to exit codes.
CommandResult run_command(const std::string& name, const RunConfig& cfg, const CommandOptions& opts);

// Full command-line entry point. Reports go to `out` (and output.report when
// set); errors are JSON objects on `err`.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace dp::cli
