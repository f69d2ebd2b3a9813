#pragma once

// JSON run configuration. Unknown keys are rejected; error messages name the
// offending key path.

#include <filesystem>
#include <string>

#include <json.hpp>

#include "mfg/coupled_solver.hpp"
#include "mfg/estimates.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct OutputConfig {
  std::filesystem::path dir = ".";
  bool dump_fields = true;
  double alpha_m = 1.5;
  double alpha_grad = 1.25;
};

struct RunConfig {
  ProblemSpec problem;
  SolveConfig solver;
  OutputConfig output;
  /// cmd_check accepts a dump when both global residuals are at most this.
  double tol_check = 1e-6;
  nlohmann::json source;

  DiagnosticsOptions diagnostics_options() const {
    DiagnosticsOptions o;
    o.alpha_m = output.alpha_m;
    o.alpha_grad = output.alpha_grad;
    return o;
  }
};

RunConfig parse_run_config(const nlohmann::json& doc);
RunConfig load_run_config(const std::filesystem::path& path);

}  // namespace mfg
