#pragma once

// Command implementations behind the `mfg` executable. Each returns the
// process exit code: 0 success, 2 completed with a failed criterion
// (non-converged solve, residual check above tolerance, oracle mismatch),
// 1 on errors.

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mfg/coupled_solver.hpp"
#include "mfg/estimates.hpp"
#include "mfg/refinement.hpp"

namespace mfg {

struct CommandContext {
  /// Overrides output.dir from the config when set.
  std::optional<std::filesystem::path> output_dir;
  std::ostream* out = nullptr;
  std::ostream* err = nullptr;
  unsigned max_threads = 1;
};

int cmd_solve(const std::filesystem::path& config_path, const CommandContext& ctx);
int cmd_refine(const std::filesystem::path& config_path, const std::string& levels, const CommandContext& ctx);
int cmd_check(const std::filesystem::path& dump_path, const std::filesystem::path& config_path, const CommandContext& ctx);
int cmd_oracle(const std::filesystem::path& config_path, const CommandContext& ctx);

// Artifact writers, shared with tests.
nlohmann::json diagnostics_json(const DiagnosticsReport& r);
void write_diagnostics_csv(const std::filesystem::path& path, const DiagnosticsReport& r);
void write_history_csv(const std::filesystem::path& path, const std::vector<IterationRecord>& history);
void write_refine_csv(const std::filesystem::path& path, const RefineTable& table);

/// Column names of the diagnostics CSV, in order.
const std::vector<std::string>& diagnostics_columns();

}  // namespace mfg
