#pragma once

// Grid-refinement study: solve the same problem on a ladder of grids and
// compare consecutive levels in L^1(Q) through their piecewise-constant
// reconstructions (u^{n+1} and m^n on (t_n, t_{n+1}) x cell(i, j)).

#include <optional>
#include <string>
#include <vector>

#include "mfg/config.hpp"
#include "mfg/coupled_solver.hpp"
#include "mfg/estimates.hpp"

namespace mfg {

struct RefineLevel {
  int n_h = 0;
  int n_t = 0;
};

/// Parses "8x8,16x16,32x32" (n_h x n_t per level).
std::vector<RefineLevel> parse_levels(const std::string& spec);

/// Rejects fewer than two levels and grids where n_h does not divide the next.
void validate_levels(const std::vector<RefineLevel>& levels);

enum class ReconstructionSlices {
  Bellman,      ///< takes slice n + 1 on (t_n, t_{n+1})
  FokkerPlanck  ///< takes slice n on (t_n, t_{n+1})
};

/// Exact L^1(Q) distance between the piecewise-constant reconstructions of two
/// trajectories on arbitrary grids over the same horizon.
double reconstruction_l1_distance(const Trajectory& a, const Trajectory& b, ReconstructionSlices which);

struct RefineRow {
  RefineLevel level;
  bool solved = false;
  bool converged = false;
  std::string error;
  int outer_iterations = 0;
  double final_delta = 0;
  std::optional<double> u_cauchy;  ///< distance to the previous level
  std::optional<double> m_cauchy;
  std::optional<double> u_ratio;   ///< u_cauchy / previous u_cauchy
  std::optional<double> m_ratio;
  DiagnosticsReport diagnostics;
};

struct RefineTable {
  std::vector<RefineRow> rows;
  bool all_converged() const;
};

/// Solves every level (up to `max_threads` concurrently) and fills the table.
/// Solver failures are recorded per level.
RefineTable run_refinement(const RunConfig& config, const std::vector<RefineLevel>& levels, unsigned max_threads = 1);

/// Thread cap from MFG_THREADS, defaulting to the hardware concurrency.
unsigned thread_cap_from_env();

}  // namespace mfg
