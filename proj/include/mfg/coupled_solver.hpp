#pragma once

// Forward-backward coupling of the discrete Bellman and Fokker-Planck
// equations by damped fixed-point iteration on the density trajectory, plus
// a brute-force monolithic Newton solver for small instances.

#include <optional>
#include <vector>

#include "mfg/bellman.hpp"
#include "mfg/fokker_planck.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct SolveConfig {
  int n_h = 16;
  int n_t = 16;
  double damping = 0.5;           ///< theta in (0, 1]
  double tol_fixed_point = 1e-8;  ///< sup over slices of the L^1 change of m
  int max_outer = 200;
  NewtonOptions newton;
  LinearOptions linear;

  void validate() const;
};

struct IterationRecord {
  int iteration = 0;
  double delta = 0;
  int newton_iterations = 0;
  int linear_iterations = 0;
  double max_step_residual = 0;
};

struct Solution {
  Trajectory u;
  Trajectory m;
  int outer_iterations = 0;
  bool converged = false;
  double final_delta = 0;
  std::vector<IterationRecord> history;
};

/// Sup over slices of the discrete L^1 distance.
double sup_l1_distance(const Trajectory& a, const Trajectory& b);

/// Runs the fixed-point loop. `initial_m` replaces the default start (every
/// slice equal to the cell-averaged terminal density). On MaxOuterExceeded
/// the best iterate is returned with converged = false.
Solution solve(const DiscreteProblem& problem, const SolveConfig& config, const Trajectory* initial_m = nullptr);

Solution solve(const ProblemSpec& spec, const SolveConfig& config);

struct GlobalResidual {
  double bellman_linf = 0;
  double fp_linf = 0;
};

/// Max over nodes and time steps of both residuals of the fully discrete system.
GlobalResidual global_residual(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem);

struct OracleOptions {
  double tol = 1e-10;
  double fd_step = 1e-7;
  int max_iterations = 60;
  static constexpr int kMaxUnknowns = 512;
  static constexpr int kMaxGrid = 6;
  static constexpr int kMaxSteps = 4;
};

/// Dense Newton on all unknowns {u^1..u^{N_T}, m^0..m^{N_T-1}} at once with a
/// finite-difference Jacobian. Shares only the Hamiltonian evaluation with the
/// modular solver.
Solution oracle_solve(const DiscreteProblem& problem, const OracleOptions& opts = {});

/// Throws InvalidArgument when the instance is too large for the oracle.
void check_oracle_size(int n_h, int n_t);

}  // namespace mfg
