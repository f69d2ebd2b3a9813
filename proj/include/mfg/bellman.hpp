#pragma once

// Semi-implicit Euler sweep for the discrete Bellman equation
//   (u^{n+1} - u^n)/dt - nu Delta_h u^{n+1} + g(x, [grad_h u^{n+1}]) = F(m^n),
// one Newton solve per time step.

#include <Eigen/SparseCore>

#include <utility>
#include <vector>

#include "mfg/grid.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct NewtonOptions {
  double tol = 1e-10;      ///< l-infinity bound on the step residual
  int max_iterations = 50;
  int max_halvings = 30;
  double linear_tol = 1e-12;
};

struct BellmanStepReport {
  int newton_iterations = 0;
  double final_residual_linf = 0;
  int line_search_halvings = 0;
  int linear_iterations = 0;
};

using SparseRowMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

GridFunction bellman_residual(const GridFunction& u_next, const GridFunction& u_curr, const GridFunction& m_curr,
                              const DiscreteProblem& problem, double dt);

/// Jacobian of bellman_residual with respect to u_next.
SparseRowMatrix bellman_jacobian(const GridFunction& u_next, const DiscreteProblem& problem, double dt);

std::pair<GridFunction, BellmanStepReport> bellman_step(const GridFunction& u_curr, const GridFunction& m_curr,
                                                        const DiscreteProblem& problem, double dt,
                                                        const NewtonOptions& opts = {});

/// u^0 = u0, then one Bellman step per slice of m (slice N_T is not used).
/// NewtonDivergence carries the failing time index.
Trajectory solve_forward(const GridFunction& u0, const Trajectory& m, const DiscreteProblem& problem,
                         const NewtonOptions& opts = {}, std::vector<BellmanStepReport>* reports = nullptr);

/// Solves A x = b with BiCGSTAB and a diagonal preconditioner; falls back to a
/// sparse LU factorization when the Krylov solve stalls. Returns the
/// iteration count (0 for the direct path).
int solve_nonsymmetric(const SparseRowMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                       double* relative_residual = nullptr);

}  // namespace mfg
