#pragma once

// Discrete transport operator and the backward implicit Fokker-Planck step
//   (m^{n+1} - m^n)/dt + nu Delta_h m^n + T(u^{n+1}, m^n) = 0.
//
// T(u, .) is built so that h^2 sum T(u, m) w = -h^2 sum m grad_q g . [grad_h w],
// which makes m -> -nu Delta_h m - T(u, m) the adjoint of the linearized
// Bellman operator.

#include <utility>
#include <vector>

#include "mfg/bellman.hpp"
#include "mfg/grid.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct LinearOptions {
  double tol = 1e-12;   ///< relative residual
  int max_iterations = 0;  ///< 0 selects a size-dependent cap
  /// Grids up to this size are solved by dense LU.
  int dense_max_n = 8;
};

struct FPStepReport {
  int linear_iterations = 0;
  double residual = 0;
  double min_value = 0;
  double mass = 0;
};

GridFunction transport(const GridFunction& u, const GridFunction& m, const NumericalHamiltonian& hamiltonian);

/// Matrix of the linear map m -> T(u, m).
SparseRowMatrix transport_matrix(const GridFunction& u, const NumericalHamiltonian& hamiltonian);

/// I - dt nu Delta_h - dt T(u_next, .). Throws if the M-matrix sign pattern fails.
SparseRowMatrix fp_matrix(const GridFunction& u_next, const DiscreteProblem& problem, double dt);

/// Relative defect of the adjoint identity
///   <-nu Delta_h m - T(u, m), w> = <m, -nu Delta_h w + grad_q g(x, [grad_h u]) . [grad_h w]>.
double adjoint_check(const GridFunction& u, const GridFunction& m, const GridFunction& w, const DiscreteProblem& problem);

/// Solves for m^n given m^{n+1} and u^{n+1}.
std::pair<GridFunction, FPStepReport> fp_step(const GridFunction& m_next, const GridFunction& u_next,
                                              const DiscreteProblem& problem, double dt, const LinearOptions& opts = {});

/// m^{N_T} = m_T and fp_step down to n = 0. Errors carry the failing time index.
Trajectory solve_backward(const GridFunction& m_T, const Trajectory& u, const DiscreteProblem& problem,
                          const LinearOptions& opts = {}, std::vector<FPStepReport>* reports = nullptr);

/// Per-cell averages of a density by tensor 4-point Gauss quadrature,
/// rescaled to unit discrete mass.
GridFunction cell_average_density(int n, const FieldSampler& density);

}  // namespace mfg
