#include "mfg/bellman.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/SparseLU>

#include <cmath>
#include <string>

namespace mfg {

GridFunction bellman_residual(const GridFunction& u_next, const GridFunction& u_curr, const GridFunction& m_curr,
                              const DiscreteProblem& problem, double dt) {
  u_next.check_same(u_curr);
  u_next.check_same(m_curr);
  if (!(dt > 0)) throw InvalidArgument("dt must be positive");
  const auto lap = laplace_h(u_next);
  const auto g = problem.hamiltonian().values(nabla_h(u_next));
  GridFunction out(u_next.size());
  auto r = out.flat();
  const auto un = u_next.flat();
  const auto uc = u_curr.flat();
  const auto mc = m_curr.flat();
  const auto l = lap.flat();
  const double nu = problem.nu();
  for (Eigen::Index k = 0; k < r.size(); ++k) r[k] = (un[k] - uc[k]) / dt - nu * l[k] + g[k] - problem.coupling()(mc[k]);
  return out;
}

SparseRowMatrix bellman_jacobian(const GridFunction& u_next, const DiscreteProblem& problem, double dt) {
  const int n = u_next.size();
  const double inv_h = n;
  const double diff = problem.nu() * inv_h * inv_h;
  const auto grads = problem.hamiltonian().gradients(nabla_h(u_next));
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(5) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Index r = Eigen::Index(i) * n + j;
      const auto gq = grads.row(r);
      // q1 = (u_{i+1,j} - u_{i,j})/h, q2 = (u_{i,j} - u_{i-1,j})/h, likewise q3, q4 in j.
      t.emplace_back(r, r, 1.0 / dt + 4 * diff + (-gq[0] + gq[1] - gq[2] + gq[3]) * inv_h);
      t.emplace_back(r, u_next.flat_index(i + 1, j), -diff + gq[0] * inv_h);
      t.emplace_back(r, u_next.flat_index(i - 1, j), -diff - gq[1] * inv_h);
      t.emplace_back(r, u_next.flat_index(i, j + 1), -diff + gq[2] * inv_h);
      t.emplace_back(r, u_next.flat_index(i, j - 1), -diff - gq[3] * inv_h);
    }
  SparseRowMatrix jac(Eigen::Index(n) * n, Eigen::Index(n) * n);
  jac.setFromTriplets(t.begin(), t.end());
  return jac;
}

int solve_nonsymmetric(const SparseRowMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x, double tol,
                       double* relative_residual) {
  const double bnorm = b.norm();
  if (bnorm == 0.0) {
    x.setZero(b.size());
    if (relative_residual) *relative_residual = 0;
    return 0;
  }
  Eigen::BiCGSTAB<SparseRowMatrix, Eigen::DiagonalPreconditioner<double>> krylov;
  krylov.setTolerance(tol);
  krylov.setMaxIterations(std::max<Eigen::Index>(200, 4 * a.rows()));
  krylov.compute(a);
  x = krylov.solve(b);
  double rel = (b - a * x).norm() / bnorm;
  int iterations = static_cast<int>(krylov.iterations());
  if (krylov.info() != Eigen::Success || !(rel <= 10 * tol)) {
    Eigen::SparseMatrix<double> col = a;
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(col);
    if (lu.info() != Eigen::Success) throw LinearSolveFailure("sparse LU factorization failed", rel);
    x = lu.solve(b);
    rel = (b - a * x).norm() / bnorm;
    iterations = 0;
    if (!std::isfinite(rel) || rel > 1e-8) throw LinearSolveFailure("linear solve did not converge", rel);
  }
  if (relative_residual) *relative_residual = rel;
  return iterations;
}

std::pair<GridFunction, BellmanStepReport> bellman_step(const GridFunction& u_curr, const GridFunction& m_curr,
                                                        const DiscreteProblem& problem, double dt,
                                                        const NewtonOptions& opts) {
  BellmanStepReport report;
  GridFunction u = u_curr;
  GridFunction res = bellman_residual(u, u_curr, m_curr, problem, dt);
  double norm = res.flat().lpNorm<Eigen::Infinity>();
  Eigen::VectorXd delta;
  while (norm > opts.tol) {
    if (report.newton_iterations >= opts.max_iterations)
      throw NewtonDivergence("Bellman Newton exceeded " + std::to_string(opts.max_iterations) + " iterations", norm);
    ++report.newton_iterations;
    const SparseRowMatrix jac = bellman_jacobian(u, problem, dt);
    const Eigen::VectorXd rhs = -res.flat();
    report.linear_iterations += solve_nonsymmetric(jac, rhs, delta, opts.linear_tol);

    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving) {
      GridFunction trial = u;
      trial.flat() += step * delta;
      GridFunction trial_res = bellman_residual(trial, u_curr, m_curr, problem, dt);
      const double trial_norm = trial_res.flat().lpNorm<Eigen::Infinity>();
      if (trial_norm < norm || trial_norm <= opts.tol) {
        u = std::move(trial);
        res = std::move(trial_res);
        norm = trial_norm;
        accepted = true;
        break;
      }
      step *= 0.5;
      ++report.line_search_halvings;
    }
    if (!accepted) throw NewtonDivergence("Bellman line search exhausted", norm);
  }
  report.final_residual_linf = norm;
  return {std::move(u), report};
}

Trajectory solve_forward(const GridFunction& u0, const Trajectory& m, const DiscreteProblem& problem,
                         const NewtonOptions& opts, std::vector<BellmanStepReport>* reports) {
  u0.check_same(m[0]);
  Trajectory u(m.steps(), m.dt(), u0);
  if (reports) reports->clear();
  for (int n = 0; n < m.steps(); ++n) {
    try {
      auto [next, report] = bellman_step(u[n], m[n], problem, m.dt(), opts);
      u[n + 1] = std::move(next);
      if (reports) reports->push_back(report);
    } catch (const NewtonDivergence& e) {
      throw NewtonDivergence(std::string(e.what()) + " at time index " + std::to_string(n + 1), e.last_residual(), n + 1);
    } catch (const LinearSolveFailure& e) {
      throw LinearSolveFailure(std::string(e.what()) + " at time index " + std::to_string(n + 1), e.residual(), n + 1);
    }
  }
  return u;
}

}  // namespace mfg
