#include "mfg/coupled_solver.hpp"

#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace mfg {

void SolveConfig::validate() const {
  if (n_h < 4) throw InvalidArgument("n_h must be at least 4");
  if (n_t < 1) throw InvalidArgument("n_t must be positive");
  if (!(damping > 0 && damping <= 1)) throw InvalidArgument("damping must lie in (0, 1]");
  if (!(tol_fixed_point > 0)) throw InvalidArgument("tol_fixed_point must be positive");
  if (max_outer < 1) throw InvalidArgument("max_outer must be positive");
}

double sup_l1_distance(const Trajectory& a, const Trajectory& b) {
  if (a.steps() != b.steps()) throw InvalidArgument("trajectory length mismatch");
  double worst = 0;
  for (int n = 0; n <= a.steps(); ++n) worst = std::max(worst, lp_norm(a[n] - b[n], 1.0));
  return worst;
}

Solution solve(const DiscreteProblem& problem, const SolveConfig& config, const Trajectory* initial_m) {
  config.validate();
  if (config.n_h != problem.grid_size() || config.n_t != problem.steps())
    throw InvalidArgument("solve config does not match the discretized problem");
  const double dt = problem.dt();
  Trajectory m = initial_m ? *initial_m : Trajectory(problem.steps(), dt, problem.m_T());
  if (m.steps() != problem.steps() || m.grid_size() != problem.grid_size())
    throw InvalidArgument("initial density trajectory has the wrong shape");

  Solution sol;
  std::optional<Trajectory> best_m;
  double best_delta = std::numeric_limits<double>::infinity();
  std::vector<BellmanStepReport> bellman_reports;
  std::vector<FPStepReport> fp_reports;

  for (int k = 1; k <= config.max_outer; ++k) {
    const Trajectory u = solve_forward(problem.u0(), m, problem, config.newton, &bellman_reports);
    const Trajectory m_new = solve_backward(problem.m_T(), u, problem, config.linear, &fp_reports);
    const double delta = sup_l1_distance(m_new, m);

    IterationRecord rec;
    rec.iteration = k;
    rec.delta = delta;
    for (const auto& r : bellman_reports) {
      rec.newton_iterations += r.newton_iterations;
      rec.max_step_residual = std::max(rec.max_step_residual, r.final_residual_linf);
    }
    for (const auto& r : fp_reports) rec.linear_iterations += r.linear_iterations;
    sol.history.push_back(rec);
    sol.outer_iterations = k;

    for (int n = 0; n <= m.steps(); ++n) m[n] = (1.0 - config.damping) * m[n] + config.damping * m_new[n];
    if (delta < best_delta) {
      best_delta = delta;
      best_m = m;
    }
    if (delta < config.tol_fixed_point) {
      sol.converged = true;
      break;
    }
  }
  sol.final_delta = best_delta;
  // Re-synchronize: u from the retained density, then the density it induces.
  const Trajectory& m_final = sol.converged ? m : *best_m;
  sol.u = solve_forward(problem.u0(), m_final, problem, config.newton);
  sol.m = solve_backward(problem.m_T(), sol.u, problem, config.linear);
  return sol;
}

Solution solve(const ProblemSpec& spec, const SolveConfig& config) {
  config.validate();
  const DiscreteProblem problem(spec, config.n_h, config.n_t);
  return solve(problem, config);
}

GlobalResidual global_residual(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem) {
  if (u.steps() != m.steps()) throw InvalidArgument("u and m trajectories differ in length");
  const double dt = u.dt();
  GlobalResidual out;
  for (int k = 0; k < u.steps(); ++k) {
    const GridFunction rb = bellman_residual(u[k + 1], u[k], m[k], problem, dt);
    out.bellman_linf = std::max(out.bellman_linf, rb.flat().lpNorm<Eigen::Infinity>());
    const GridFunction rf = (1.0 / dt) * (m[k + 1] - m[k]) + problem.nu() * laplace_h(m[k]) +
                            transport(u[k + 1], m[k], problem.hamiltonian());
    out.fp_linf = std::max(out.fp_linf, rf.flat().lpNorm<Eigen::Infinity>());
  }
  return out;
}

// ---------------------------------------------------------------------------
// Monolithic oracle. The stencils below are written out per node on purpose;
// they do not go through the grid operators used by the modular path.

void check_oracle_size(int n_h, int n_t) {
  if (n_h > OracleOptions::kMaxGrid || n_t > OracleOptions::kMaxSteps || 2 * n_t * n_h * n_h > OracleOptions::kMaxUnknowns)
    throw InvalidArgument("oracle is limited to n_h <= 6, n_t <= 4 (at most 512 unknowns); got n_h=" +
                          std::to_string(n_h) + ", n_t=" + std::to_string(n_t));
}

namespace {

struct OracleLayout {
  int n;
  int steps;
  int cells() const { return n * n; }
  // u^{k}, k = 1..steps, then m^{k}, k = 0..steps-1
  int u_offset(int k) const { return (k - 1) * cells(); }
  int m_offset(int k) const { return steps * cells() + k * cells(); }
  int size() const { return 2 * steps * cells(); }
  int node(int i, int j) const { return wrap(i, n) * n + wrap(j, n); }
};

Eigen::VectorXd oracle_residual(const Eigen::VectorXd& x, const DiscreteProblem& p, const OracleLayout& lay) {
  const int n = lay.n;
  const double h = 1.0 / n, dt = p.dt(), nu = p.nu();
  const auto& ham = p.hamiltonian();
  const auto u0 = p.u0().flat();
  const auto mT = p.m_T().flat();
  auto u_at = [&](int k, int i, int j) { return k == 0 ? u0[lay.node(i, j)] : x[lay.u_offset(k) + lay.node(i, j)]; };
  auto m_at = [&](int k, int i, int j) {
    return k == lay.steps ? mT[lay.node(i, j)] : x[lay.m_offset(k) + lay.node(i, j)];
  };
  auto stencil_q = [&](int k, int i, int j) {
    const double c = u_at(k, i, j);
    return Vec4((u_at(k, i + 1, j) - c) / h, (c - u_at(k, i - 1, j)) / h, (u_at(k, i, j + 1) - c) / h,
                (c - u_at(k, i, j - 1)) / h);
  };

  Eigen::VectorXd r(lay.size());
  std::vector<Vec4> gq(static_cast<std::size_t>(lay.cells()));
  for (int k = 0; k < lay.steps; ++k) {
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) gq[std::size_t(lay.node(i, j))] = ham.grad({i, j}, stencil_q(k + 1, i, j));
    auto dg = [&](int i, int j, int c) { return gq[std::size_t(lay.node(i, j))][c]; };
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double uc = u_at(k + 1, i, j);
        const double lap_u = (u_at(k + 1, i + 1, j) + u_at(k + 1, i - 1, j) + u_at(k + 1, i, j + 1) +
                              u_at(k + 1, i, j - 1) - 4 * uc) / (h * h);
        r[lay.u_offset(k + 1) + lay.node(i, j)] = (uc - u_at(k, i, j)) / dt - nu * lap_u +
                                                  ham.eval({i, j}, stencil_q(k + 1, i, j)) - p.coupling()(m_at(k, i, j));

        const double mc = m_at(k, i, j);
        const double lap_m =
            (m_at(k, i + 1, j) + m_at(k, i - 1, j) + m_at(k, i, j + 1) + m_at(k, i, j - 1) - 4 * mc) / (h * h);
        const double tr = (mc * dg(i, j, 0) - m_at(k, i - 1, j) * dg(i - 1, j, 0) + m_at(k, i + 1, j) * dg(i + 1, j, 1) -
                           mc * dg(i, j, 1) + mc * dg(i, j, 2) - m_at(k, i, j - 1) * dg(i, j - 1, 2) +
                           m_at(k, i, j + 1) * dg(i, j + 1, 3) - mc * dg(i, j, 3)) / h;
        r[lay.m_offset(k) + lay.node(i, j)] = (m_at(k + 1, i, j) - mc) / dt + nu * lap_m + tr;
      }
  }
  return r;
}

}  // namespace

Solution oracle_solve(const DiscreteProblem& problem, const OracleOptions& opts) {
  const int n = problem.grid_size();
  check_oracle_size(n, problem.steps());
  const OracleLayout lay{n, problem.steps()};

  Eigen::VectorXd x(lay.size());
  for (int k = 1; k <= lay.steps; ++k) x.segment(lay.u_offset(k), lay.cells()) = problem.u0().flat();
  for (int k = 0; k < lay.steps; ++k) x.segment(lay.m_offset(k), lay.cells()) = problem.m_T().flat();

  Eigen::VectorXd r = oracle_residual(x, problem, lay);
  double norm = r.lpNorm<Eigen::Infinity>();
  Eigen::MatrixXd jac(lay.size(), lay.size());
  Solution sol;
  int it = 0;
  while (norm > opts.tol) {
    if (it++ >= opts.max_iterations) throw OracleDivergence("oracle Newton did not converge, residual " + std::to_string(norm));
    for (int c = 0; c < lay.size(); ++c) {
      Eigen::VectorXd xp = x, xm = x;
      xp[c] += opts.fd_step;
      xm[c] -= opts.fd_step;
      jac.col(c) = (oracle_residual(xp, problem, lay) - oracle_residual(xm, problem, lay)) / (2 * opts.fd_step);
    }
    const Eigen::VectorXd dx = jac.partialPivLu().solve(-r);
    double step = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving, step *= 0.5) {
      const Eigen::VectorXd trial = x + step * dx;
      const Eigen::VectorXd tr = oracle_residual(trial, problem, lay);
      const double tn = tr.lpNorm<Eigen::Infinity>();
      if (tn < norm) {
        x = trial;
        r = tr;
        norm = tn;
        accepted = true;
        break;
      }
    }
    if (!accepted) throw OracleDivergence("oracle line search failed, residual " + std::to_string(norm));
    sol.history.push_back({it, norm, 0, 0, norm});
  }

  std::vector<GridFunction> us{problem.u0()}, ms;
  for (int k = 1; k <= lay.steps; ++k) us.push_back(GridFunction::from_flat(n, x.segment(lay.u_offset(k), lay.cells())));
  for (int k = 0; k < lay.steps; ++k) ms.push_back(GridFunction::from_flat(n, x.segment(lay.m_offset(k), lay.cells())));
  ms.push_back(problem.m_T());
  sol.u = Trajectory(problem.dt(), std::move(us));
  sol.m = Trajectory(problem.dt(), std::move(ms));
  sol.outer_iterations = it;
  sol.converged = true;
  sol.final_delta = norm;
  return sol;
}

}  // namespace mfg
