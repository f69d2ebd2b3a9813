#include "mfg/fokker_planck.hpp"

#include <Eigen/LU>

#include <array>
#include <cmath>
#include <string>

namespace mfg {

GridFunction transport(const GridFunction& u, const GridFunction& m, const NumericalHamiltonian& hamiltonian) {
  u.check_same(m);
  const int n = u.size();
  const double inv_h = n;
  const auto grads = hamiltonian.gradients(nabla_h(u));
  // Flux components m * dg/dq_k at every node.
  Eigen::Matrix<double, Eigen::Dynamic, 4> flux = grads;
  const auto mf = m.flat();
  for (Eigen::Index k = 0; k < flux.rows(); ++k) flux.row(k) *= mf[k];

  GridFunction out(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Index c = Eigen::Index(i) * n + j;
      const double x_part = flux(c, 0) - flux(u.flat_index(i - 1, j), 0) + flux(u.flat_index(i + 1, j), 1) - flux(c, 1);
      const double y_part = flux(c, 2) - flux(u.flat_index(i, j - 1), 2) + flux(u.flat_index(i, j + 1), 3) - flux(c, 3);
      out.values()(i, j) = (x_part + y_part) * inv_h;
    }
  return out;
}

SparseRowMatrix transport_matrix(const GridFunction& u, const NumericalHamiltonian& hamiltonian) {
  const int n = u.size();
  const double inv_h = n;
  const auto g = hamiltonian.gradients(nabla_h(u));
  std::vector<Eigen::Triplet<double>> t;
  t.reserve(std::size_t(5) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Index r = Eigen::Index(i) * n + j;
      const Eigen::Index im = u.flat_index(i - 1, j), ip = u.flat_index(i + 1, j);
      const Eigen::Index jm = u.flat_index(i, j - 1), jp = u.flat_index(i, j + 1);
      t.emplace_back(r, r, (g(r, 0) - g(r, 1) + g(r, 2) - g(r, 3)) * inv_h);
      t.emplace_back(r, im, -g(im, 0) * inv_h);
      t.emplace_back(r, ip, g(ip, 1) * inv_h);
      t.emplace_back(r, jm, -g(jm, 2) * inv_h);
      t.emplace_back(r, jp, g(jp, 3) * inv_h);
    }
  SparseRowMatrix a(Eigen::Index(n) * n, Eigen::Index(n) * n);
  a.setFromTriplets(t.begin(), t.end());
  return a;
}

SparseRowMatrix fp_matrix(const GridFunction& u_next, const DiscreteProblem& problem, double dt) {
  const int n = u_next.size();
  SparseRowMatrix a = -dt * problem.nu() * laplace_matrix(n) - dt * transport_matrix(u_next, problem.hamiltonian());
  for (Eigen::Index k = 0; k < a.rows(); ++k) a.coeffRef(k, k) += 1.0;
  for (Eigen::Index r = 0; r < a.outerSize(); ++r)
    for (SparseRowMatrix::InnerIterator it(a, r); it; ++it) {
      const bool bad = it.col() == r ? !(it.value() > 0) : it.value() > 0;
      if (bad)
        throw Error("Fokker-Planck matrix lost its M-matrix sign pattern at row " + std::to_string(r) +
                    " (is the Hamiltonian monotone?)");
    }
  return a;
}

double adjoint_check(const GridFunction& u, const GridFunction& m, const GridFunction& w, const DiscreteProblem& problem) {
  u.check_same(m);
  u.check_same(w);
  const double nu = problem.nu();
  const auto lap_m = laplace_h(m);
  const auto lap_w = laplace_h(w);
  const auto tr = transport(u, m, problem.hamiltonian());
  const auto grads = problem.hamiltonian().gradients(nabla_h(u));
  const auto dw = nabla_h(w);

  const auto mf = m.flat(), wf = w.flat(), lm = lap_m.flat(), lw = lap_w.flat(), tf = tr.flat();
  double lhs = 0, rhs = 0, scale = 0;
  for (Eigen::Index k = 0; k < mf.size(); ++k) {
    const double adj = -nu * lm[k] - tf[k];
    const double lin_terms = grads.row(k).dot(dw.values().row(k));
    lhs += adj * wf[k];
    rhs += mf[k] * (-nu * lw[k] + lin_terms);
    double abs_lin = 0;
    for (int c = 0; c < 4; ++c) abs_lin += std::abs(grads(k, c) * dw.values()(k, c));
    scale += std::abs(wf[k]) * (nu * std::abs(lm[k]) + std::abs(tf[k])) + std::abs(mf[k]) * (nu * std::abs(lw[k]) + abs_lin);
  }
  const double defect = std::abs(lhs - rhs);
  return scale > 0 ? defect / scale : defect;
}

std::pair<GridFunction, FPStepReport> fp_step(const GridFunction& m_next, const GridFunction& u_next,
                                              const DiscreteProblem& problem, double dt, const LinearOptions& opts) {
  m_next.check_same(u_next);
  const int n = m_next.size();
  const SparseRowMatrix a = fp_matrix(u_next, problem, dt);
  const Eigen::VectorXd b = m_next.flat();
  FPStepReport report;
  Eigen::VectorXd x;
  if (n <= opts.dense_max_n) {
    const Eigen::MatrixXd dense(a);
    x = dense.partialPivLu().solve(b);
    const double bnorm = b.norm();
    report.residual = bnorm > 0 ? (b - a * x).norm() / bnorm : 0.0;
  } else {
    report.linear_iterations = solve_nonsymmetric(a, b, x, opts.tol, &report.residual);
  }
  if (!x.allFinite()) throw LinearSolveFailure("Fokker-Planck solve produced non-finite values", report.residual);

  GridFunction m = GridFunction::from_flat(n, x);
  report.min_value = m.flat().minCoeff();
  report.mass = mass(m);
  if (report.min_value < -1e-9 && m_next.flat().minCoeff() >= 0)
    throw NegativityViolation("Fokker-Planck step produced negative density", report.min_value);
  return {std::move(m), report};
}

Trajectory solve_backward(const GridFunction& m_T, const Trajectory& u, const DiscreteProblem& problem,
                          const LinearOptions& opts, std::vector<FPStepReport>* reports) {
  m_T.check_same(u[0]);
  Trajectory m(u.steps(), u.dt(), m_T);
  if (reports) reports->assign(static_cast<std::size_t>(u.steps()), FPStepReport{});
  for (int k = u.steps() - 1; k >= 0; --k) {
    try {
      auto [curr, report] = fp_step(m[k + 1], u[k + 1], problem, u.dt(), opts);
      m[k] = std::move(curr);
      if (reports) (*reports)[static_cast<std::size_t>(k)] = report;
    } catch (const NegativityViolation& e) {
      throw NegativityViolation(std::string(e.what()) + " at time index " + std::to_string(k), e.min_value(), k);
    } catch (const LinearSolveFailure& e) {
      throw LinearSolveFailure(std::string(e.what()) + " at time index " + std::to_string(k), e.residual(), k);
    }
  }
  return m;
}

GridFunction cell_average_density(int n, const FieldSampler& density) {
  static constexpr std::array<double, 4> nodes = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                                  0.8611363115940526};
  static constexpr std::array<double, 4> weights = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                                    0.3478548451374538};
  GridFunction out(n);
  const double h = 1.0 / n;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double acc = 0;
      for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
          const double v = density(i * h + 0.5 * h * nodes[a], j * h + 0.5 * h * nodes[b]);
          if (!(v >= 0) || !std::isfinite(v)) throw NegativityViolation("terminal density must be finite and nonnegative", v);
          acc += weights[a] * weights[b] * v;
        }
      out.values()(i, j) = 0.25 * acc;
    }
  const double total = mass(out);
  if (!(total > 0)) throw InvalidArgument("terminal density has zero mass");
  out *= 1.0 / total;
  return out;
}

}  // namespace mfg
