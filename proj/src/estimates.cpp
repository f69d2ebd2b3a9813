#include "mfg/estimates.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mfg/fokker_planck.hpp"

namespace mfg {

namespace {

void check_shapes(const Trajectory& u, const Trajectory& m) {
  if (u.steps() != m.steps() || u.grid_size() != m.grid_size()) throw InvalidArgument("u and m trajectories differ in shape");
}

double entropy_density(double mhat) { return mhat * std::abs(std::log(mhat)); }

}  // namespace

double lower_bound_margin(const Trajectory& u, const DiscreteProblem& problem) {
  const double u_min = problem.u0().flat().minCoeff();
  const double gap = problem.coupling().lower_bound() - problem.hamiltonian().max_at_zero_gradient();
  const double bound = u_min - problem.horizon() * std::max(-gap, 0.0);
  double margin = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= u.steps(); ++n) margin = std::min(margin, u[n].flat().minCoeff() - bound);
  return margin;
}

DualityTerms duality_terms(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem) {
  check_shapes(u, m);
  const int nt = u.steps();
  const double h2 = problem.h() * problem.h();
  const double dt = u.dt();
  const double m_bar = m[nt].flat().maxCoeff();
  const double f_bar = problem.coupling()(m_bar);
  const auto& ham = problem.hamiltonian();

  double hamiltonian_part = 0, g_part = 0, coupling_part = 0;
  for (int k = 0; k < nt; ++k) {
    const VectorField4 q = nabla_h(u[k + 1]);
    const Eigen::VectorXd g = ham.values(q);
    const auto grads = ham.gradients(q);
    const auto mk = m[k].flat();
    for (Eigen::Index c = 0; c < mk.size(); ++c) {
      hamiltonian_part += mk[c] * (grads.row(c).dot(q.values().row(c)) - g[c]);
      g_part += m_bar * g[c];
      coupling_part += (mk[c] - m_bar) * (problem.coupling()(mk[c]) - f_bar);
    }
  }
  DualityTerms out;
  out.lhs = h2 * dt * (hamiltonian_part + g_part + coupling_part);

  GridFunction shifted_terminal = m[nt];
  shifted_terminal.values().array() -= m_bar;
  GridFunction shifted_initial = m[0];
  shifted_initial.values().array() -= m_bar;
  GridFunction u_terminal = u[nt];
  u_terminal.values().array() -= problem.horizon() * f_bar;
  out.rhs = inner(shifted_terminal, u_terminal) - inner(shifted_initial, u[0]);
  return out;
}

double duality_residual(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem) {
  const DualityTerms t = duality_terms(u, m, problem);
  return std::abs(t.lhs - t.rhs) / std::max(1.0, std::abs(t.rhs));
}

EnergySums energy_sums(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem) {
  check_shapes(u, m);
  const double w = problem.h() * problem.h() * u.dt();
  EnergySums out;
  for (int k = 0; k < u.steps(); ++k) {
    const VectorField4 q = nabla_h(u[k + 1]);
    const Eigen::VectorXd g = problem.hamiltonian().values(q);
    const auto grads = problem.hamiltonian().gradients(q);
    const auto mk = m[k].flat();
    for (Eigen::Index c = 0; c < mk.size(); ++c) {
      out.mgq2 += mk[c] * grads.row(c).squaredNorm();
      out.g_sum += g[c];
      out.mFm += mk[c] * problem.coupling()(mk[c]);
    }
  }
  out.mgq2 *= w;
  out.g_sum *= w;
  out.mFm *= w;
  return out;
}

EntropyReport entropy_report(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem, double eta,
                             double eps) {
  check_shapes(u, m);
  if (!(eta > 0 && eta < problem.nu())) throw InvalidArgument("eta must lie in (0, nu)");
  const int nt = m.steps();
  const double h2 = problem.h() * problem.h();
  auto entropy_of = [&](const GridFunction& slice) {
    const auto v = slice.flat();
    double acc = 0;
    for (Eigen::Index c = 0; c < v.size(); ++c) acc += entropy_density(v[c] + eps);
    return h2 * acc;
  };

  EntropyReport out;
  for (int n = 0; n <= nt; ++n) out.entropy_max = std::max(out.entropy_max, entropy_of(m[n]));
  for (int k = 0; k < nt; ++k) {
    GridFunction root = m[k];
    root.values() = (root.values().array() + eps).max(0.0).sqrt().matrix();
    out.sqrt_m_h1_sum += std::pow(h1_seminorm(root), 2);
  }
  out.sqrt_m_h1_sum *= m.dt();
  out.weighted_h1 = (problem.nu() - eta) * out.sqrt_m_h1_sum;
  out.terminal_entropy = entropy_of(m[nt]);
  out.energy_term = energy_sums(u, m, problem).mgq2 / (2 * eta);
  out.constant_needed = std::max(0.0, out.entropy_max + out.weighted_h1 - out.terminal_entropy - out.energy_term);
  return out;
}

CompactnessReport compactness_report(const Trajectory& m, double alpha_m, double alpha_grad) {
  if (!(alpha_m >= 1.0 && alpha_m < 2.0)) throw InvalidArgument("alpha for ||m||_{L^alpha} must lie in [1, 2)");
  if (!(alpha_grad >= 1.0 && alpha_grad < 4.0 / 3.0)) throw InvalidArgument("alpha for ||D_h m||_{L^alpha} must lie in [1, 4/3)");
  CompactnessReport out;
  const double dt = m.dt();
  for (int k = 0; k < m.steps(); ++k) {
    out.m_lalpha += lp_norm_pow(m[k], alpha_m);
    out.dhm_lalpha += w1s_seminorm_pow(m[k], alpha_grad);
    out.dtm_hminus1 += std::pow(h_minus1_norm((1.0 / dt) * (m[k + 1] - m[k])), 2);
  }
  out.m_lalpha *= dt;
  out.dhm_lalpha *= dt;
  out.dtm_hminus1 *= dt;
  return out;
}

KhMembership kh_membership(const Trajectory& m) {
  KhMembership out;
  out.worst_min = std::numeric_limits<double>::infinity();
  for (int n = 0; n <= m.steps(); ++n) {
    out.worst_mass_drift = std::max(out.worst_mass_drift, std::abs(mass(m[n]) - 1.0));
    out.worst_min = std::min(out.worst_min, m[n].flat().minCoeff());
  }
  return out;
}

DiagnosticsReport diagnose(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem,
                           const DiagnosticsOptions& opts) {
  const double eta = opts.eta > 0 ? opts.eta : 0.5 * problem.nu();
  DiagnosticsReport r;
  r.lower_bound_margin = lower_bound_margin(u, problem);
  r.duality_residual = duality_residual(u, m, problem);
  const EnergySums e = energy_sums(u, m, problem);
  r.energy_mgq2 = e.mgq2;
  r.energy_g = e.g_sum;
  r.energy_mFm = e.mFm;
  const EntropyReport ent = entropy_report(u, m, problem, eta, opts.eps);
  r.entropy_max = ent.entropy_max;
  r.sqrt_m_h1_sum = ent.sqrt_m_h1_sum;
  const CompactnessReport c = compactness_report(m, opts.alpha_m, opts.alpha_grad);
  r.m_lalpha = c.m_lalpha;
  r.dhm_lalpha = c.dhm_lalpha;
  r.dtm_hminus1 = c.dtm_hminus1;
  const KhMembership kh = kh_membership(m);
  r.kh_worst_mass_drift = kh.worst_mass_drift;
  r.kh_worst_min = kh.worst_min;
  return r;
}

}  // namespace mfg
