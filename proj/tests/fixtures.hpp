#pragma once

#include <cmath>
#include <numbers>
#include <random>

#include "mfg/coupled_solver.hpp"
#include "mfg/problem.hpp"

namespace mfg::test {

constexpr double kTwoPi = 2 * std::numbers::pi;

inline GridFunction random_grid(int n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  GridFunction g(n);
  for (Eigen::Index k = 0; k < g.node_count(); ++k) g.flat()[k] = d(rng);
  return g;
}

/// Positive grid function with unit discrete mass.
inline GridFunction random_density(int n, std::mt19937_64& rng) {
  GridFunction g = random_grid(n, rng, 0.2, 1.8);
  g *= 1.0 / mass(g);
  return g;
}

/// u0 = 0, m_T = 1, zero potential, beta = 2, F(m) = m.
inline ProblemSpec constant_spec(double nu = 0.5, double horizon = 1.0) {
  ProblemSpec s;
  s.nu = nu;
  s.horizon = horizon;
  s.hamiltonian = HamiltonianModel::power_upwind(2.0);
  s.coupling = CouplingModel::identity();
  return s;
}

/// nu = 0.3, T = 0.5, beta = 1.5, potential cos(2 pi x1) + cos(2 pi x2),
/// F(m) = m^2, u0 = 0, m_T = 1.
inline ProblemSpec fixture_a_spec() {
  ProblemSpec s;
  s.nu = 0.3;
  s.horizon = 0.5;
  s.hamiltonian = HamiltonianModel::power_upwind(1.5, Potential::cos2(1.0));
  s.coupling = CouplingModel::power(2.0);
  return s;
}

inline SolveConfig config_for(int n_h, int n_t) {
  SolveConfig c;
  c.n_h = n_h;
  c.n_t = n_t;
  return c;
}

/// Smooth random problem for oracle comparisons.
inline ProblemSpec random_smooth_spec(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProblemSpec s;
  s.nu = 0.2 + 0.3 * u(rng);
  s.horizon = 0.3 + 0.4 * u(rng);
  const double beta = 1.3 + 0.7 * u(rng);
  const double a1 = 2 * u(rng) - 1, a2 = 2 * u(rng) - 1, ph = kTwoPi * u(rng);
  s.hamiltonian = HamiltonianModel::power_upwind(beta, Potential([=](double x1, double x2) {
    return a1 * std::cos(kTwoPi * x1 + ph) + a2 * std::sin(kTwoPi * (x1 + x2));
  }));
  s.coupling = u(rng) < 0.5 ? CouplingModel::identity() : CouplingModel::power(1.0 + u(rng));
  const double b1 = 0.5 * (2 * u(rng) - 1), b2 = 0.5 * (2 * u(rng) - 1);
  s.u0 = [=](double x1, double x2) { return b1 * std::cos(kTwoPi * x1) + b2 * std::sin(kTwoPi * x2); };
  const double c1 = 0.6 * (2 * u(rng) - 1), c2 = 0.3 * (2 * u(rng) - 1);
  s.m_T = [=](double x1, double x2) { return 1.0 + c1 * std::cos(kTwoPi * x1) + c2 * std::cos(kTwoPi * (x1 - x2)); };
  return s;
}

inline double linf_distance(const Trajectory& a, const Trajectory& b) {
  double worst = 0;
  for (int n = 0; n <= a.steps(); ++n) worst = std::max(worst, (a[n].values() - b[n].values()).cwiseAbs().maxCoeff());
  return worst;
}

}  // namespace mfg::test
