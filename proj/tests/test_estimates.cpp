#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mfg/coupled_solver.hpp"
#include "mfg/estimates.hpp"

using namespace mfg;
using mfg::test::config_for;

namespace {

Trajectory constant_u(int n, int steps, double dt) {
  std::vector<GridFunction> s;
  for (int k = 0; k <= steps; ++k) s.push_back(GridFunction(n, k * dt));
  return Trajectory(dt, s);
}

// H^-1 norm squared from an eigendecomposition of the dense I - Delta_h.
double dense_hminus1_sq(const GridFunction& v) {
  const int n = v.size();
  const double inv_h2 = double(n) * n;
  Eigen::MatrixXd a = Eigen::MatrixXd::Identity(n * n, n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const int r = i * n + j;
      a(r, r) += 4 * inv_h2;
      for (int c : {((i + 1) % n) * n + j, ((i + n - 1) % n) * n + j, i * n + (j + 1) % n, i * n + (j + n - 1) % n})
        a(r, c) -= inv_h2;
    }
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  const Eigen::VectorXd c = eig.eigenvectors().transpose() * v.flat();
  return (c.array().square() / eig.eigenvalues().array()).sum() / inv_h2;
}

}  // namespace

TEST_CASE("lower_bound_margin") {
  const DiscreteProblem p(test::constant_spec(0.5, 1.0), 8, 4);
  Trajectory u = constant_u(8, 4, 0.25);
  CHECK(lower_bound_margin(u, p) == 0.0);
  for (int k = 0; k <= 4; ++k) u[k].values().array() -= 1.0;
  CHECK(lower_bound_margin(u, p) <= -1.0);

  // Potential raises max H(x, 0) above the coupling floor.
  auto spec = test::fixture_a_spec();
  const DiscreteProblem q(spec, 8, 4);
  const auto sol = solve(q, config_for(8, 4));
  CHECK(lower_bound_margin(sol.u, q) >= -10 * 1e-10);
}

TEST_CASE("duality residual") {
  const DiscreteProblem p(test::constant_spec(0.5, 1.0), 8, 4);
  const Trajectory m(4, 0.25, GridFunction(8, 1.0));
  CHECK(duality_residual(constant_u(8, 4, 0.25), m, p) <= 1e-12);

  for (std::uint64_t seed : {5u, 6u}) {
    const DiscreteProblem q(test::random_smooth_spec(seed), 8, 6);
    const auto sol = solve(q, config_for(8, 6));
    REQUIRE(sol.converged);
    const double tol_sum = 1e-10 + 1e-12 + 1e-8;
    CHECK(duality_residual(sol.u, sol.m, q) <= 100 * tol_sum);

    std::mt19937_64 rng(seed);
    Trajectory bad = sol.m;
    for (int k = 0; k < bad.steps(); ++k) bad[k] = test::random_density(8, rng);
    CHECK(duality_residual(sol.u, bad, q) >= 1e-3);
  }
}

TEST_CASE("duality terms of the oracle solution") {
  const DiscreteProblem p(test::fixture_a_spec(), 4, 2);
  const auto ref = oracle_solve(p);
  CHECK(duality_residual(ref.u, ref.m, p) <= 1e-7);
}

TEST_CASE("energy sums") {
  const DiscreteProblem p(test::constant_spec(0.5, 1.0), 8, 4);
  const auto e = energy_sums(constant_u(8, 4, 0.25), Trajectory(4, 0.25, GridFunction(8, 1.0)), p);
  CHECK(e.mgq2 == 0.0);
  CHECK(e.g_sum == 0.0);
  CHECK(e.mFm == doctest::Approx(1.0).epsilon(1e-14));

  const DiscreteProblem q(test::fixture_a_spec(), 8, 8);
  auto cfg = config_for(8, 8);
  const auto a = solve(q, cfg);
  cfg.tol_fixed_point *= 0.5;
  const auto b = solve(q, cfg);
  const auto ea = energy_sums(a.u, a.m, q), eb = energy_sums(b.u, b.m, q);
  CHECK(std::isfinite(ea.mgq2));
  CHECK(ea.mgq2 == doctest::Approx(eb.mgq2).epsilon(0.01));
  CHECK(ea.g_sum == doctest::Approx(eb.g_sum).epsilon(0.01));
  CHECK(ea.mFm == doctest::Approx(eb.mFm).epsilon(0.01));
}

TEST_CASE("entropy report") {
  const DiscreteProblem p(test::constant_spec(0.5, 1.0), 8, 4);
  const auto u = constant_u(8, 4, 0.25);
  const auto ones = entropy_report(u, Trajectory(4, 0.25, GridFunction(8, 1.0)), p, 0.25);
  CHECK(ones.entropy_max <= 1e-15);
  CHECK(ones.sqrt_m_h1_sum == 0.0);

  for (int n : {4, 8, 16}) {
    const DiscreteProblem q(test::constant_spec(0.5, 1.0), n, 2);
    GridFunction spike(n);
    spike(1, 2) = double(n) * n;
    const auto r = entropy_report(constant_u(n, 2, 0.5), Trajectory(2, 0.5, spike), q, 0.25);
    CHECK(r.entropy_max == doctest::Approx(2 * std::log(double(n))).epsilon(1e-12));
    CHECK(std::isfinite(r.sqrt_m_h1_sum));
    CHECK(r.weighted_h1 == doctest::Approx(0.25 * r.sqrt_m_h1_sum));
  }

  CHECK_THROWS_AS(entropy_report(u, Trajectory(4, 0.25, GridFunction(8, 1.0)), p, 0.0), InvalidArgument);
  CHECK_THROWS_AS(entropy_report(u, Trajectory(4, 0.25, GridFunction(8, 1.0)), p, 0.5), InvalidArgument);
}

TEST_CASE("compactness report") {
  const auto ones = compactness_report(Trajectory(4, 0.25, GridFunction(8, 1.0)), 1.5, 1.25);
  CHECK(ones.m_lalpha == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(ones.dhm_lalpha == 0.0);
  CHECK(ones.dtm_hminus1 == 0.0);

  const int n = 8;
  GridFunction spike(n);
  spike(3, 3) = double(n) * n;
  const double dt = 0.5;
  const Trajectory jump(dt, {GridFunction(n, 1.0), spike});
  const auto r = compactness_report(jump, 1.5, 1.25);
  CHECK(std::abs(r.dtm_hminus1 - dt * dense_hminus1_sq((1 / dt) * (spike - GridFunction(n, 1.0)))) <= 1e-10);

  CHECK_THROWS_AS(compactness_report(jump, 2.0, 1.25), InvalidArgument);
  CHECK_THROWS_AS(compactness_report(jump, 1.5, 4.0 / 3.0), InvalidArgument);
  CHECK_THROWS_AS(compactness_report(jump, 0.9, 1.25), InvalidArgument);
}

TEST_CASE("kh_membership") {
  const auto ones = kh_membership(Trajectory(3, 0.1, GridFunction(6, 1.0)));
  CHECK(ones.worst_mass_drift == 0.0);
  CHECK(ones.worst_min == 1.0);
  const auto scaled = kh_membership(Trajectory(3, 0.1, GridFunction(6, 1.5)));
  CHECK(scaled.worst_mass_drift == doctest::Approx(0.5));
}

TEST_CASE("diagnose fills every field with finite values") {
  const DiscreteProblem p(test::fixture_a_spec(), 8, 4);
  const auto sol = solve(p, config_for(8, 4));
  const auto d = diagnose(sol.u, sol.m, p);
  for (double v : {d.lower_bound_margin, d.duality_residual, d.energy_mgq2, d.energy_g, d.energy_mFm, d.entropy_max,
                   d.sqrt_m_h1_sum, d.m_lalpha, d.dhm_lalpha, d.dtm_hminus1, d.kh_worst_mass_drift, d.kh_worst_min})
    CHECK(std::isfinite(v));
  CHECK(d.kh_worst_mass_drift <= 1e-8);
  CHECK(d.kh_worst_min >= -1e-9);
}
