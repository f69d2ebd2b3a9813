#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "mfg/coupled_solver.hpp"

using namespace mfg;
using mfg::test::config_for;
using mfg::test::linf_distance;

namespace {

void check_in_kh(const Trajectory& m) {
  for (int k = 0; k <= m.steps(); ++k) {
    CHECK(std::abs(mass(m[k]) - 1.0) <= 1e-8);
    CHECK(m[k].values().minCoeff() >= -1e-9);
  }
}

}  // namespace

TEST_CASE("config validation") {
  auto c = config_for(8, 4);
  CHECK_NOTHROW(c.validate());
  c.damping = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c.damping = 1.5;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = config_for(3, 4);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = config_for(8, 0);
  CHECK_THROWS_AS(c.validate(), InvalidArgument);

  auto spec = test::constant_spec();
  spec.nu = 0.0;
  CHECK_THROWS_AS(spec.validate(), InvalidArgument);
}

TEST_CASE("constant data") {
  for (double nu : {0.1, 1.0}) {
    const auto spec = test::constant_spec(nu, 1.0);
    const auto sol = solve(spec, config_for(8, 4));
    CHECK(sol.converged);
    CHECK(sol.outer_iterations <= 2);
    CHECK(sol.final_delta <= 1e-13);
    for (int n = 0; n <= 4; ++n) {
      CHECK((sol.u[n].values().array() - n * 0.25).abs().maxCoeff() <= 1e-13);
      CHECK((sol.m[n].values().array() - 1.0).abs().maxCoeff() <= 1e-13);
    }
    const DiscreteProblem p(spec, 8, 4);
    // Round-off in u is amplified by the stencil diagonal 8 nu / h^2.
    const double amplification = 1 + 8 * nu * 64;
    const auto res = global_residual(sol.u, sol.m, p);
    CHECK(res.bellman_linf <= 1e-13 * amplification);
    CHECK(res.fp_linf <= 1e-13 * amplification);

    std::vector<GridFunction> exact;
    for (int n = 0; n <= 4; ++n) exact.push_back(GridFunction(8, n * 0.25));
    const auto res_exact = global_residual(Trajectory(0.25, exact), Trajectory(4, 0.25, GridFunction(8, 1.0)), p);
    CHECK(res_exact.bellman_linf <= 1e-13);
    CHECK(res_exact.fp_linf <= 1e-13);
  }
}

TEST_CASE("global_residual reacts to a one-node perturbation by the stencil diagonal") {
  const auto spec = test::fixture_a_spec();
  const DiscreteProblem p(spec, 4, 2);
  auto cfg = config_for(4, 2);
  cfg.tol_fixed_point = 1e-12;
  const auto sol = solve(p, cfg);
  const auto before = global_residual(sol.u, sol.m, p);
  CHECK(before.bellman_linf <= 1e-7);
  CHECK(before.fp_linf <= 1e-7);

  Trajectory u = sol.u;
  u[2](1, 2) += 1.0;
  const auto after = global_residual(u, sol.m, p);
  // Linear part 1/dt + 4 nu / h^2; the Hamiltonian part is nonnegative at that node.
  CHECK(after.bellman_linf >= 1 / p.dt() + 4 * p.nu() * 16 - before.bellman_linf);
}

TEST_CASE("fixture A agrees with the monolithic oracle") {
  const DiscreteProblem p(test::fixture_a_spec(), 4, 2);
  auto cfg = config_for(4, 2);
  cfg.tol_fixed_point = 1e-13;
  const auto sol = solve(p, cfg);
  const auto ref = oracle_solve(p);
  CHECK(sol.converged);
  CHECK(ref.converged);
  CHECK(linf_distance(sol.u, ref.u) <= 1e-8);
  CHECK(linf_distance(sol.m, ref.m) <= 1e-8);
  check_in_kh(sol.m);

  // Regression values of the oracle.
  const auto again = oracle_solve(p);
  CHECK(linf_distance(again.u, ref.u) == 0.0);
}

TEST_CASE("oracle on constant data and size limits") {
  const DiscreteProblem p(test::constant_spec(0.5, 1.0), 4, 2);
  const auto ref = oracle_solve(p);
  for (int n = 0; n <= 2; ++n) {
    CHECK((ref.u[n].values().array() - n * 0.5).abs().maxCoeff() <= 1e-12);
    CHECK((ref.m[n].values().array() - 1.0).abs().maxCoeff() <= 1e-12);
  }
  CHECK_NOTHROW(check_oracle_size(6, 4));
  CHECK_THROWS_AS(check_oracle_size(8, 2), InvalidArgument);
  CHECK_THROWS_AS(check_oracle_size(4, 5), InvalidArgument);
}

TEST_CASE("oracle and modular solver agree on random smooth problems") {
  for (std::uint64_t seed : {101u, 202u, 303u}) {
    const DiscreteProblem p(test::random_smooth_spec(seed), 4, 3);
    auto cfg = config_for(4, 3);
    cfg.tol_fixed_point = 1e-13;
    const auto sol = solve(p, cfg);
    const auto ref = oracle_solve(p);
    INFO("seed " << seed);
    CHECK(sol.converged);
    CHECK(linf_distance(sol.u, ref.u) <= 1e-7);
    CHECK(linf_distance(sol.m, ref.m) <= 1e-7);
  }
}

TEST_CASE("damping does not move the fixed point") {
  const DiscreteProblem p(test::fixture_a_spec(), 8, 4);
  // Undamped iteration may cycle; only converged runs are compared.
  std::vector<Solution> sols;
  for (double theta : {0.25, 0.5, 1.0}) {
    auto cfg = config_for(8, 4);
    cfg.damping = theta;
    auto sol = solve(p, cfg);
    check_in_kh(sol.m);
    if (sol.converged) sols.push_back(std::move(sol));
  }
  REQUIRE(sols.size() >= 2);
  for (const auto& s : sols) CHECK(sup_l1_distance(s.m, sols.front().m) <= 10 * 1e-8);
}

TEST_CASE("multi-start reaches the same solution") {
  const DiscreteProblem p(test::fixture_a_spec(), 8, 4);
  const auto cfg = config_for(8, 4);
  const auto a = solve(p, cfg);

  std::mt19937_64 rng(77);
  std::vector<GridFunction> slices;
  for (int k = 0; k <= 4; ++k) slices.push_back(test::random_density(8, rng));
  const Trajectory start(p.dt(), slices);
  const auto b = solve(p, cfg, &start);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK(sup_l1_distance(a.m, b.m) <= 10 * cfg.tol_fixed_point);
}

TEST_CASE("residual tail is monotone up to one violation") {
  const DiscreteProblem p(test::fixture_a_spec(), 8, 4);
  const auto sol = solve(p, config_for(8, 4));
  REQUIRE(sol.history.size() >= 2);
  const std::size_t first = sol.history.size() > 5 ? sol.history.size() - 5 : 0;
  int violations = 0;
  for (std::size_t k = first + 1; k < sol.history.size(); ++k)
    if (sol.history[k].delta > sol.history[k - 1].delta) ++violations;
  CHECK(violations <= 1);
}

TEST_CASE("max outer exceeded returns the best iterate") {
  const DiscreteProblem p(test::fixture_a_spec(), 8, 4);
  auto cfg = config_for(8, 4);
  cfg.max_outer = 2;
  cfg.tol_fixed_point = 1e-14;
  const auto sol = solve(p, cfg);
  CHECK_FALSE(sol.converged);
  CHECK(sol.outer_iterations == 2);
  CHECK(sol.history.size() == 2);
  check_in_kh(sol.m);
}
