#include "mfg/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

namespace mfg {

namespace {

double neg(double r) { return r < 0 ? -r : 0.0; }
double pos(double r) { return r > 0 ? r : 0.0; }

std::string format_vec(const Vec4& q) {
  std::ostringstream os;
  os.precision(17);
  os << "(" << q[0] << ", " << q[1] << ", " << q[2] << ", " << q[3] << ")";
  return os.str();
}

}  // namespace

Potential Potential::cos2(double amplitude) {
  return Potential([amplitude](double x1, double x2) {
    return amplitude * (std::cos(2 * std::numbers::pi * x1) + std::cos(2 * std::numbers::pi * x2));
  });
}

GridFunction Potential::on_grid(int n) const {
  if (samples_) {
    if (samples_->size() != n) throw InvalidArgument("potential samples were given for a different grid size");
    return *samples_;
  }
  GridFunction out = GridFunction::sample(n, sampler_);
  if (!out.values().allFinite()) throw InvalidArgument("potential values must be finite");
  return out;
}

HamiltonianModel HamiltonianModel::power_upwind(double beta, Potential potential) {
  if (!(beta > 1.0 && beta <= 2.0)) throw InvalidArgument("beta must lie in (1, 2]");
  HamiltonianModel m;
  m.kind_ = HamiltonianKind::PowerUpwind;
  m.beta_ = beta;
  m.potential_ = std::move(potential);
  // c2 depends on the sampled potential and is filled in by constants_for.
  m.constants_ = GrowthConstants{0.999 * fit_growth_c1(beta), 1.0, beta, 1.0};
  return m;
}

HamiltonianModel HamiltonianModel::custom(ValueFn value, GradientFn gradient, Potential potential, ContinuousFn continuous,
                                          std::optional<GrowthConstants> constants) {
  if (!value || !gradient) throw InvalidArgument("custom Hamiltonian needs value and gradient callables");
  HamiltonianModel m;
  m.kind_ = HamiltonianKind::Custom;
  m.beta_ = std::numeric_limits<double>::quiet_NaN();
  m.potential_ = std::move(potential);
  m.value_ = std::move(value);
  m.gradient_ = std::move(gradient);
  m.continuous_ = std::move(continuous);
  m.constants_ = constants;
  return m;
}

double HamiltonianModel::value(double potential, const Vec4& q) const {
  if (kind_ == HamiltonianKind::Custom) return value_(potential, q);
  const double a = neg(q[0]), b = pos(q[1]), c = neg(q[2]), d = pos(q[3]);
  const double s = a * a + b * b + c * c + d * d;
  if (beta_ == 2.0) return potential + s;
  return potential + std::pow(s, 0.5 * beta_);
}

Vec4 HamiltonianModel::gradient(double potential, const Vec4& q) const {
  if (kind_ == HamiltonianKind::Custom) return gradient_(potential, q);
  const double a = neg(q[0]), b = pos(q[1]), c = neg(q[2]), d = pos(q[3]);
  const double s = a * a + b * b + c * c + d * d;
  if (s == 0.0) return Vec4::Zero();
  // d/dq_k s^{beta/2} = beta s^{beta/2 - 1} p_k dp_k/dq_k
  const double f = beta_ == 2.0 ? 2.0 : beta_ * std::pow(s, 0.5 * beta_ - 1.0);
  return Vec4(-f * a, f * b, -f * c, f * d);
}

std::optional<double> HamiltonianModel::continuous(double potential, double p1, double p2) const {
  if (kind_ == HamiltonianKind::Custom) {
    if (!continuous_) return std::nullopt;
    return continuous_(potential, p1, p2);
  }
  return potential + std::pow(p1 * p1 + p2 * p2, 0.5 * beta_);
}

std::optional<GrowthConstants> HamiltonianModel::constants_for(const GridFunction& potential) const {
  if (!constants_) return std::nullopt;
  GrowthConstants c = *constants_;
  if (kind_ == HamiltonianKind::PowerUpwind) c.c2 = potential.values().cwiseAbs().maxCoeff() + 1.0;
  return c;
}

double fit_growth_c1(double beta) {
  const double e = 2.0 * (beta - 1.0) / beta;
  double best = std::numeric_limits<double>::infinity();
  constexpr int kPoints = 4001;
  for (int k = 0; k < kPoints; ++k) {
    const double big_g = std::pow(10.0, -12.0 + 24.0 * k / (kPoints - 1));
    best = std::min(best, ((beta - 1.0) * big_g + 1.0) / (beta * beta * std::pow(big_g, e)));
  }
  // For beta = 2 the ratio decreases towards its limit (beta - 1) / beta^2.
  if (e >= 1.0) best = std::min(best, (beta - 1.0) / (beta * beta));
  return best;
}

NumericalHamiltonian::NumericalHamiltonian(HamiltonianModel model, int n)
    : model_(std::move(model)), potential_(model_.potential().on_grid(n)), constants_(model_.constants_for(potential_)) {}

Eigen::VectorXd NumericalHamiltonian::values(const VectorField4& q) const {
  const int n = grid_size();
  if (q.size() != n) throw InvalidArgument("vector field size mismatch");
  Eigen::VectorXd out(Eigen::Index(n) * n);
  const auto pot = potential_.flat();
  for (Eigen::Index k = 0; k < out.size(); ++k) out[k] = model_.value(pot[k], q.values().row(k).transpose());
  return out;
}

Eigen::Matrix<double, Eigen::Dynamic, 4> NumericalHamiltonian::gradients(const VectorField4& q) const {
  const int n = grid_size();
  if (q.size() != n) throw InvalidArgument("vector field size mismatch");
  Eigen::Matrix<double, Eigen::Dynamic, 4> out(Eigen::Index(n) * n, 4);
  const auto pot = potential_.flat();
  for (Eigen::Index k = 0; k < out.rows(); ++k) out.row(k) = model_.gradient(pot[k], q.values().row(k).transpose()).transpose();
  return out;
}

double NumericalHamiltonian::max_at_zero_gradient() const {
  const int n = grid_size();
  double best = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) best = std::max(best, eval({i, j}, Vec4::Zero()));
  return best;
}

bool AxiomReport::all_passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const AxiomCheck& c) { return c.passed || !c.enforced; });
}

const AxiomCheck& AxiomReport::at(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return c;
  throw InvalidArgument("no axiom check named " + name);
}

AxiomReport validate_axioms(const NumericalHamiltonian& h, int sample_count, std::uint64_t seed) {
  if (sample_count < 1) throw InvalidArgument("sample_count must be at least 1");
  const int n = h.grid_size();
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> node(0, n - 1);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::uniform_real_distribution<double> log_scale(-2.0, 1.0);
  auto random_q = [&] {
    Vec4 q;
    for (int k = 0; k < 4; ++k) q[k] = unit(rng) * std::pow(10.0, log_scale(rng));
    return q;
  };

  const bool custom = h.model().kind() == HamiltonianKind::Custom;
  auto named = [](const char* name) {
    AxiomCheck c;
    c.name = name;
    return c;
  };
  AxiomCheck g1 = named("g1_monotonicity"), g2 = named("g2_consistency"), g3 = named("g3_regularity"),
             g4 = named("g4_convexity"), g5a = named("g5_eq27"), g5b = named("g5_eq31");
  g5a.enforced = g5b.enforced = !custom;

  auto fail = [](AxiomCheck& c, double amount, const std::string& witness) {
    if (c.passed || amount > c.worst) {
      c.worst = amount;
      c.witness = witness;
    }
    c.passed = false;
  };

  const auto& constants = h.constants();
  if (!constants) g5a.skipped = g5b.skipped = true;

  for (int s = 0; s < sample_count; ++s) {
    const NodeIndex x{node(rng), node(rng)};
    const Vec4 q = random_q();
    const double gq = h.eval(x, q);
    const Vec4 grad = h.grad(x, q);
    const std::string where = "node (" + std::to_string(x.i) + "," + std::to_string(x.j) + ") q=" + format_vec(q);

    // (g1): signs of the gradient, and monotone values along each axis.
    const double sign_violation = std::max({grad[0], -grad[1], grad[2], -grad[3], 0.0});
    if (sign_violation > 0) fail(g1, sign_violation, where + " gradient=" + format_vec(grad));
    for (int k = 0; k < 4; ++k) {
      Vec4 shifted = q;
      shifted[k] += 0.1;
      const double change = h.eval(x, shifted) - gq;
      const double wrong = (k % 2 == 0) ? change : -change;
      if (wrong > 1e-12 * std::max(1.0, std::abs(gq))) fail(g1, wrong, where + " along q" + std::to_string(k + 1));
    }

    // (g2): g(x, p1, p1, p2, p2) = H(x, p).
    if (const auto hp = h.model().continuous(h.potential()(x), q[0], q[2])) {
      const double diag = h.eval(x, Vec4(q[0], q[0], q[2], q[2]));
      const double err = std::abs(diag - *hp);
      if (err > 1e-12 * std::max(1.0, std::abs(*hp))) fail(g2, err, where);
    } else {
      g2.skipped = true;
    }

    // (g3): analytic gradient vs central differences, away from the kinks.
    if (q.cwiseAbs().minCoeff() > 1e-3) {
      constexpr double step = 1e-6;
      Vec4 fd;
      for (int k = 0; k < 4; ++k) {
        Vec4 qp = q, qm = q;
        qp[k] += step;
        qm[k] -= step;
        fd[k] = (h.eval(x, qp) - h.eval(x, qm)) / (2 * step);
      }
      const double err = (fd - grad).cwiseAbs().maxCoeff() / std::max(1.0, grad.cwiseAbs().maxCoeff());
      g3.worst = std::max(g3.worst, err);
      if (err > 1e-6) fail(g3, err, where);
    }

    // (g4): midpoint convexity.
    const Vec4 r = random_q();
    const double mid = h.eval(x, 0.5 * (q + r));
    const double chord = 0.5 * (gq + h.eval(x, r));
    if (mid - chord > 1e-12 * std::max(1.0, std::abs(chord))) fail(g4, mid - chord, where + " r=" + format_vec(r));

    // (g5)
    if (constants) {
      const double lhs27 = grad.dot(q) - gq;
      const double rhs27 = constants->c1 * grad.squaredNorm() - constants->c2;
      if (lhs27 - rhs27 < -1e-12 * std::max(1.0, std::abs(rhs27))) fail(g5a, rhs27 - lhs27, where);
      const double lhs31 = grad.norm();
      const double rhs31 = constants->c3 * q.norm() + constants->c4;
      if (lhs31 > rhs31 * (1 + 1e-12)) fail(g5b, lhs31 - rhs31, where);
    }
  }

  AxiomReport report;
  report.checks = {g1, g2, g3, g4, g5a, g5b};
  return report;
}

CouplingModel CouplingModel::power(double gamma) {
  if (!(gamma > 0)) throw InvalidArgument("power coupling needs gamma > 0");
  return CouplingModel(CouplingKind::Power, gamma);
}

CouplingModel CouplingModel::log_shifted(double eps) {
  if (!(eps > 0)) throw InvalidArgument("log coupling needs eps > 0");
  return CouplingModel(CouplingKind::LogShifted, eps);
}

double CouplingModel::operator()(double m) const {
  switch (kind_) {
    case CouplingKind::Identity:
      return m;
    case CouplingKind::Power:
      return param_ == 2.0 ? std::max(m, 0.0) * std::max(m, 0.0) : std::pow(std::max(m, 0.0), param_);
    case CouplingKind::LogShifted:
      return std::log(std::max(m, 0.0) + param_);
  }
  return 0.0;
}

double CouplingModel::lower_bound() const {
  switch (kind_) {
    case CouplingKind::Identity:
    case CouplingKind::Power:
      return 0.0;
    case CouplingKind::LogShifted:
      return std::log(param_);
  }
  return 0.0;
}

}  // namespace mfg
