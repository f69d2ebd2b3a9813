#pragma once

// Numerical Hamiltonians g(x, q1, q2, q3, q4) acting on the four one-sided
// differences of a grid function, and the local couplings F(m).

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

using PotentialSampler = std::function<double(double x1, double x2)>;

/// Potential term of the Hamiltonian: either an analytic sampler, or fixed
/// nodal samples valid on exactly one grid size.
class Potential {
 public:
  Potential() : sampler_([](double, double) { return 0.0; }) {}
  explicit Potential(PotentialSampler sampler) : sampler_(std::move(sampler)) {}
  explicit Potential(GridFunction samples) : samples_(std::move(samples)) {}

  static Potential zero() { return Potential(); }
  /// a (cos(2 pi x1) + cos(2 pi x2)).
  static Potential cos2(double amplitude = 1.0);

  GridFunction on_grid(int n) const;

 private:
  PotentialSampler sampler_;
  std::optional<GridFunction> samples_;
};

/// Constants of the growth conditions
///   g_q . q - g >= c1 |g_q|^2 - c2   and   |g_q| <= c3 |q| + c4.
struct GrowthConstants {
  double c1 = 0, c2 = 0, c3 = 0, c4 = 0;
};

enum class HamiltonianKind { PowerUpwind, Custom };

/// Continuous description of a numerical Hamiltonian. The x-dependence
/// enters only through the potential value at the node.
class HamiltonianModel {
 public:
  using ValueFn = std::function<double(double potential, const Vec4& q)>;
  using GradientFn = std::function<Vec4(double potential, const Vec4& q)>;
  /// H(x, p) for the consistency check; receives the potential value and p.
  using ContinuousFn = std::function<double(double potential, double p1, double p2)>;

  /// g(x, q) = H(x) + ((q1^-)^2 + (q2^+)^2 + (q3^-)^2 + (q4^+)^2)^{beta/2}, beta in (1, 2].
  static HamiltonianModel power_upwind(double beta, Potential potential = Potential::zero());

  static HamiltonianModel custom(ValueFn value, GradientFn gradient, Potential potential = Potential::zero(),
                                 ContinuousFn continuous = {}, std::optional<GrowthConstants> constants = std::nullopt);

  HamiltonianKind kind() const { return kind_; }
  double beta() const { return beta_; }
  const Potential& potential() const { return potential_; }
  const std::optional<GrowthConstants>& declared_constants() const { return constants_; }

  double value(double potential, const Vec4& q) const;
  Vec4 gradient(double potential, const Vec4& q) const;
  /// H(x, p); empty when a custom model did not provide it.
  std::optional<double> continuous(double potential, double p1, double p2) const;

  /// Growth constants with c2 adjusted to the sampled potential.
  std::optional<GrowthConstants> constants_for(const GridFunction& potential) const;

 private:
  HamiltonianKind kind_ = HamiltonianKind::PowerUpwind;
  double beta_ = 2.0;
  Potential potential_;
  ValueFn value_;
  GradientFn gradient_;
  ContinuousFn continuous_;
  std::optional<GrowthConstants> constants_;
};

/// Largest c1 with (beta - 1) G + 1 >= c1 beta^2 G^{2(beta-1)/beta} for all G >= 0,
/// found on a logarithmic grid of G values.
double fit_growth_c1(double beta);

/// A Hamiltonian model bound to one grid. The potential is sampled once.
class NumericalHamiltonian {
 public:
  NumericalHamiltonian(HamiltonianModel model, int n);

  int grid_size() const { return potential_.size(); }
  const HamiltonianModel& model() const { return model_; }
  const GridFunction& potential() const { return potential_; }
  const std::optional<GrowthConstants>& constants() const { return constants_; }

  double eval(NodeIndex x, const Vec4& q) const { return model_.value(potential_(x), q); }
  Vec4 grad(NodeIndex x, const Vec4& q) const { return model_.gradient(potential_(x), q); }

  /// g(x_{i,j}, q_{i,j}) for every node, flat order.
  Eigen::VectorXd values(const VectorField4& q) const;
  /// One row of partial derivatives dg/dq_k per node, flat order.
  Eigen::Matrix<double, Eigen::Dynamic, 4> gradients(const VectorField4& q) const;

  /// max over nodes of g(x_{i,j}, 0).
  double max_at_zero_gradient() const;

 private:
  HamiltonianModel model_;
  GridFunction potential_;
  std::optional<GrowthConstants> constants_;
};

inline double eval_g(const NumericalHamiltonian& h, NodeIndex x, const Vec4& q) { return h.eval(x, q); }
inline Vec4 grad_g(const NumericalHamiltonian& h, NodeIndex x, const Vec4& q) { return h.grad(x, q); }

struct AxiomCheck {
  std::string name;
  bool passed = true;
  /// Failures of non-enforced checks are reported but do not fail the model.
  bool enforced = true;
  bool skipped = false;
  double worst = 0;
  std::string witness;
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;

  bool all_passed() const;
  const AxiomCheck& at(const std::string& name) const;
};

/// Randomized check of monotonicity (g1), consistency (g2), regularity (g3),
/// convexity (g4) and the growth conditions (g5).
AxiomReport validate_axioms(const NumericalHamiltonian& h, int sample_count, std::uint64_t seed);

enum class CouplingKind { Identity, Power, LogShifted };

/// Local coupling F(m), continuous on R_+ and bounded below.
class CouplingModel {
 public:
  static CouplingModel identity() { return CouplingModel(CouplingKind::Identity, 1.0); }
  static CouplingModel power(double gamma);
  static CouplingModel log_shifted(double eps);

  CouplingKind kind() const { return kind_; }
  double parameter() const { return param_; }

  /// Negative arguments are evaluated at 0 for the power and log couplings.
  double operator()(double m) const;
  double lower_bound() const;
  bool nondecreasing() const { return true; }

 private:
  CouplingModel(CouplingKind kind, double param) : kind_(kind), param_(param) {}
  CouplingKind kind_;
  double param_;
};

}  // namespace mfg
