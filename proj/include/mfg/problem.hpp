#pragma once

#include <functional>

#include "mfg/grid.hpp"
#include "mfg/hamiltonian.hpp"

namespace mfg {

using FieldSampler = std::function<double(double x1, double x2)>;

/// Continuous mean field game data on the unit torus: forward Bellman
/// equation with initial cost u0, backward Fokker-Planck equation with
/// terminal density m_T.
struct ProblemSpec {
  double nu = 1.0;
  double horizon = 1.0;
  HamiltonianModel hamiltonian = HamiltonianModel::power_upwind(2.0);
  CouplingModel coupling = CouplingModel::identity();
  FieldSampler u0 = [](double, double) { return 0.0; };
  FieldSampler m_T = [](double, double) { return 1.0; };

  void validate() const;
};

/// Problem data bound to an n_h x n_h grid with n_t time steps.
class DiscreteProblem {
 public:
  /// Samples u0 at the nodes and cell-averages m_T.
  DiscreteProblem(const ProblemSpec& spec, int n_h, int n_t);

  DiscreteProblem(double nu, double horizon, int n_t, NumericalHamiltonian hamiltonian, CouplingModel coupling,
                  GridFunction u0, GridFunction m_T);

  double nu() const { return nu_; }
  double horizon() const { return horizon_; }
  int steps() const { return n_t_; }
  double dt() const { return horizon_ / n_t_; }
  int grid_size() const { return u0_.size(); }
  double h() const { return 1.0 / grid_size(); }

  const NumericalHamiltonian& hamiltonian() const { return hamiltonian_; }
  const CouplingModel& coupling() const { return coupling_; }
  const GridFunction& u0() const { return u0_; }
  const GridFunction& m_T() const { return m_T_; }

  /// F applied pointwise.
  GridFunction coupling_of(const GridFunction& m) const;

 private:
  double nu_;
  double horizon_;
  int n_t_;
  NumericalHamiltonian hamiltonian_;
  CouplingModel coupling_;
  GridFunction u0_;
  GridFunction m_T_;
};

}  // namespace mfg
