#include "mfg/problem.hpp"

#include <cmath>

#include "mfg/fokker_planck.hpp"

namespace mfg {

void ProblemSpec::validate() const {
  if (!(nu > 0) || !std::isfinite(nu)) throw InvalidArgument("nu must be positive");
  if (!(horizon > 0) || !std::isfinite(horizon)) throw InvalidArgument("horizon T must be positive");
  if (!u0 || !m_T) throw InvalidArgument("u0 and m_T samplers are required");
}

DiscreteProblem::DiscreteProblem(const ProblemSpec& spec, int n_h, int n_t)
    : DiscreteProblem((spec.validate(), spec.nu), spec.horizon, n_t, NumericalHamiltonian(spec.hamiltonian, n_h), spec.coupling,
                      GridFunction::sample(n_h, spec.u0), cell_average_density(n_h, spec.m_T)) {}

DiscreteProblem::DiscreteProblem(double nu, double horizon, int n_t, NumericalHamiltonian hamiltonian,
                                 CouplingModel coupling, GridFunction u0, GridFunction m_T)
    : nu_(nu),
      horizon_(horizon),
      n_t_(n_t),
      hamiltonian_(std::move(hamiltonian)),
      coupling_(coupling),
      u0_(std::move(u0)),
      m_T_(std::move(m_T)) {
  if (!(nu_ > 0)) throw InvalidArgument("nu must be positive");
  if (!(horizon_ > 0)) throw InvalidArgument("horizon T must be positive");
  if (n_t_ < 1) throw InvalidArgument("n_t must be positive");
  u0_.check_same(m_T_);
  if (hamiltonian_.grid_size() != u0_.size()) throw InvalidArgument("Hamiltonian bound to a different grid");
  if (!u0_.values().allFinite()) throw InvalidArgument("u0 must be finite");
}

GridFunction DiscreteProblem::coupling_of(const GridFunction& m) const {
  GridFunction out(m.size());
  const auto in = m.flat();
  auto o = out.flat();
  for (Eigen::Index k = 0; k < in.size(); ++k) o[k] = coupling_(in[k]);
  return out;
}

}  // namespace mfg
