#pragma once

// A priori estimate quantities evaluated on a discrete solution (u, m).
// Constants in the underlying inequalities are not known; the quantities are
// reported and their boundedness is checked under grid refinement.

#include "mfg/grid.hpp"
#include "mfg/problem.hpp"

namespace mfg {

struct DiagnosticsOptions {
  double alpha_m = 1.5;      ///< exponent for ||m||_{L^alpha(Q)}, in [1, 2)
  double alpha_grad = 1.25;  ///< exponent for ||D_h m||_{L^alpha(Q)}, in [1, 4/3)
  double eta = -1;           ///< entropy split parameter in (0, nu); negative selects nu / 2
  double eps = 1e-16;        ///< regularization m + eps inside logarithms
};

struct DiagnosticsReport {
  double lower_bound_margin = 0;
  double duality_residual = 0;
  double energy_mgq2 = 0;
  double energy_g = 0;
  double energy_mFm = 0;
  double entropy_max = 0;
  double sqrt_m_h1_sum = 0;
  double m_lalpha = 0;
  double dhm_lalpha = 0;
  /// H^-1 surrogate for the W^{-1,alpha} time-derivative bound.
  double dtm_hminus1 = 0;
  double kh_worst_mass_drift = 0;
  double kh_worst_min = 0;
};

/// min over i, j, n of u^n_{ij} - (min u0 - T (F_lower - max_x H(x, 0))^-).
double lower_bound_margin(const Trajectory& u, const DiscreteProblem& problem);

/// Both sides of the energy identity obtained by testing the Bellman equation
/// against m - max m_T and the Fokker-Planck equation against
/// u - n dt F(max m_T).
struct DualityTerms {
  double lhs = 0;
  double rhs = 0;
};
DualityTerms duality_terms(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem);

/// |lhs - rhs| / max(1, |rhs|).
double duality_residual(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem);

struct EnergySums {
  double mgq2 = 0;  ///< h^2 dt sum m^k |g_q(x, [grad u^{k+1}])|^2
  double g_sum = 0; ///< h^2 dt sum g(x, [grad u^{k+1}])
  double mFm = 0;   ///< h^2 dt sum m^k F(m^k)
};
EnergySums energy_sums(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem);

struct EntropyReport {
  double entropy_max = 0;        ///< max_n h^2 sum mhat |ln mhat|
  double sqrt_m_h1_sum = 0;      ///< dt sum_{k<N_T} |sqrt(mhat^k)|_{H^1}^2
  double weighted_h1 = 0;        ///< (nu - eta) * sqrt_m_h1_sum
  double terminal_entropy = 0;   ///< h^2 sum mhat^{N_T} |ln mhat^{N_T}|
  double energy_term = 0;        ///< mgq2 / (2 eta)
  /// Smallest constant C making lhs <= C + terminal_entropy + energy_term hold.
  double constant_needed = 0;
};
EntropyReport entropy_report(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem, double eta,
                             double eps = 1e-16);

struct CompactnessReport {
  double m_lalpha = 0;     ///< dt sum_{k<N_T} ||m^k||_{L^alpha}^alpha
  double dhm_lalpha = 0;   ///< dt sum_{k<N_T} |m^k|_{W^{1,alpha}}^alpha
  double dtm_hminus1 = 0;  ///< dt sum_{k<N_T} ||(m^{k+1} - m^k)/dt||_{H^-1}^2
};
CompactnessReport compactness_report(const Trajectory& m, double alpha_m, double alpha_grad);

struct KhMembership {
  double worst_mass_drift = 0;
  double worst_min = 0;
};
KhMembership kh_membership(const Trajectory& m);

DiagnosticsReport diagnose(const Trajectory& u, const Trajectory& m, const DiscreteProblem& problem,
                           const DiagnosticsOptions& opts = {});

}  // namespace mfg
