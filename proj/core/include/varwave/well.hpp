#ifndef VARWAVE_WELL_HPP
#define VARWAVE_WELL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>

#include "varwave/assembly.hpp"
#include "varwave/dynamics.hpp"
#include "varwave/model.hpp"

namespace varwave {

/// Potential-well constants: best trace constant K0, well radius lambda0 and
/// depth d0 = j(lambda0).
struct WellConstants {
  double K0 = 0.0;
  double lambda0 = 0.0;
  double d0 = 0.0;
  double gamma = 0.0;
  double mu0 = 0.0;
};

/// Trace Rayleigh ratio R(u) = ||u||_{gamma+2, Gamma1} / sqrt(u^T K u).
/// Scale invariant; 0 for u = 0.
double rayleigh_trace_ratio(const DiscreteOperators& ops, double gamma,
                            const Eigen::VectorXd& u);

/// sup_u R(u) by projected gradient ascent on the ellipsoid u^T K u = 1,
/// from a deterministic trace-load start plus `restarts` random starts.
double estimate_K0(const DiscreteOperators& ops, double gamma,
                   int restarts = 16, double tol = 1e-10,
                   std::uint64_t seed = 0);

/// lambda0 = (mu0 / K0^{gamma+2})^{1/gamma},
/// d0 = gamma mu0 lambda0^2 / (2(gamma+2)).
WellConstants well_constants(double K0, double mu0, double gamma);

/// j(lambda) = (mu0/2) lambda^2 - K0^{gamma+2} lambda^{gamma+2} / (gamma+2).
double j_profile(const WellConstants& constants, double lambda);

/// (J, I) with J = (mu0/2) u^T K u - ||u||^{gamma+2}_{gamma+2,Gamma1}/(gamma+2)
/// and I = mu0 u^T K u - ||u||^{gamma+2}_{gamma+2,Gamma1}.
std::pair<double, double> functionals_J_I(const DiscreteOperators& ops,
                                          double mu0, double gamma,
                                          const Eigen::VectorXd& u);

struct Classification {
  Regime regime = Regime::Indeterminate;
  double E0 = 0.0;
  double grad_norm = 0.0;
  double lambda0 = 0.0;
  double d0 = 0.0;
  double bound_215 = 0.0;     // smallness threshold on beta^{-1}(1)
  double beta_inv_1 = 0.0;
  bool cond_215 = false;
  bool has_window = false;
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::string note;
};

Classification classify_initial_data(const Eigen::VectorXd& u0,
                                     const Eigen::VectorXd& u1,
                                     const DiscreteOperators& ops,
                                     const LawSet& laws,
                                     const WellConstants& constants);

enum class TrapMode { Below, Above };

struct TrapReport {
  bool pass = true;
  int first_violation = -1;
  double worst_margin = 0.0;  // min over records of the signed margin
};

/// Checks sqrt(u^T K u) < lambda0 (Below) or > lambda0 (Above) at every
/// record of the trajectory.
TrapReport trapping_monitor(const Trajectory& trajectory,
                            const WellConstants& constants, TrapMode mode);

/// Random initial data strictly inside the well: ||grad_g u0|| <= 0.9 lambda0
/// and E(0) < 0.9 d0 (rejection-shrunk in the gradient radius).  Used by the
/// trapping experiments.
InitialData random_well_data(const DiscreteOperators& ops, const LawSet& laws,
                             const WellConstants& constants,
                             std::uint64_t seed);

}  // namespace varwave

#endif
