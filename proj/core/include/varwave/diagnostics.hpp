#ifndef VARWAVE_DIAGNOSTICS_HPP
#define VARWAVE_DIAGNOSTICS_HPP

#include <Eigen/Dense>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "varwave/dynamics.hpp"
#include "varwave/model.hpp"
#include "varwave/well.hpp"

namespace varwave {

/// Energy split at a state: E = kinetic + elastic - source_term with
/// kinetic = v^T M v / 2, elastic = mu(t) u^T K u / 2,
/// source_term = ||u||^{gamma+2}_{gamma+2,Gamma1} / (gamma+2).
struct EnergyParts {
  double E = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double source_term = 0.0;
  double grad_seminorm = 0.0;
  double bdry_norm = 0.0;
};

EnergyParts energy(const DiscreteOperators& ops, const LawSet& laws,
                   const State& state);

/// Residual of the energy budget at each record:
/// r_n = E(t_n) + dissipation_cum - mu_work_cum - f_work_cum - E(0).
Eigen::VectorXd energy_identity_residual(const Trajectory& trajectory);

struct BlowupSeries {
  Eigen::VectorXd t;
  Eigen::VectorXd G;  // E1 - E
  Eigen::VectorXd N;  // v^T M u
  Eigen::VectorXd M;  // G^{1-chi_bar} + tau N
  double tau = 0.0;
};

/// Largest tau in {2^-k} with M(0) > 0 and M nondecreasing over the first
/// 10 records.
double choose_tau(const Eigen::VectorXd& G, const Eigen::VectorXd& N,
                  double chi_bar);

/// G/N/M series from the trajectory records.  params.tau == 0 auto-tunes.
/// In certified mode a record with G <= 0 throws Error(NegativeG): the
/// threshold E1 is misconfigured for a blow-up certificate.
BlowupSeries blowup_series(const Trajectory& trajectory,
                           const BlowupParams& params, bool certified = true);

/// Copies G/N/M (and the resolved tau) into the trajectory records so the
/// timeseries file carries them.
void apply_blowup_series(Trajectory& trajectory, const BlowupSeries& series);

struct MGrowthResult {
  double c_fit = 0.0;  // min over records of M' / M^{1/(1-chi_bar)}
  bool pass = false;
};

/// Central-difference check of M' >= c M^{1/(1-chi_bar)}; needs >= 30
/// records with positive M.
MGrowthResult verify_M_growth(const Eigen::VectorXd& t,
                              const Eigen::VectorXd& M, double chi_bar);

enum class DecayCase { Exponential, Polynomial, General };

const char* decay_case_name(DecayCase c);

struct DecayFitResult {
  DecayCase decay_case = DecayCase::Exponential;
  double fitted_rate = 0.0;          // omega (case 1) or log-log slope info
  double calibration_constant = 0.0;
  std::pair<double, double> tail_window = {0.0, 0.0};
  bool pass = false;
  double residual_r2 = 0.0;
};

struct DecayFitOptions {
  double tail_fraction = 0.6;  // fit over the last fraction of the records
  double rho = 1.0;            // cases 2 and 3
  std::function<double(double)> beta;  // case 3: F(s) = s beta(s)
  double bound_slack = 1.05;   // upper-bound semantics for cases 2/3
};

/// Tail fit of the decay law: exponential regression (case 1) or
/// calibrate-then-bound against the theorem's envelope (cases 2/3).
DecayFitResult fit_decay(const Eigen::VectorXd& t, const Eigen::VectorXd& E,
                         DecayCase decay_case, const DecayFitOptions& options);

/// Inverse of F(s) = s beta(s) on (0, 1] by monotone bisection.
double F_inverse(const std::function<double(double)>& beta, double y,
                 int iterations = 100);

}  // namespace varwave

#endif
