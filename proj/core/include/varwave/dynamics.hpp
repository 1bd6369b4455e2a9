#ifndef VARWAVE_DYNAMICS_HPP
#define VARWAVE_DYNAMICS_HPP

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <limits>
#include <memory>
#include <vector>

#include "varwave/assembly.hpp"
#include "varwave/model.hpp"

namespace varwave {

struct State {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

/// One trajectory record: energy split, well functionals, blow-up
/// functionals and the cumulative work integrals of the energy budget.
struct Record {
  double t = 0.0;
  double dt = 0.0;
  double E = 0.0;
  double kinetic = 0.0;
  double elastic = 0.0;
  double source_term = 0.0;
  double grad_seminorm = 0.0;  // sqrt(u^T K u)
  double bdry_norm = 0.0;      // ||u||_{gamma+2, Gamma1}
  double J = 0.0;
  double I = 0.0;
  double G = 0.0;  // E1 - E (E1 = 0 until blow-up params are applied)
  double N = 0.0;  // v^T M u
  double M_fn = 0.0;
  double dissipation_cum = 0.0;  // int q(u_s) u_s + eta u_s^2 over Gamma1
  double mu_work_cum = 0.0;      // (1/2) int mu' ||grad_g u||^2
  double f_work_cum = 0.0;       // int <f, u_s>
  int newton_iters = 0;
  double u_max = 0.0;
};

struct Snapshot {
  double t = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};

enum class Termination { HorizonReached, BlowupDetected, StepFailure };

const char* termination_name(Termination t);

struct Trajectory {
  std::vector<Record> records;
  Termination termination = Termination::HorizonReached;
  double t_end = 0.0;
  double t_est = std::numeric_limits<double>::quiet_NaN();   // blow-up only
  double t_est_kappa = std::numeric_limits<double>::quiet_NaN();
  State final_state;
  std::vector<Snapshot> snapshots;
  long total_steps = 0;
  long rejected_steps = 0;
};

struct RunControls {
  double T = 1.0;
  double dt0 = 1e-3;
  double dt_min = 1e-12;
  double dt_max = std::numeric_limits<double>::infinity();
  double amp_max = 1e8;
  int record_every = 1;
  bool grow = true;  // x1.2 after 20 consecutive accepted steps
  std::vector<double> snapshot_times;
  double newton_tol = 1e-10;
  int newton_max_iters = 50;
  int max_sweeps = 200;  // outer interior/boundary sweeps per step
};

/// One implicit-midpoint step of M u'' + mu(t) K u = F + boundary terms.
/// With linear boundary laws the step is a single SPD solve; otherwise the
/// interior is solved by a prefactored SPD system and each Gamma1 node by a
/// safeguarded scalar Newton, swept until the full residual converges.
/// Throws Error(NewtonFailure) when the step cannot be resolved.
class Stepper {
public:
  Stepper(const DiscreteOperators& ops, const LawSet& laws,
          double newton_tol = 1e-10, int newton_max_iters = 50,
          int max_sweeps = 200);
  ~Stepper();
  Stepper(Stepper&&) noexcept;
  Stepper& operator=(Stepper&&) noexcept;

  struct Result {
    State next;
    int newton_iters = 0;
    double dissipation_inc = 0.0;
    double mu_work_inc = 0.0;
    double f_work_inc = 0.0;
  };

  Result advance(const State& state, double dt);

private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Convenience single step (builds a throwaway Stepper).
State step(const State& state, double dt, const DiscreteOperators& ops,
           const LawSet& laws);

/// Adaptive integration to the horizon with blow-up detection: halve dt on
/// solver failure or amplitude jumps, declare blow-up when dt collapses
/// below dt_min while |u|_max exceeds amp_max.
Trajectory run(const DiscreteOperators& ops, const LawSet& laws,
               const RunControls& controls, const State& initial);

}  // namespace varwave

#endif
