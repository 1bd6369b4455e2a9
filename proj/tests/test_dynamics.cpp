#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "varwave/diagnostics.hpp"
#include "varwave/dynamics.hpp"

using namespace varwave;

namespace {

struct Setup {
  Mesh mesh;
  DiscreteOperators ops;
  LawSet laws;
};

Setup interval_setup(int cells, const DampingLaw& damping, bool source_on,
                     double mu0 = 1.0, bool mu_const = true) {
  Setup s;
  s.mesh = build_mesh(MeshSpec::interval(1.0, cells));
  s.ops = assemble_operators(s.mesh, CoefficientField::identity(1));
  s.laws.mu = mu_const ? TimeWeight::constant(mu0) : TimeWeight::exp_decay(mu0);
  s.laws.damping = damping;
  s.laws.source = SourceLaw{2.0, source_on};
  s.laws.forcing = ForcingLaw::zero();
  return s;
}

Eigen::VectorXd sine_mode(const DiscreteOperators& ops, double amplitude) {
  Eigen::VectorXd u(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i)
    u[i] = amplitude * std::sin(std::numbers::pi * ops.coords(i, 0));
  return u;
}

}  // namespace

TEST_CASE("zero state is a fixed point") {
  for (bool source_on : {false, true}) {
    const Setup s = interval_setup(8, DampingLaw::polynomial(1.0), source_on);
    State state;
    state.u = Eigen::VectorXd::Zero(s.ops.n_free);
    state.v = Eigen::VectorXd::Zero(s.ops.n_free);
    const State next = step(state, 0.01, s.ops, s.laws);
    CHECK(next.u.norm() == 0.0);
    CHECK(next.v.norm() == 0.0);
  }
}

TEST_CASE("one conservative step preserves the quadratic energy") {
  const Setup s = interval_setup(32, DampingLaw::none(), false);
  State state;
  state.u = sine_mode(s.ops, 0.3);
  state.v = Eigen::VectorXd::Zero(s.ops.n_free);
  const double E0 = energy(s.ops, s.laws, state).E;
  const State next = step(state, 0.01, s.ops, s.laws);
  const double E1 = energy(s.ops, s.laws, next).E;
  CHECK(std::abs(E1 - E0) <= 1e-10 * std::abs(E0));
}

TEST_CASE("oversized steps against the cubic boundary term fail loudly") {
  const Setup s = interval_setup(4, DampingLaw::none(), true);
  State state;
  state.u = Eigen::VectorXd::Zero(s.ops.n_free);
  state.v = Eigen::VectorXd::Zero(s.ops.n_free);
  for (int i = 0; i < s.ops.n_free; ++i) state.u[i] = 1e2 * s.ops.coords(i, 0);
  bool newton_failure = false;
  try {
    (void)step(state, 10.0, s.ops, s.laws);
  } catch (const Error& err) {
    newton_failure = err.code() == ErrorCode::NewtonFailure;
  }
  CHECK(newton_failure);
}

TEST_CASE("long conservative run keeps the energy to 1e-8") {
  const Setup s = interval_setup(64, DampingLaw::none(), false);
  State initial;
  initial.u = sine_mode(s.ops, 0.5);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);

  RunControls controls;
  controls.T = 10.0;
  controls.dt0 = 1e-3;  // 1e4 fixed steps
  controls.grow = false;
  controls.record_every = 500;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.termination == Termination::HorizonReached);
  CHECK(traj.total_steps == 10000);
  const double E0 = traj.records.front().E;
  const double ET = traj.records.back().E;
  CHECK(std::abs(ET - E0) / std::abs(E0) <= 1e-8);
}

TEST_CASE("damped runs dissipate monotonically") {
  const Setup s = interval_setup(32, DampingLaw::polynomial(2.0), true);
  State initial;
  initial.u = sine_mode(s.ops, 0.3);
  initial.v = sine_mode(s.ops, 0.2);

  RunControls controls;
  controls.T = 5.0;
  controls.dt0 = 1e-3;
  controls.grow = false;
  controls.record_every = 20;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.termination == Termination::HorizonReached);
  for (std::size_t i = 1; i < traj.records.size(); ++i)
    CHECK(traj.records[i].E <= traj.records[i - 1].E + 1e-9);
  // Per-step boundary dissipation is nonnegative.
  for (std::size_t i = 1; i < traj.records.size(); ++i)
    CHECK(traj.records[i].dissipation_cum >=
          traj.records[i - 1].dissipation_cum - 1e-15);
}

TEST_CASE("time reversal of the conservative system") {
  // Implicit midpoint is symmetric; with v -> -v the conservative flow
  // (including the conservative boundary source) retraces itself.
  const Setup s = interval_setup(32, DampingLaw::none(), true);
  Stepper stepper(s.ops, s.laws, 1e-13, 80, 400);

  State state;
  state.u = sine_mode(s.ops, 0.4);
  state.v = Eigen::VectorXd::Zero(s.ops.n_free);
  for (int i = 0; i < s.ops.n_free; ++i)
    state.v[i] = 0.2 * std::cos(2 * std::numbers::pi * s.ops.coords(i, 0));
  const State saved = state;

  const int k = 50;
  const double dt = 1e-2;
  for (int i = 0; i < k; ++i) state = stepper.advance(state, dt).next;
  state.v = -state.v;
  for (int i = 0; i < k; ++i) state = stepper.advance(state, dt).next;
  state.v = -state.v;

  CHECK((state.u - saved.u).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, saved.u.lpNorm<Eigen::Infinity>()));
  CHECK((state.v - saved.v).lpNorm<Eigen::Infinity>() <=
        1e-8 * std::max(1.0, saved.v.lpNorm<Eigen::Infinity>()));
}

TEST_CASE("step-size collapse without amplitude growth is a step failure") {
  // Same stiff boundary state that defeats the Newton solve, but with a
  // dt_min right below dt0: the first halving collapses the step while the
  // amplitude is far from amp_max, which must be reported as StepFailure,
  // not blow-up.
  const Setup s = interval_setup(4, DampingLaw::none(), true);
  State initial;
  initial.u = Eigen::VectorXd::Zero(s.ops.n_free);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);
  for (int i = 0; i < s.ops.n_free; ++i) initial.u[i] = 1e2 * s.ops.coords(i, 0);

  RunControls controls;
  controls.T = 100.0;
  controls.dt0 = 10.0;
  controls.dt_min = 8.0;
  controls.grow = false;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.termination == Termination::StepFailure);
}

TEST_CASE("adaptive growth accelerates quiet stretches") {
  const Setup s = interval_setup(16, DampingLaw::linear(0.5), false);
  State initial;
  initial.u = sine_mode(s.ops, 0.1);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);

  RunControls controls;
  controls.T = 10.0;
  controls.dt0 = 1e-3;
  controls.grow = true;
  controls.dt_max = 0.05;
  controls.record_every = 50;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.termination == Termination::HorizonReached);
  CHECK(traj.total_steps < 10000);  // growth kicked in
}

TEST_CASE("blow-up detection on the supercritical ramp") {
  Setup s = interval_setup(32, DampingLaw::linear(1.0, 1.0), true);
  s.laws.mu = TimeWeight::constant(2.0);
  State initial;
  initial.u = Eigen::VectorXd::Zero(s.ops.n_free);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);
  for (int i = 0; i < s.ops.n_free; ++i)
    initial.u[i] = 2.1 * s.ops.coords(i, 0);

  RunControls controls;
  controls.T = 10.0;
  controls.dt0 = 1e-3;
  controls.grow = true;
  controls.record_every = 20;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.termination == Termination::BlowupDetected);
  CHECK(std::isfinite(traj.t_est));
  CHECK(traj.t_est >= traj.t_end);
  CHECK(traj.final_state.u.lpNorm<Eigen::Infinity>() > controls.amp_max);
  // Above-threshold trajectories keep growing their amplitude.
  CHECK(traj.records.back().u_max > traj.records.front().u_max);
}

TEST_CASE("boundary viscosity dissipates and stays inside the budget") {
  // eta > 0 with q = 0 and the source off: the eta term is the only sink,
  // folded into dissipation_cum so the energy budget closes exactly.
  Setup s = interval_setup(32, DampingLaw::none(), false);
  s.laws.eta = 0.1;
  State initial;
  initial.u = sine_mode(s.ops, 0.4);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);

  RunControls controls;
  controls.T = 5.0;
  controls.dt0 = 1e-3;
  controls.grow = false;
  controls.record_every = 100;
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  CHECK(traj.records.back().E < traj.records.front().E);
  CHECK(traj.records.back().dissipation_cum > 0.0);
  const double E0 = traj.records.front().E;
  double worst = 0.0;
  for (const Record& r : traj.records)
    worst = std::max(worst, std::abs(r.E + r.dissipation_cum - E0));
  CHECK(worst <= 1e-10 * std::max(1.0, std::abs(E0)));
}

TEST_CASE("2D conservative run keeps the energy") {
  const Mesh mesh = build_mesh(MeshSpec::rectangle(1.0, 1.0, 8, 8));
  const DiscreteOperators ops =
      assemble_operators(mesh, CoefficientField::identity(2));
  LawSet laws;
  laws.mu = TimeWeight::constant(1.0);
  laws.damping = DampingLaw::none();
  laws.source = SourceLaw{2.0, false};

  State initial;
  initial.u.resize(ops.n_free);
  initial.v = Eigen::VectorXd::Zero(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i)
    initial.u[i] = 0.3 * std::sin(std::numbers::pi * ops.coords(i, 0)) *
                   std::sin(std::numbers::pi * ops.coords(i, 1));

  RunControls controls;
  controls.T = 1.0;
  controls.dt0 = 2e-3;
  controls.grow = false;
  controls.record_every = 100;
  const Trajectory traj = run(ops, laws, controls, initial);
  CHECK(traj.termination == Termination::HorizonReached);
  const double drift = std::abs(traj.records.back().E - traj.records.front().E) /
                       std::abs(traj.records.front().E);
  CHECK(drift <= 1e-10);
}

TEST_CASE("2D damped run dissipates through the lumped boundary") {
  const Mesh mesh = build_mesh(
      MeshSpec::rectangle(1.0, 1.0, 6, 6, MeshSpec::Partition::Gamma1Right));
  const DiscreteOperators ops =
      assemble_operators(mesh, CoefficientField::identity(2));
  LawSet laws;
  laws.mu = TimeWeight::constant(1.0);
  laws.damping = DampingLaw::polynomial(1.0);
  laws.source = SourceLaw{2.0, true};

  State initial;
  initial.u.resize(ops.n_free);
  initial.v = Eigen::VectorXd::Zero(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i)
    initial.u[i] = 0.2 * ops.coords(i, 0) * std::sin(std::numbers::pi * ops.coords(i, 1));

  RunControls controls;
  controls.T = 2.0;
  controls.dt0 = 2e-3;
  controls.grow = false;
  controls.record_every = 20;
  const Trajectory traj = run(ops, laws, controls, initial);
  CHECK(traj.termination == Termination::HorizonReached);
  for (std::size_t i = 1; i < traj.records.size(); ++i)
    CHECK(traj.records[i].E <= traj.records[i - 1].E + 1e-9);
}

TEST_CASE("records carry the full diagnostics tuple with increasing time") {
  const Setup s = interval_setup(16, DampingLaw::linear(0.5), true);
  State initial;
  initial.u = sine_mode(s.ops, 0.2);
  initial.v = Eigen::VectorXd::Zero(s.ops.n_free);

  RunControls controls;
  controls.T = 1.0;
  controls.dt0 = 1e-2;
  controls.record_every = 3;
  controls.snapshot_times = {0.5};
  const Trajectory traj = run(s.ops, s.laws, controls, initial);
  REQUIRE(!traj.records.empty());
  for (std::size_t i = 1; i < traj.records.size(); ++i)
    CHECK(traj.records[i].t > traj.records[i - 1].t);
  for (const Record& r : traj.records) {
    CHECK(std::isfinite(r.E));
    CHECK(r.E == doctest::Approx(r.kinetic + r.elastic - r.source_term)
                     .epsilon(1e-12));
    CHECK(std::isfinite(r.N));
  }
  REQUIRE(traj.snapshots.size() == 1);
  CHECK(traj.snapshots[0].t == doctest::Approx(0.5).epsilon(0.1));
}
