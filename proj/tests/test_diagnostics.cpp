#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "varwave/diagnostics.hpp"

using namespace varwave;

namespace {

struct Setup {
  Mesh mesh;
  DiscreteOperators ops;
  LawSet laws;
};

Setup interval_setup(int cells, const DampingLaw& damping, bool source_on,
                     bool mu_const = true) {
  Setup s;
  s.mesh = build_mesh(MeshSpec::interval(1.0, cells));
  s.ops = assemble_operators(s.mesh, CoefficientField::identity(1));
  s.laws.mu = mu_const ? TimeWeight::constant(1.0) : TimeWeight::exp_decay(1.0);
  s.laws.damping = damping;
  s.laws.source = SourceLaw{2.0, source_on};
  s.laws.forcing = ForcingLaw::zero();
  return s;
}

Trajectory synthetic_trajectory(const Eigen::VectorXd& t,
                                const Eigen::VectorXd& E) {
  Trajectory traj;
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    Record r;
    r.t = t[i];
    r.E = E[i];
    traj.records.push_back(r);
  }
  return traj;
}

}  // namespace

TEST_CASE("energy split") {
  const Setup s = interval_setup(2, DampingLaw::none(), true);
  State state;
  state.u = Eigen::VectorXd::Zero(s.ops.n_free);
  state.v = Eigen::VectorXd::Zero(s.ops.n_free);
  CHECK(energy(s.ops, s.laws, state).E == 0.0);

  // v^T M v = 2 -> E = 1.
  state.v[1] = std::sqrt(2.0 / s.ops.M[1]);
  EnergyParts parts = energy(s.ops, s.laws, state);
  CHECK(parts.kinetic == doctest::Approx(1.0));
  CHECK(parts.E == doctest::Approx(1.0));

  // u = x interpolant, v = 0, gamma = 2: E = 1/2 - 1/4.
  state.v.setZero();
  for (int i = 0; i < s.ops.n_free; ++i) state.u[i] = s.ops.coords(i, 0);
  parts = energy(s.ops, s.laws, state);
  CHECK(parts.elastic == doctest::Approx(0.5));
  CHECK(parts.source_term == doctest::Approx(0.25));
  CHECK(parts.E == doctest::Approx(0.25));
  CHECK(parts.E == doctest::Approx(parts.kinetic + parts.elastic - parts.source_term));
}

TEST_CASE("energy budget residual vanishes on reference runs") {
  SUBCASE("zero trajectory") {
    Trajectory traj = synthetic_trajectory(Eigen::VectorXd::LinSpaced(5, 0, 1),
                                           Eigen::VectorXd::Zero(5));
    const Eigen::VectorXd r = energy_identity_residual(traj);
    CHECK(r.lpNorm<Eigen::Infinity>() == 0.0);
  }
  SUBCASE("conservative run") {
    const Setup s = interval_setup(32, DampingLaw::none(), false);
    State initial;
    initial.u = Eigen::VectorXd::Zero(s.ops.n_free);
    initial.v = Eigen::VectorXd::Zero(s.ops.n_free);
    for (int i = 0; i < s.ops.n_free; ++i)
      initial.u[i] = 0.4 * std::sin(std::numbers::pi * s.ops.coords(i, 0));
    RunControls controls;
    controls.T = 2.0;
    controls.dt0 = 1e-3;
    controls.grow = false;
    controls.record_every = 50;
    const Trajectory traj = run(s.ops, s.laws, controls, initial);
    const double E0 = traj.records.front().E;
    CHECK(energy_identity_residual(traj).lpNorm<Eigen::Infinity>() <=
          1e-8 * std::max(1.0, std::abs(E0)));
  }
  SUBCASE("damped run with varying mu and forcing") {
    Setup s = interval_setup(32, DampingLaw::linear(1.0), false, false);
    Eigen::Vector2d center;
    center << 0.5, 0.0;
    s.laws.forcing = ForcingLaw::gaussian_pulse(center, 0.1, 1.0, 1.0);
    State initial;
    initial.u = Eigen::VectorXd::Zero(s.ops.n_free);
    initial.v = Eigen::VectorXd::Zero(s.ops.n_free);
    for (int i = 0; i < s.ops.n_free; ++i)
      initial.u[i] = 0.3 * std::sin(std::numbers::pi * s.ops.coords(i, 0));
    RunControls controls;
    controls.T = 3.0;
    controls.dt0 = 1e-3;
    controls.grow = false;
    controls.record_every = 100;
    const Trajectory traj = run(s.ops, s.laws, controls, initial);
    const double E0 = traj.records.front().E;
    CHECK(energy_identity_residual(traj).lpNorm<Eigen::Infinity>() <=
          1e-6 * std::max(1.0, std::abs(E0)));
  }
}

TEST_CASE("blow-up series from a constant trajectory") {
  Trajectory traj = synthetic_trajectory(Eigen::VectorXd::LinSpaced(6, 0, 1),
                                         Eigen::VectorXd::Zero(6));
  BlowupParams params;
  params.E1 = 0.5;
  params.chi_bar = 0.1;
  params.tau = 0.0;  // auto
  const BlowupSeries series = blowup_series(traj, params);
  CHECK(series.G.minCoeff() == doctest::Approx(0.5));
  CHECK(series.N.cwiseAbs().maxCoeff() == 0.0);
  CHECK(series.M[0] == doctest::Approx(std::pow(0.5, 0.9)));
  CHECK(series.tau == doctest::Approx(1.0));  // N = 0: the largest tau works

  apply_blowup_series(traj, series);
  CHECK(traj.records[2].G == doctest::Approx(0.5));
  CHECK(traj.records[2].M_fn == doctest::Approx(std::pow(0.5, 0.9)));
}

TEST_CASE("negative G aborts a certified analysis") {
  Trajectory traj = synthetic_trajectory(Eigen::VectorXd::LinSpaced(4, 0, 1),
                                         Eigen::VectorXd::Constant(4, 2.0));
  BlowupParams params;
  params.E1 = 0.5;  // E = 2 > E1 -> G < 0
  params.chi_bar = 0.1;
  bool negative_g = false;
  try {
    blowup_series(traj, params);
  } catch (const Error& err) {
    negative_g = err.code() == ErrorCode::NegativeG;
  }
  CHECK(negative_g);
  CHECK_NOTHROW(blowup_series(traj, params, false));
}

TEST_CASE("auto-tuned tau shrinks against adverse momentum") {
  const Eigen::Index n = 12;
  Eigen::VectorXd G = Eigen::VectorXd::Constant(n, 1.0);
  Eigen::VectorXd N(n);
  for (Eigen::Index i = 0; i < n; ++i) N[i] = -4.0 * static_cast<double>(i);
  const double tau = choose_tau(G, N, 0.1);
  CHECK(tau < 1.0);
  // The tuned tau keeps M(0) > 0 and M nondecreasing over the first probe.
  double prev = std::pow(G[0], 0.9) + tau * N[0];
  CHECK(prev > 0.0);
  for (Eigen::Index i = 1; i < 10; ++i) {
    const double m = std::pow(G[i], 0.9) + tau * N[i];
    CHECK(m >= prev - 1e-12);
    prev = m;
  }
}

TEST_CASE("superlinear growth certificate on the closed-form family") {
  // M(t) = (M0^{-a} - c a t)^{-1/a} with a = chi_bar/(1-chi_bar) solves
  // M' = c M^{1/(1-chi_bar)}.
  for (const double c : {0.1, 1.0}) {
    for (const double chi_bar : {0.1, 0.3}) {
      const double a = chi_bar / (1.0 - chi_bar);
      const double M0 = 0.7;
      const double t_pole = std::pow(M0, -a) / (c * a);
      const Eigen::Index n = 2000;
      Eigen::VectorXd t(n), M(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        t[i] = 0.5 * t_pole * static_cast<double>(i) / (n - 1);
        M[i] = std::pow(std::pow(M0, -a) - c * a * t[i], -1.0 / a);
      }
      const MGrowthResult result = verify_M_growth(t, M, chi_bar);
      CHECK(result.pass);
      CHECK(result.c_fit == doctest::Approx(c).epsilon(0.01));
    }
  }
}

TEST_CASE("flat series fail the growth certificate") {
  const Eigen::Index n = 40;
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0, 1);
  const Eigen::VectorXd M = Eigen::VectorXd::Constant(n, 2.0);
  const MGrowthResult result = verify_M_growth(t, M, 0.2);
  CHECK_FALSE(result.pass);
  CHECK(result.c_fit == doctest::Approx(0.0));

  bool too_few = false;
  try {
    verify_M_growth(t.head(10), M.head(10), 0.2);
  } catch (const Error& err) {
    too_few = err.code() == ErrorCode::TooFewRecords;
  }
  CHECK(too_few);
}

TEST_CASE("exponential decay fit recovers planted rates") {
  const Eigen::Index n = 400;
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0, 20);
  DecayFitOptions options;
  for (const double omega : {0.1, 1.0, 10.0}) {
    Eigen::VectorXd E(n);
    for (Eigen::Index i = 0; i < n; ++i) E[i] = 3.0 * std::exp(-omega * t[i]);
    const DecayFitResult fit = fit_decay(t, E, DecayCase::Exponential, options);
    CHECK(fit.pass);
    CHECK(fit.fitted_rate == doctest::Approx(omega).epsilon(1e-3));
    CHECK(fit.residual_r2 >= 0.999);
  }
}

TEST_CASE("polynomial decay bound calibrates at the tail start") {
  const Eigen::Index n = 500;
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0, 100);
  Eigen::VectorXd E(n);
  for (Eigen::Index i = 0; i < n; ++i) E[i] = 1.0 / (1.0 + t[i]);
  DecayFitOptions options;
  options.rho = 2.0;  // bound: E (1+t)^{2/rho} = E (1+t) = const
  const DecayFitResult fit = fit_decay(t, E, DecayCase::Polynomial, options);
  CHECK(fit.pass);
  const Eigen::Index tail = static_cast<Eigen::Index>(n * 0.4);
  CHECK(fit.calibration_constant ==
        doctest::Approx(E[tail] * (1.0 + t[tail])).epsilon(1e-6));

  // Slower-than-bound decay fails.
  for (Eigen::Index i = 0; i < n; ++i) E[i] = 1.0 / std::sqrt(1.0 + t[i]);
  CHECK_FALSE(fit_decay(t, E, DecayCase::Polynomial, options).pass);
}

TEST_CASE("general decay machinery for polynomial friction profiles") {
  // beta(s) = |s|^rho s gives F(s) = s^{rho+2}, so F^{-1}(1/t)^2 = t^{-2/(rho+2)}.
  const double rho = 1.0;
  const DampingLaw law = DampingLaw::polynomial(rho);
  for (double t : {1.0, 3.0, 10.0, 100.0, 1e4}) {
    const double numeric = F_inverse(law.beta, 1.0 / t);
    CHECK(std::abs(numeric - std::pow(1.0 / t, 1.0 / (rho + 2.0))) <= 1e-8);
  }

  const Eigen::Index n = 300;
  Eigen::VectorXd t(n), E(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    t[i] = 1.0 + 99.0 * static_cast<double>(i) / (n - 1);
    E[i] = std::pow(t[i], -2.0 / (rho + 2.0));
  }
  DecayFitOptions options;
  options.rho = rho;
  options.beta = law.beta;
  const DecayFitResult fit = fit_decay(t, E, DecayCase::General, options);
  CHECK(fit.pass);
  CHECK(fit.fitted_rate == doctest::Approx(2.0 / (rho + 2.0)).epsilon(1e-3));
}

TEST_CASE("nonpositive energy in the tail is rejected") {
  const Eigen::Index n = 50;
  const Eigen::VectorXd t = Eigen::VectorXd::LinSpaced(n, 0, 10);
  Eigen::VectorXd E = Eigen::VectorXd::Constant(n, 1.0);
  E[n - 2] = -0.1;
  bool nonpositive = false;
  try {
    fit_decay(t, E, DecayCase::Exponential, DecayFitOptions{});
  } catch (const Error& err) {
    nonpositive = err.code() == ErrorCode::NonpositiveEnergy;
  }
  CHECK(nonpositive);
}
