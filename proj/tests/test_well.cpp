#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "varwave/well.hpp"

using namespace varwave;

namespace {

DiscreteOperators interval_ops(int cells, double coeff = 1.0) {
  const Mesh mesh = build_mesh(MeshSpec::interval(1.0, cells));
  if (coeff == 1.0)
    return assemble_operators(mesh, CoefficientField::identity(1));
  Eigen::VectorXd d(1);
  d << coeff;
  return assemble_operators(mesh, CoefficientField::diagonal(d));
}

LawSet basic_laws(double gamma, double rho) {
  LawSet laws;
  laws.mu = TimeWeight::constant(1.0);
  laws.damping = rho > 0 ? DampingLaw::polynomial(rho) : DampingLaw::linear(1.0);
  laws.source = SourceLaw{gamma, true};
  laws.forcing = ForcingLaw::zero();
  return laws;
}

}  // namespace

TEST_CASE("trace constant on the unit interval") {
  // |u(1)| = |int_0^1 u'| <= ||u'||_2 with equality at u = x, so K0 = 1 for
  // any gamma; scaling A by 4 scales K0 by 1/2.
  const DiscreteOperators ops = interval_ops(64);
  CHECK(estimate_K0(ops, 2.0, 8, 1e-10, 1) == doctest::Approx(1.0).epsilon(1e-3));
  CHECK(estimate_K0(ops, 1.0, 8, 1e-10, 1) == doctest::Approx(1.0).epsilon(1e-3));

  const DiscreteOperators ops4 = interval_ops(64, 4.0);
  CHECK(estimate_K0(ops4, 2.0, 8, 1e-10, 1) == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("ascent matches a dense angular search on two dofs") {
  const DiscreteOperators ops = interval_ops(2);
  REQUIRE(ops.n_free == 2);
  const double gamma = 2.0;

  // Parametrize the K-unit ellipse through the Cholesky factor and scan.
  Eigen::Matrix2d K = Eigen::MatrixXd(ops.K);
  const Eigen::Matrix2d L = K.llt().matrixL();
  const Eigen::Matrix2d Linv_t = L.transpose().inverse();
  double best = 0.0;
  const int n = 2'000'000;
  for (int i = 0; i < n; ++i) {
    const double theta = 2.0 * std::numbers::pi * i / n;
    Eigen::Vector2d y(std::cos(theta), std::sin(theta));
    const Eigen::VectorXd u = Linv_t * y;  // u^T K u = 1
    best = std::max(best, boundary_norm(ops, u, gamma + 2.0));
  }
  const double ascent = estimate_K0(ops, gamma, 8, 1e-12, 3);
  CHECK(ascent == doctest::Approx(best).epsilon(1e-6));
  CHECK(ascent + 1e-9 >= best);  // sampling cannot beat the ascent maximum
}

TEST_CASE("rayleigh ratio is scale invariant") {
  const DiscreteOperators ops = interval_ops(16);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 50; ++k) {
    Eigen::VectorXd u(ops.n_free);
    for (int i = 0; i < ops.n_free; ++i) u[i] = normal(rng);
    const double r = rayleigh_trace_ratio(ops, 2.0, u);
    for (double c : {-3.0, 0.5, 40.0}) {
      CHECK(rayleigh_trace_ratio(ops, 2.0, c * u) ==
            doctest::Approx(r).epsilon(1e-12));
    }
  }
  CHECK(rayleigh_trace_ratio(ops, 2.0, Eigen::VectorXd::Zero(ops.n_free)) == 0.0);
}

TEST_CASE("estimate stabilizes under refinement") {
  const double k16 = estimate_K0(interval_ops(16), 2.0, 8, 1e-10, 1);
  const double k32 = estimate_K0(interval_ops(32), 2.0, 8, 1e-10, 1);
  const double k64 = estimate_K0(interval_ops(64), 2.0, 8, 1e-10, 1);
  CHECK(std::abs(k32 - k64) <= std::abs(k16 - k32) + 1e-9);
}

TEST_CASE("no boundary dofs is an error") {
  // Right end clamped, left end free-but-unsampled: Gamma1 on the left.
  const Mesh mesh =
      build_mesh(MeshSpec::interval(1.0, 8, MeshSpec::Partition::Gamma1Left));
  DiscreteOperators ops = assemble_operators(mesh, CoefficientField::identity(1));
  ops.B.setZero();
  ops.gamma1_dofs.clear();
  CHECK_THROWS_AS(estimate_K0(ops, 2.0), Error);
}

TEST_CASE("well constants from the closed formulas") {
  WellConstants c = well_constants(1.0, 1.0, 2.0);
  CHECK(c.lambda0 == doctest::Approx(1.0));
  CHECK(c.d0 == doctest::Approx(0.25));

  c = well_constants(1.0, 2.0, 2.0);
  CHECK(c.lambda0 == doctest::Approx(std::sqrt(2.0)));
  CHECK(c.d0 == doctest::Approx(1.0));

  c = well_constants(2.0, 1.0, 1.0);
  CHECK(c.lambda0 == doctest::Approx(0.125));
  CHECK(c.d0 == doctest::Approx(1.0 / 384.0).epsilon(1e-6));
}

TEST_CASE("potential profile") {
  const WellConstants c = well_constants(1.0, 1.0, 2.0);
  CHECK(j_profile(c, 0.0) == 0.0);
  CHECK(j_profile(c, 1.0) == doctest::Approx(0.25));
  CHECK(j_profile(c, c.lambda0) == doctest::Approx(c.d0).epsilon(1e-12));

  // j(lambda0) = d0 and j'(lambda0) = 0 across random constants.
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uni(0.2, 3.0);
  for (int k = 0; k < 200; ++k) {
    const double gamma = 0.3 + 1.7 * std::uniform_real_distribution<double>(0, 1)(rng);
    const WellConstants w = well_constants(uni(rng), uni(rng), gamma);
    CHECK(j_profile(w, w.lambda0) == doctest::Approx(w.d0).epsilon(1e-12));
    const double h = 1e-6 * std::max(1.0, w.lambda0);
    const double fd =
        (j_profile(w, w.lambda0 + h) - j_profile(w, w.lambda0 - h)) / (2 * h);
    CHECK(std::abs(fd) <= 1e-6 * std::max(1.0, w.d0 / std::max(w.lambda0, 1e-6)));
  }
}

TEST_CASE("well functionals and their algebraic link") {
  const DiscreteOperators ops = interval_ops(32);
  const double mu0 = 1.0, gamma = 2.0;

  auto [J0, I0] = functionals_J_I(ops, mu0, gamma, Eigen::VectorXd::Zero(ops.n_free));
  CHECK(J0 == 0.0);
  CHECK(I0 == 0.0);

  Eigen::VectorXd u(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i) u[i] = ops.coords(i, 0);
  auto [J, I] = functionals_J_I(ops, mu0, gamma, u);
  CHECK(J == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(I == doctest::Approx(0.0).epsilon(1e-12));

  auto [J2, I2] = functionals_J_I(ops, mu0, gamma, (2.0 * u).eval());
  CHECK(J2 == doctest::Approx(-2.0).epsilon(1e-12));
  CHECK(I2 == doctest::Approx(-12.0).epsilon(1e-12));

  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int k = 0; k < 100; ++k) {
    Eigen::VectorXd w(ops.n_free);
    for (int i = 0; i < ops.n_free; ++i) w[i] = normal(rng);
    auto [Jw, Iw] = functionals_J_I(ops, mu0, gamma, w);
    const double link = (gamma + 2.0) * Jw -
                        0.5 * mu0 * gamma * grad_energy_seminorm(ops, w);
    CHECK(Iw == doctest::Approx(link).epsilon(1e-12));
  }
}

TEST_CASE("initial data classification") {
  const DiscreteOperators ops = interval_ops(32);
  const WellConstants c = well_constants(1.0, 1.0, 2.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(ops.n_free);

  SUBCASE("rest data sits in the well") {
    const Classification cls =
        classify_initial_data(zero, zero, ops, basic_laws(2.0, 1.0), c);
    CHECK(cls.regime == Regime::PotentialWell);
  }
  SUBCASE("strong damping is global regardless of data") {
    Eigen::VectorXd big = zero;
    big.setConstant(10.0);
    const Classification cls =
        classify_initial_data(big, zero, ops, basic_laws(2.0, 2.0), c);
    CHECK(cls.regime == Regime::GlobalUnconditional);
  }
  SUBCASE("ramp data beyond the well with small friction is a candidate") {
    LawSet laws = basic_laws(2.0, 0.0);
    laws.mu = TimeWeight::constant(2.0);
    laws.damping = DampingLaw::linear(1.0, 1.0);
    const WellConstants c2 = well_constants(1.0, 2.0, 2.0);
    Eigen::VectorXd u0(ops.n_free);
    for (int i = 0; i < ops.n_free; ++i) u0[i] = 2.1 * ops.coords(i, 0);
    const Classification cls = classify_initial_data(u0, zero, ops, laws, c2);
    CHECK(cls.E0 == doctest::Approx(-0.452025));
    CHECK(cls.E0 > -1.0);
    CHECK(cls.grad_norm > c2.lambda0);
    CHECK(cls.cond_215);
    CHECK(cls.regime == Regime::BlowupCandidate);
    CHECK(cls.has_window);
  }
}

TEST_CASE("trapping monitor flags the first violating record") {
  const WellConstants c = well_constants(1.0, 1.0, 2.0);
  Trajectory traj;
  for (int i = 0; i < 5; ++i) {
    Record r;
    r.t = i;
    r.grad_seminorm = 0.0;
    traj.records.push_back(r);
  }
  CHECK(trapping_monitor(traj, c, TrapMode::Below).pass);

  traj.records[3].grad_seminorm = c.lambda0 + 0.1;
  const TrapReport report = trapping_monitor(traj, c, TrapMode::Below);
  CHECK_FALSE(report.pass);
  CHECK(report.first_violation == 3);

  CHECK_FALSE(trapping_monitor(traj, c, TrapMode::Above).pass);
}

TEST_CASE("random well data respects both entry conditions") {
  const DiscreteOperators ops = interval_ops(32);
  const LawSet laws = basic_laws(2.0, 2.0);
  const WellConstants c = well_constants(estimate_K0(ops, 2.0, 8, 1e-10, 1),
                                         1.0, 2.0);
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const InitialData data = random_well_data(ops, laws, c, seed);
    const double grad = std::sqrt(grad_energy_seminorm(ops, data.u0));
    CHECK(grad <= 0.9 * c.lambda0 * (1 + 1e-12));
    const double gamma = laws.source.gamma;
    const double src =
        std::pow(boundary_norm(ops, data.u0, gamma + 2.0), gamma + 2.0) /
        (gamma + 2.0);
    const double E0 = 0.5 * data.u1.dot(ops.M.cwiseProduct(data.u1)) +
                      0.5 * grad_energy_seminorm(ops, data.u0) - src;
    CHECK(E0 < 0.9 * c.d0);
  }
}
