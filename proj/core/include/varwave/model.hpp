#ifndef VARWAVE_MODEL_HPP
#define VARWAVE_MODEL_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "varwave/common.hpp"

namespace varwave {

struct Mesh;
struct DiscreteOperators;
struct WellConstants;

// ---------------------------------------------------------------------------
// Scalar laws
// ---------------------------------------------------------------------------

/// Time weight mu(t) in front of the elliptic operator: mu(t) >= mu0 > 0,
/// mu'(t) <= 0.
struct TimeWeight {
  double mu0 = 1.0;
  std::function<double(double)> mu;
  std::function<double(double)> mu_prime;
  bool is_constant = true;

  static TimeWeight constant(double mu0);
  /// mu(t) = mu0 * (1 + e^{-t}); exercises the mu' term of the energy budget.
  static TimeWeight exp_decay(double mu0);
};

/// Boundary friction q with growth exponent rho beyond |s| = 1 and a
/// near-zero profile described by the monotone odd witness beta on [-1, 1].
///
/// Built-in families keep q continuous at |s| = 1 by using the tail
/// q(s) = q(1) |s|^rho s, so c3 = c4 = q(1).  The stored beta is the largest
/// witness compatible with the two-sided bounds
///   |beta(s)| <= |q(s)| <= |beta^{-1}(s)|  (|s| <= 1),
/// which for slopes/scales > 1 is smaller than q itself (beta^{-1}(1) >= 1
/// for every admissible law; that value feeds the blow-up smallness test).
struct DampingLaw {
  enum class Family { None, Linear, Polynomial, Flat };

  Family family = Family::None;
  double rho = 0.0;
  double c3 = 0.0;
  double c4 = 0.0;
  double slope = 0.0;  // q-scale: linear slope, or polynomial/flat prefactor
  std::function<double(double)> beta;
  std::function<double(double)> beta_inv;
  double beta_inverse_at_1 = 0.0;
  std::optional<std::pair<double, double>> linear_constants;  // (c7, c8)

  static DampingLaw none();
  /// q(s) = a s for |s| <= 1, a |s|^rho s beyond. rho = 0 gives a globally
  /// linear law.
  static DampingLaw linear(double a, double rho = 0.0);
  /// q(s) = scale |s|^rho s everywhere (beta(s) = s^{rho+1} profile).
  static DampingLaw polynomial(double rho, double scale = 1.0);
  /// beta(s) = scale * s * exp(1 - 1/s^2): flat (all derivatives vanish) at
  /// zero; requires scale <= 1.
  static DampingLaw flat(double rho, double scale = 1.0);

  bool is_none() const { return family == Family::None; }
  /// Globally linear boundary friction (enables the exact linear step path).
  bool globally_linear() const {
    return family == Family::None || (family == Family::Linear && rho == 0.0);
  }
};

/// q(s): beta-branch for |s| <= 1, q(1)|s|^rho s branch beyond.
double eval_damping(const DampingLaw& law, double s);
/// dq/ds, used by the per-node Newton solves.
double eval_damping_derivative(const DampingLaw& law, double s);

/// Boundary source h(u) = |u|^gamma u. `enabled` turns the term off for
/// conservative reference problems; gamma keeps driving the well functionals.
struct SourceLaw {
  double gamma = 2.0;
  bool enabled = true;
};

double eval_source(const SourceLaw& law, double u);
double eval_source_derivative(const SourceLaw& law, double u);

/// Interior forcing f(x, t).
struct ForcingLaw {
  enum class Mode { Zero, GaussianPulse };
  Mode mode = Mode::Zero;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double width = 0.1;
  double amplitude = 1.0;
  double decay_rate = 1.0;

  static ForcingLaw zero();
  static ForcingLaw gaussian_pulse(const Eigen::Vector2d& center, double width,
                                   double amplitude, double decay_rate);

  bool is_zero() const { return mode == Mode::Zero; }
  double eval(const Eigen::Ref<const Eigen::VectorXd>& x, double t) const;
};

/// Full parameter pack of the problem's scalar laws.
struct LawSet {
  TimeWeight mu;
  DampingLaw damping;
  SourceLaw source;
  ForcingLaw forcing;
  double eta = 0.0;  // optional boundary viscosity of the Galerkin system

  /// True when the boundary terms are linear in (u, v): the implicit step
  /// then reduces to a single SPD solve.
  bool linear_boundary() const {
    return damping.globally_linear() && !source.enabled;
  }
};

// ---------------------------------------------------------------------------
// Parameter algebra of the blow-up theorem
// ---------------------------------------------------------------------------

/// Floor on the damping growth rho imposed by the source exponent:
/// (2(n-2)gamma - 2) / (n - (n-2)gamma), for n >= 3 and gamma in the
/// admissible range 1/(n-2) < gamma <= (n-1)/(n-2).
double min_rho(double gamma, int n);

/// Smallness threshold on beta^{-1}(1) under which blow-up is certified:
/// ((gamma+2)(mu0 gamma lambda0^2 - 2(gamma+2)E1)^2
///   / (8(gamma+1) meas(Gamma1) (mu0 lambda0^2 - 2 E1)))^{(gamma+1)/(gamma+2)}.
double blowup_smallness_bound(double mu0, double lambda0, double gamma,
                              double E1, double gamma1_measure);

/// Roots of varrho e^2 - ell e + zeta (the admissible eps8 interval before
/// intersecting with (0, min(1, gamma))).
std::pair<double, double> epsilon8_window_raw(double varrho, double ell,
                                              double zeta);

/// Admissible eps8 interval intersected with (0, min(1, gamma)).
std::pair<double, double> epsilon8_window(double varrho, double ell,
                                          double zeta, double gamma);

/// Energy threshold E1: 0 for negative initial energy, otherwise a value
/// strictly inside (E0, d0) and below E0 + 1.
double choose_E1(double E0, double d0);

/// Everything the blow-up certificate needs, with defaults resolved from the
/// admissible ranges.  tau = 0 means "auto-tune from the first records".
struct BlowupParams {
  double E1 = 0.0;
  double chi = 0.0;
  double chi_bar = 0.0;
  double tau = 0.0;
  double theta = 0.0;
  double eps8 = 0.0;
  double varrho = 0.0;
  double ell = 0.0;
  double zeta = 0.0;
  double window_lo = 0.0;
  double window_hi = 0.0;
};

struct BlowupParamOverrides {
  std::optional<double> chi;
  std::optional<double> chi_bar;
  std::optional<double> tau;
  std::optional<double> eps8;
};

BlowupParams make_blowup_params(double mu0, double lambda0, double gamma,
                                double rho, double E1, double gamma1_measure,
                                double beta_inv_at_1,
                                const BlowupParamOverrides& overrides = {});

// ---------------------------------------------------------------------------
// Hypothesis validation
// ---------------------------------------------------------------------------

enum class Regime {
  GlobalUnconditional,
  PotentialWell,
  BlowupCandidate,
  Indeterminate,
  OutsideTheory,
};

const char* regime_name(Regime regime);

enum class CheckStatus { Pass, Warn, Fail };

struct HypothesisEntry {
  std::string id;
  CheckStatus status = CheckStatus::Pass;
  std::string detail;
  double evidence = 0.0;
};

struct HypothesisReport {
  std::vector<HypothesisEntry> entries;
  Regime regime = Regime::Indeterminate;

  bool any_fail() const;
  const HypothesisEntry* find(const std::string& id) const;
};

struct InitialData {
  Eigen::VectorXd u0;
  Eigen::VectorXd u1;
};

/// Samples every structural hypothesis of the model and classifies the
/// regime.  Failures are reported, never thrown; desk-scale meshes with
/// dim < 3 downgrade dimension-dependent checks to warnings.
HypothesisReport validate_hypotheses(const LawSet& laws, int theory_n,
                                     const Mesh& mesh,
                                     const DiscreteOperators& ops,
                                     const InitialData* initial = nullptr,
                                     const WellConstants* constants = nullptr);

}  // namespace varwave

#endif
