#include "varwave/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "varwave/assembly.hpp"
#include "varwave/geometry.hpp"
#include "varwave/well.hpp"

namespace varwave {

namespace {

double sgn(double s) { return s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0); }

double flat_profile(double s) {
  // s * exp(1 - 1/s^2), odd, strictly increasing, flat at 0.
  if (s == 0.0) return 0.0;
  return s * std::exp(1.0 - 1.0 / (s * s));
}

double flat_profile_derivative(double s) {
  if (s == 0.0) return 0.0;
  const double inv2 = 1.0 / (s * s);
  return std::exp(1.0 - inv2) * (1.0 + 2.0 * inv2);
}

// Monotone bisection inverse of an odd increasing profile on [0, 1].
double invert_on_unit(const std::function<double(double)>& f, double y) {
  const double ay = std::abs(y);
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < ay ? lo : hi) = mid;
  }
  return sgn(y) * 0.5 * (lo + hi);
}

}  // namespace

// ---------------------------------------------------------------------------
// TimeWeight
// ---------------------------------------------------------------------------

TimeWeight TimeWeight::constant(double mu0) {
  TimeWeight w;
  w.mu0 = mu0;
  w.mu = [mu0](double) { return mu0; };
  w.mu_prime = [](double) { return 0.0; };
  w.is_constant = true;
  return w;
}

TimeWeight TimeWeight::exp_decay(double mu0) {
  TimeWeight w;
  w.mu0 = mu0;
  w.mu = [mu0](double t) { return mu0 * (1.0 + std::exp(-t)); };
  w.mu_prime = [mu0](double t) { return -mu0 * std::exp(-t); };
  w.is_constant = false;
  return w;
}

// ---------------------------------------------------------------------------
// DampingLaw
// ---------------------------------------------------------------------------

DampingLaw DampingLaw::none() {
  DampingLaw law;
  law.family = Family::None;
  law.beta = [](double) { return 0.0; };
  law.beta_inv = [](double) { return 0.0; };
  return law;
}

DampingLaw DampingLaw::linear(double a, double rho) {
  if (a <= 0.0) fail(ErrorCode::ValidationError, "linear damping slope must be positive");
  if (rho < 0.0) fail(ErrorCode::ValidationError, "damping exponent rho must be >= 0");
  DampingLaw law;
  law.family = Family::Linear;
  law.rho = rho;
  law.slope = a;
  law.c3 = a;
  law.c4 = a;
  // Largest witness compatible with beta <= q and beta(q(s)) <= s.
  const double b = std::min(a, 1.0 / a);
  law.beta = [b](double s) { return b * s; };
  law.beta_inv = [b](double y) { return y / b; };
  law.beta_inverse_at_1 = 1.0 / b;
  law.linear_constants = std::make_pair(a, a);
  return law;
}

DampingLaw DampingLaw::polynomial(double rho, double scale) {
  if (rho < 0.0) fail(ErrorCode::ValidationError, "damping exponent rho must be >= 0");
  if (scale <= 0.0) fail(ErrorCode::ValidationError, "damping scale must be positive");
  DampingLaw law;
  law.family = Family::Polynomial;
  law.rho = rho;
  law.slope = scale;
  law.c3 = scale;
  law.c4 = scale;
  const double bw = std::min(scale, std::pow(scale, -(rho + 1.0)));
  law.beta = [bw, rho](double s) { return bw * std::pow(std::abs(s), rho) * s; };
  law.beta_inv = [bw, rho](double y) {
    return sgn(y) * std::pow(std::abs(y) / bw, 1.0 / (rho + 1.0));
  };
  law.beta_inverse_at_1 = std::pow(1.0 / bw, 1.0 / (rho + 1.0));
  return law;
}

DampingLaw DampingLaw::flat(double rho, double scale) {
  if (rho < 0.0) fail(ErrorCode::ValidationError, "damping exponent rho must be >= 0");
  if (scale <= 0.0 || scale > 1.0)
    fail(ErrorCode::ValidationError, "flat damping scale must lie in (0, 1]");
  DampingLaw law;
  law.family = Family::Flat;
  law.rho = rho;
  law.slope = scale;
  law.c3 = scale;  // q(1) = scale
  law.c4 = scale;
  law.beta = [scale](double s) { return scale * flat_profile(s); };
  // Inverse on [0, beta(1)] by bisection; past beta(1) the q-tail
  // q(1)|s|^rho s supplies the monotone extension.
  law.beta_inv = [scale, rho](double y) {
    const double ay = std::abs(y);
    if (ay <= scale) {
      return invert_on_unit([scale](double s) { return scale * flat_profile(s); }, y);
    }
    return sgn(y) * std::pow(ay / scale, 1.0 / (rho + 1.0));
  };
  law.beta_inverse_at_1 = law.beta_inv(1.0);
  return law;
}

double eval_damping(const DampingLaw& law, double s) {
  if (law.family == DampingLaw::Family::None) return 0.0;
  const double as = std::abs(s);
  if (as > 1.0) {
    // q(1) |s|^rho s: continuous continuation of the inner branch.
    return law.slope * std::pow(as, law.rho) * s;
  }
  switch (law.family) {
    case DampingLaw::Family::Linear: return law.slope * s;
    case DampingLaw::Family::Polynomial:
      return law.slope * std::pow(as, law.rho) * s;
    case DampingLaw::Family::Flat: return law.slope * flat_profile(s);
    default: return 0.0;
  }
}

double eval_damping_derivative(const DampingLaw& law, double s) {
  if (law.family == DampingLaw::Family::None) return 0.0;
  const double as = std::abs(s);
  if (as > 1.0) return law.slope * (law.rho + 1.0) * std::pow(as, law.rho);
  switch (law.family) {
    case DampingLaw::Family::Linear: return law.slope;
    case DampingLaw::Family::Polynomial:
      return law.slope * (law.rho + 1.0) * std::pow(as, law.rho);
    case DampingLaw::Family::Flat:
      return law.slope * flat_profile_derivative(s);
    default: return 0.0;
  }
}

// ---------------------------------------------------------------------------
// SourceLaw / ForcingLaw
// ---------------------------------------------------------------------------

double eval_source(const SourceLaw& law, double u) {
  if (!law.enabled) return 0.0;
  return std::pow(std::abs(u), law.gamma) * u;
}

double eval_source_derivative(const SourceLaw& law, double u) {
  if (!law.enabled) return 0.0;
  return (law.gamma + 1.0) * std::pow(std::abs(u), law.gamma);
}

ForcingLaw ForcingLaw::zero() { return ForcingLaw{}; }

ForcingLaw ForcingLaw::gaussian_pulse(const Eigen::Vector2d& center,
                                      double width, double amplitude,
                                      double decay_rate) {
  if (width <= 0.0) fail(ErrorCode::ValidationError, "pulse width must be positive");
  ForcingLaw f;
  f.mode = Mode::GaussianPulse;
  f.center = center;
  f.width = width;
  f.amplitude = amplitude;
  f.decay_rate = decay_rate;
  return f;
}

double ForcingLaw::eval(const Eigen::Ref<const Eigen::VectorXd>& x,
                        double t) const {
  if (mode == Mode::Zero) return 0.0;
  double r2 = 0.0;
  for (int d = 0; d < x.size(); ++d) {
    const double dx = x[d] - center[d];
    r2 += dx * dx;
  }
  return amplitude * std::exp(-r2 / (2.0 * width * width) - decay_rate * t);
}

// ---------------------------------------------------------------------------
// Parameter algebra
// ---------------------------------------------------------------------------

double min_rho(double gamma, int n) {
  if (n < 3)
    fail(ErrorCode::GammaOutOfRange, "admissible range needs n >= 3");
  const double den = n - (n - 2.0) * gamma;
  if (den <= 0.0) {
    std::ostringstream os;
    os << "n - (n-2)gamma = " << den << " <= 0";
    fail(ErrorCode::DenominatorNonpositive, os.str());
  }
  if (!(gamma > 1.0 / (n - 2.0) && gamma <= (n - 1.0) / (n - 2.0))) {
    std::ostringstream os;
    os << "gamma = " << gamma << " outside (" << 1.0 / (n - 2.0) << ", "
       << (n - 1.0) / (n - 2.0) << "] for n = " << n;
    fail(ErrorCode::GammaOutOfRange, os.str());
  }
  return (2.0 * (n - 2.0) * gamma - 2.0) / den;
}

double blowup_smallness_bound(double mu0, double lambda0, double gamma,
                              double E1, double gamma1_measure) {
  if (gamma1_measure <= 0.0)
    fail(ErrorCode::ValidationError, "meas(Gamma1) must be positive");
  const double den = mu0 * lambda0 * lambda0 - 2.0 * E1;
  if (den <= 0.0)
    fail(ErrorCode::DegenerateDenominator, "mu0 lambda0^2 - 2 E1 <= 0");
  const double num = gamma * mu0 * lambda0 * lambda0 - 2.0 * (gamma + 2.0) * E1;
  const double base =
      (gamma + 2.0) * num * num / (8.0 * (gamma + 1.0) * gamma1_measure * den);
  return std::pow(base, (gamma + 1.0) / (gamma + 2.0));
}

std::pair<double, double> epsilon8_window_raw(double varrho, double ell,
                                              double zeta) {
  if (varrho <= 0.0 || ell <= 0.0)
    fail(ErrorCode::NotInBlowupRegion, "varrho and ell must be positive");
  const double disc = ell * ell - 4.0 * varrho * zeta;
  if (disc < 0.0)
    fail(ErrorCode::Condition215Violated,
         "discriminant ell^2 - 4 varrho zeta < 0");
  const double root = std::sqrt(disc);
  return {(ell - root) / (2.0 * varrho), (ell + root) / (2.0 * varrho)};
}

std::pair<double, double> epsilon8_window(double varrho, double ell,
                                          double zeta, double gamma) {
  if (gamma <= 0.0) fail(ErrorCode::ValidationError, "gamma must be positive");
  const auto [lo, hi] = epsilon8_window_raw(varrho, ell, zeta);
  const double cap = std::min(1.0, gamma);
  const double lo_i = std::max(lo, 0.0);
  const double hi_i = std::min(hi, cap);
  // A vanishing discriminant leaves the single admissible point lo == hi.
  if (!(lo_i < cap) || !(hi_i > 0.0) || lo_i > hi_i)
    fail(ErrorCode::EmptyWindow,
         "admissible eps8 interval does not meet (0, min(1, gamma))");
  return {lo_i, hi_i};
}

double choose_E1(double E0, double d0) {
  if (E0 >= d0 || E0 <= -1.0)
    fail(ErrorCode::NotInBlowupRegion, "need -1 < E(0) < d0");
  if (E0 < 0.0) return 0.0;
  return E0 + std::min(0.5 * (d0 - E0), 0.5);
}

BlowupParams make_blowup_params(double mu0, double lambda0, double gamma,
                                double rho, double E1, double gamma1_measure,
                                double beta_inv_at_1,
                                const BlowupParamOverrides& overrides) {
  BlowupParams p;
  p.E1 = E1;
  p.varrho = 0.5 * mu0 * lambda0 * lambda0 - E1;
  p.ell = 0.5 * gamma * mu0 * lambda0 * lambda0 - (gamma + 2.0) * E1;
  if (p.varrho <= 0.0 || p.ell <= 0.0)
    fail(ErrorCode::NotInBlowupRegion, "E1 too large: varrho or ell <= 0");
  p.zeta = (gamma + 1.0) * gamma1_measure *
           std::pow(beta_inv_at_1, (gamma + 2.0) / (gamma + 1.0)) /
           (gamma + 2.0);
  std::tie(p.window_lo, p.window_hi) =
      epsilon8_window(p.varrho, p.ell, p.zeta, gamma);

  if (overrides.eps8) {
    p.eps8 = *overrides.eps8;
    if (p.eps8 < p.window_lo || p.eps8 > p.window_hi)
      fail(ErrorCode::ValidationError, "eps8 override outside admissible window");
  } else {
    p.eps8 = 0.5 * (p.window_lo + p.window_hi);
  }
  p.theta = gamma + 2.0 - p.eps8;

  const double chi_cap = (gamma - rho) / ((rho + 2.0) * (gamma + 2.0));
  if (chi_cap <= 0.0)
    fail(ErrorCode::NotInBlowupRegion, "blow-up parameters need rho < gamma");
  if (overrides.chi) {
    p.chi = *overrides.chi;
    if (p.chi <= 0.0 || p.chi >= chi_cap)
      fail(ErrorCode::ValidationError, "chi override outside (0, (gamma-rho)/((rho+2)(gamma+2)))");
  } else {
    p.chi = 0.5 * chi_cap;
  }
  if (overrides.chi_bar) {
    p.chi_bar = *overrides.chi_bar;
    if (p.chi_bar <= 0.0 || p.chi_bar >= std::min(0.5, p.chi))
      fail(ErrorCode::ValidationError, "chi_bar override outside (0, min(1/2, chi))");
  } else {
    p.chi_bar = std::min(0.5 * p.chi, 0.49);
  }
  p.tau = overrides.tau.value_or(0.0);
  if (p.tau < 0.0) fail(ErrorCode::ValidationError, "tau must be nonnegative");
  return p;
}

// ---------------------------------------------------------------------------
// Hypothesis validation
// ---------------------------------------------------------------------------

const char* regime_name(Regime regime) {
  switch (regime) {
    case Regime::GlobalUnconditional: return "GlobalUnconditional";
    case Regime::PotentialWell: return "PotentialWell";
    case Regime::BlowupCandidate: return "BlowupCandidate";
    case Regime::Indeterminate: return "Indeterminate";
    case Regime::OutsideTheory: return "OutsideTheory";
  }
  return "?";
}

bool HypothesisReport::any_fail() const {
  return std::any_of(entries.begin(), entries.end(), [](const auto& e) {
    return e.status == CheckStatus::Fail;
  });
}

const HypothesisEntry* HypothesisReport::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return &e;
  return nullptr;
}

namespace {

HypothesisEntry check_mu(const TimeWeight& w) {
  HypothesisEntry e{"H2", CheckStatus::Pass, "", 0.0};
  double worst = 0.0;
  std::ostringstream detail;
  // t = 0 plus a log-spaced grid on [1e-3, 1e3].
  std::vector<double> ts{0.0};
  for (int i = 0; i <= 60; ++i) ts.push_back(std::pow(10.0, -3.0 + 0.1 * i));
  for (double t : ts) {
    const double m = w.mu(t);
    const double mp = w.mu_prime(t);
    if (m < w.mu0 * (1.0 - 1e-12)) {
      e.status = CheckStatus::Fail;
      detail << "mu(" << t << ") = " << m << " < mu0; ";
    }
    if (mp > 1e-12) {
      e.status = CheckStatus::Fail;
      detail << "mu'(" << t << ") = " << mp << " > 0; ";
    }
    const double h = 1e-6 * std::max(1.0, t);
    const double fd = (w.mu(t + h) - w.mu(std::max(t - h, 0.0))) /
                      (t - h < 0.0 ? t + h : 2.0 * h);
    const double err = std::abs(fd - mp) / std::max(1.0, std::abs(mp));
    worst = std::max(worst, err);
    if (err > 1e-5) {
      e.status = CheckStatus::Fail;
      detail << "mu' inconsistent with finite differences at t=" << t << "; ";
    }
  }
  e.evidence = worst;
  e.detail = e.status == CheckStatus::Pass
                 ? "mu >= mu0, mu' <= 0, derivative consistent on log grid"
                 : detail.str();
  return e;
}

HypothesisEntry check_damping(const DampingLaw& law, double gamma,
                              int theory_n) {
  HypothesisEntry e{"H3", CheckStatus::Pass, "", 0.0};
  if (law.is_none()) {
    e.status = CheckStatus::Warn;
    e.detail = "damping disabled (q = 0): no admissible beta witness";
    return e;
  }
  std::ostringstream detail;
  const double tol = 1e-10;
  if (std::abs(eval_damping(law, 0.0)) > tol) {
    e.status = CheckStatus::Fail;
    detail << "q(0) != 0; ";
  }
  double prev = eval_damping(law, -10.0);
  for (int i = 1; i <= 2000; ++i) {
    const double s = -10.0 + 20.0 * i / 2000.0;
    const double q = eval_damping(law, s);
    if (q < prev - tol) {
      e.status = CheckStatus::Fail;
      detail << "q not nondecreasing near s=" << s << "; ";
      break;
    }
    prev = q;
  }
  for (int i = 1; i <= 500; ++i) {
    const double s = static_cast<double>(i) / 500.0;
    const double q = std::abs(eval_damping(law, s));
    if (std::abs(law.beta(s)) > q * (1.0 + 1e-9) + tol ||
        q > std::abs(law.beta_inv(s)) * (1.0 + 1e-9) + tol) {
      e.status = CheckStatus::Fail;
      detail << "sandwich |beta| <= |q| <= |beta^{-1}| fails at s=" << s << "; ";
      break;
    }
    if (std::abs(eval_damping(law, -s) + eval_damping(law, s)) > tol) {
      e.status = CheckStatus::Fail;
      detail << "q not odd at s=" << s << "; ";
      break;
    }
  }
  for (int i = 1; i <= 200; ++i) {
    const double s = 1.0 + 9.0 * i / 200.0;
    const double q = std::abs(eval_damping(law, s));
    const double pw = std::pow(s, law.rho + 1.0);
    if (q < law.c3 * pw * (1.0 - 1e-9) || q > law.c4 * pw * (1.0 + 1e-9)) {
      e.status = CheckStatus::Fail;
      detail << "growth bounds c3,c4 fail at s=" << s << "; ";
      break;
    }
  }
  // Growth floor from the source exponent.
  try {
    const double floor = min_rho(gamma, theory_n);
    e.evidence = floor;
    if (law.rho < floor) {
      e.status = CheckStatus::Fail;
      detail << "rho = " << law.rho << " below the admissible floor "
             << floor;
      if (law.rho < gamma)
        detail << " (rho < gamma opens the blow-up theorem but rho is below "
                  "the growth floor)";
      detail << "; ";
    }
  } catch (const Error&) {
    // gamma outside (2.12): reported under H4.
  }
  e.detail = e.status == CheckStatus::Pass
                 ? "q(0)=0, odd, nondecreasing, sandwich and growth bounds hold"
                 : detail.str();
  return e;
}

}  // namespace

HypothesisReport validate_hypotheses(const LawSet& laws, int theory_n,
                                     const Mesh& mesh,
                                     const DiscreteOperators& ops,
                                     const InitialData* initial,
                                     const WellConstants* constants) {
  HypothesisReport report;
  const double gamma = laws.source.gamma;

  // H1: boundary partition (the escape hypothesis is sampled by
  // check_escape_field and enters under (5.2)).
  {
    HypothesisEntry e{"H1", CheckStatus::Pass, "", 0.0};
    const double m0 = boundary_measure(mesh, BoundaryLabel::Gamma0);
    e.evidence = m0;
    std::ostringstream os;
    os << "meas(Gamma0) = " << m0 << ", meas(Gamma1) = "
       << boundary_measure(mesh, BoundaryLabel::Gamma1);
    if (m0 <= 0.0) {
      e.status = CheckStatus::Fail;
      os << "; clamped part empty";
    }
    if (mesh.dim < 3) {
      e.status = std::max(e.status, CheckStatus::Warn);
      os << "; desk-scale dim = " << mesh.dim << " (theory assumes n >= 3)";
    }
    e.detail = os.str();
    report.entries.push_back(e);
  }

  report.entries.push_back(check_mu(laws.mu));
  report.entries.push_back(check_damping(laws.damping, gamma, theory_n));

  // H4: source exponent range for the configured theory dimension.
  {
    HypothesisEntry e{"H4", CheckStatus::Pass, "", gamma};
    const double lo = 1.0 / (theory_n - 2.0);
    const double hi = (theory_n - 1.0) / (theory_n - 2.0);
    std::ostringstream os;
    os << "gamma = " << gamma << ", admissible (" << lo << ", " << hi
       << "] for n = " << theory_n;
    if (!(gamma > lo && gamma <= hi)) e.status = CheckStatus::Fail;
    e.detail = os.str();
    report.entries.push_back(e);
  }

  // Compatibility residual of the initial data on Gamma1, in the
  // lumped weak-form realization mu(0) (K u0)_i / B_ii + q(u1_i) - h(u0_i).
  {
    HypothesisEntry e{"compatibility", CheckStatus::Warn, "not evaluated (no initial data)", 0.0};
    if (initial != nullptr && !ops.gamma1_dofs.empty()) {
      const Eigen::VectorXd Ku = ops.K * initial->u0;
      double worst = 0.0;
      for (int i : ops.gamma1_dofs) {
        const double flux = laws.mu.mu(0.0) * Ku[i] / ops.B[i];
        const double r = flux + eval_damping(laws.damping, initial->u1[i]) -
                         eval_source(laws.source, initial->u0[i]);
        worst = std::max(worst, std::abs(r));
      }
      e.evidence = worst;
      e.status = worst <= 1e-8 ? CheckStatus::Pass : CheckStatus::Warn;
      std::ostringstream os;
      os << "max |mu(0) du0/dnu_L + q(u1) - h(u0)| over Gamma1 = " << worst;
      e.detail = os.str();
    }
    report.entries.push_back(e);
  }

  // Smallness of beta^{-1}(1) with E1 picked from the initial energy.
  Classification cls;
  bool have_cls = false;
  if (initial != nullptr && constants != nullptr) {
    cls = classify_initial_data(initial->u0, initial->u1, ops, laws, *constants);
    have_cls = true;
  }
  {
    HypothesisEntry e{"blowup-smallness", CheckStatus::Warn,
                      "not evaluated (needs well constants and initial data)", 0.0};
    if (have_cls && cls.bound_215 > 0.0) {
      e.evidence = cls.bound_215;
      std::ostringstream os;
      os << "beta^{-1}(1) = " << cls.beta_inv_1 << " vs bound " << cls.bound_215;
      e.status = cls.cond_215 ? CheckStatus::Pass : CheckStatus::Fail;
      if (cls.regime == Regime::PotentialWell ||
          cls.regime == Regime::GlobalUnconditional)
        os << " (informational: data not in the blow-up set)";
      e.detail = os.str();
    } else if (have_cls) {
      e.detail = "not evaluated: " + cls.note;
    }
    report.entries.push_back(e);
  }

  // Divergence pinch of the escape field; sampled separately.
  {
    HypothesisEntry e{"divergence-pinch", CheckStatus::Warn,
                      "not evaluated here: run check_escape_field for the "
                      "divergence pinch sigma <= div H <= sigma(gamma+4)/(gamma+2)",
                      0.0};
    report.entries.push_back(e);
  }

  if (laws.damping.rho >= gamma && !laws.damping.is_none()) {
    report.regime = Regime::GlobalUnconditional;
  } else if (have_cls) {
    report.regime = cls.regime;
  } else {
    report.regime = Regime::Indeterminate;
  }
  return report;
}

}  // namespace varwave
