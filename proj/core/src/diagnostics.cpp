#include "varwave/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace varwave {

EnergyParts energy(const DiscreteOperators& ops, const LawSet& laws,
                   const State& state) {
  EnergyParts parts;
  const double gamma = laws.source.gamma;
  parts.kinetic = 0.5 * state.v.dot(ops.M.cwiseProduct(state.v));
  const double uKu = grad_energy_seminorm(ops, state.u);
  parts.grad_seminorm = std::sqrt(std::max(0.0, uKu));
  parts.elastic = 0.5 * laws.mu.mu(state.t) * uKu;
  parts.bdry_norm = boundary_norm(ops, state.u, gamma + 2.0);
  parts.source_term = laws.source.enabled
                          ? std::pow(parts.bdry_norm, gamma + 2.0) / (gamma + 2.0)
                          : 0.0;
  parts.E = parts.kinetic + parts.elastic - parts.source_term;
  return parts;
}

Eigen::VectorXd energy_identity_residual(const Trajectory& trajectory) {
  const auto n = static_cast<Eigen::Index>(trajectory.records.size());
  Eigen::VectorXd r(n);
  if (n == 0) return r;
  const double E0 = trajectory.records.front().E;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Record& rec = trajectory.records[i];
    r[i] = rec.E + rec.dissipation_cum - rec.mu_work_cum - rec.f_work_cum - E0;
  }
  return r;
}

double choose_tau(const Eigen::VectorXd& G, const Eigen::VectorXd& N,
                  double chi_bar) {
  const Eigen::Index n = G.size();
  const Eigen::Index probe = std::min<Eigen::Index>(n, 10);
  for (int k = 0; k <= 60; ++k) {
    const double tau = std::pow(2.0, -k);
    bool ok = G[0] > 0.0;
    double prev = 0.0;
    for (Eigen::Index i = 0; ok && i < probe; ++i) {
      if (G[i] <= 0.0) {
        ok = false;
        break;
      }
      const double m = std::pow(G[i], 1.0 - chi_bar) + tau * N[i];
      if (i == 0 && m <= 0.0) ok = false;
      if (i > 0 && m < prev) ok = false;
      prev = m;
    }
    if (ok) return tau;
  }
  return std::pow(2.0, -60);
}

BlowupSeries blowup_series(const Trajectory& trajectory,
                           const BlowupParams& params, bool certified) {
  const auto n = static_cast<Eigen::Index>(trajectory.records.size());
  BlowupSeries series;
  series.t.resize(n);
  series.G.resize(n);
  series.N.resize(n);
  series.M.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Record& rec = trajectory.records[i];
    series.t[i] = rec.t;
    series.G[i] = params.E1 - rec.E;
    series.N[i] = rec.N;
    if (certified && series.G[i] <= 0.0) {
      std::ostringstream os;
      os << "G(t) = " << series.G[i] << " <= 0 at record " << i
         << ": E1 misconfigured for a blow-up certificate";
      fail(ErrorCode::NegativeG, os.str());
    }
  }
  series.tau = params.tau > 0.0 ? params.tau
                                : choose_tau(series.G, series.N, params.chi_bar);
  for (Eigen::Index i = 0; i < n; ++i) {
    series.M[i] = series.G[i] > 0.0
                      ? std::pow(series.G[i], 1.0 - params.chi_bar) +
                            series.tau * series.N[i]
                      : 0.0;
  }
  return series;
}

void apply_blowup_series(Trajectory& trajectory, const BlowupSeries& series) {
  const auto n = std::min<std::size_t>(trajectory.records.size(),
                                       static_cast<std::size_t>(series.G.size()));
  for (std::size_t i = 0; i < n; ++i) {
    trajectory.records[i].G = series.G[static_cast<Eigen::Index>(i)];
    trajectory.records[i].M_fn = series.M[static_cast<Eigen::Index>(i)];
  }
}

MGrowthResult verify_M_growth(const Eigen::VectorXd& t,
                              const Eigen::VectorXd& M, double chi_bar) {
  if (t.size() != M.size())
    fail(ErrorCode::DimensionMismatch, "t and M series differ in length");
  if (t.size() < 30)
    fail(ErrorCode::TooFewRecords, "M-growth check needs >= 30 records");
  const double p = 1.0 / (1.0 - chi_bar);
  MGrowthResult out;
  out.c_fit = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 1; i + 1 < t.size(); ++i) {
    const double dt = t[i + 1] - t[i - 1];
    if (!(dt > 0.0) || !(M[i] > 0.0)) {
      out.c_fit = 0.0;
      break;
    }
    const double slope = (M[i + 1] - M[i - 1]) / dt;
    out.c_fit = std::min(out.c_fit, slope / std::pow(M[i], p));
  }
  if (!std::isfinite(out.c_fit)) out.c_fit = 0.0;
  out.pass = out.c_fit > 0.0;
  return out;
}

const char* decay_case_name(DecayCase c) {
  switch (c) {
    case DecayCase::Exponential: return "Exponential";
    case DecayCase::Polynomial: return "Polynomial";
    case DecayCase::General: return "General";
  }
  return "?";
}

double F_inverse(const std::function<double(double)>& beta, double y,
                 int iterations) {
  if (!beta) fail(ErrorCode::ValidationError, "F_inverse needs beta");
  auto F = [&beta](double s) { return s * beta(s); };
  if (y <= 0.0) return 0.0;
  if (y >= F(1.0)) return 1.0;
  double lo = 0.0, hi = 1.0;
  for (int i = 0; i < iterations; ++i) {
    const double mid = 0.5 * (lo + hi);
    (F(mid) < y ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

namespace {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit fit;
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double det = n * sxx - sx * sx;
  if (std::abs(det) < 1e-300) return fit;
  fit.slope = (n * sxy - sx * sy) / det;
  fit.intercept = (sy - fit.slope * sx) / n;
  double ss_res = 0.0, ss_tot = 0.0;
  const double mean = sy / n;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = fit.intercept + fit.slope * x[i];
    ss_res += (y[i] - f) * (y[i] - f);
    ss_tot += (y[i] - mean) * (y[i] - mean);
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

}  // namespace

DecayFitResult fit_decay(const Eigen::VectorXd& t, const Eigen::VectorXd& E,
                         DecayCase decay_case, const DecayFitOptions& options) {
  if (t.size() != E.size())
    fail(ErrorCode::DimensionMismatch, "t and E series differ in length");
  if (t.size() < 4) fail(ErrorCode::TooFewRecords, "decay fit needs >= 4 records");

  const auto n = t.size();
  const auto start = static_cast<Eigen::Index>(
      std::floor(static_cast<double>(n) * (1.0 - options.tail_fraction)));
  const Eigen::Index tail_start = std::min<Eigen::Index>(std::max<Eigen::Index>(start, 0), n - 2);

  DecayFitResult out;
  out.decay_case = decay_case;
  out.tail_window = {t[tail_start], t[n - 1]};

  for (Eigen::Index i = tail_start; i < n; ++i)
    if (!(E[i] > 0.0))
      fail(ErrorCode::NonpositiveEnergy,
           "E <= 0 enters the tail window: decay fit undefined");

  std::vector<double> xs, ys;
  xs.reserve(n - tail_start);
  ys.reserve(n - tail_start);

  switch (decay_case) {
    case DecayCase::Exponential: {
      for (Eigen::Index i = tail_start; i < n; ++i) {
        xs.push_back(t[i]);
        ys.push_back(std::log(E[i]));
      }
      const LineFit fit = least_squares(xs, ys);
      out.fitted_rate = -fit.slope;  // E ~ C e^{-omega t}
      out.calibration_constant = std::exp(fit.intercept);
      out.residual_r2 = fit.r2;
      out.pass = out.fitted_rate > 0.0 && fit.r2 >= 0.99;
      break;
    }
    case DecayCase::Polynomial: {
      const double expo = 2.0 / options.rho;
      const double C2 = E[tail_start] * std::pow(1.0 + t[tail_start], expo);
      out.calibration_constant = C2;
      out.pass = true;
      for (Eigen::Index i = tail_start; i < n; ++i) {
        const double prod = E[i] * std::pow(1.0 + t[i], expo);
        if (prod > options.bound_slack * C2) out.pass = false;
        xs.push_back(std::log(1.0 + t[i]));
        ys.push_back(std::log(E[i]));
      }
      const LineFit fit = least_squares(xs, ys);
      out.fitted_rate = -fit.slope;  // informational algebraic exponent
      out.residual_r2 = fit.r2;
      break;
    }
    case DecayCase::General: {
      if (!options.beta)
        fail(ErrorCode::ValidationError, "case 3 fit needs the beta profile");
      auto envelope = [&](double time) {
        const double s = F_inverse(options.beta, 1.0 / time);
        return s * s;
      };
      if (t[tail_start] <= 0.0)
        fail(ErrorCode::ValidationError, "case 3 fit needs t > 0 on the tail");
      const double C3 = E[tail_start] / envelope(t[tail_start]);
      out.calibration_constant = C3;
      out.pass = true;
      for (Eigen::Index i = tail_start; i < n; ++i) {
        if (E[i] > options.bound_slack * C3 * envelope(t[i])) out.pass = false;
        xs.push_back(std::log(t[i]));
        ys.push_back(std::log(E[i]));
      }
      const LineFit fit = least_squares(xs, ys);
      out.fitted_rate = -fit.slope;
      out.residual_r2 = fit.r2;
      break;
    }
  }
  return out;
}

}  // namespace varwave
