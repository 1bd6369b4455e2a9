#include "varwave/well.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

namespace varwave {

double rayleigh_trace_ratio(const DiscreteOperators& ops, double gamma,
                            const Eigen::VectorXd& u) {
  const double denom2 = grad_energy_seminorm(ops, u);
  if (denom2 <= 0.0) return 0.0;
  return boundary_norm(ops, u, gamma + 2.0) / std::sqrt(denom2);
}

namespace {

// One projected gradient ascent of R(u) = ||u||_{p,Gamma1} / ||u||_K on the
// ellipsoid u^T K u = 1.  Converges when the best value stalls (relative
// improvement < tol over a 50-iteration window).
double ascend(const DiscreteOperators& ops, double gamma, Eigen::VectorXd u,
              double tol) {
  const double p = gamma + 2.0;
  auto k_normalize = [&](Eigen::VectorXd& w) {
    const double n2 = w.dot(ops.K * w);
    if (!(n2 > 0.0)) return false;
    w /= std::sqrt(n2);
    return true;
  };
  if (!k_normalize(u)) return 0.0;

  double value = boundary_norm(ops, u, p);
  double best = value;
  double window_best = best;
  double alpha = 1.0;
  const int max_iters = 20000;
  for (int it = 1; it <= max_iters; ++it) {
    if (value <= 0.0) break;  // vanishing trace: dead direction
    // grad of the p-norm at u, then K-projection onto the tangent space.
    Eigen::VectorXd g = Eigen::VectorXd::Zero(ops.n_free);
    for (int i : ops.gamma1_dofs)
      g[i] = std::pow(value, 1.0 - p) * ops.B[i] *
             std::pow(std::abs(u[i]), p - 2.0) * u[i];
    const Eigen::VectorXd Ku = ops.K * u;
    Eigen::VectorXd d = g - g.dot(Ku) * u;
    const double dnorm = d.norm();
    if (dnorm < 1e-300) break;

    bool improved = false;
    for (int bt = 0; bt < 40; ++bt) {
      Eigen::VectorXd trial = u + alpha * d;
      if (!k_normalize(trial)) break;
      const double tv = boundary_norm(ops, trial, p);
      if (tv > value) {
        u = trial;
        value = tv;
        improved = true;
        alpha *= 1.5;
        break;
      }
      alpha *= 0.5;
    }
    if (!improved) break;
    best = std::max(best, value);
    if (it % 50 == 0) {
      if (best - window_best < tol * std::max(best, 1e-300)) break;
      window_best = best;
    }
  }
  return best;
}

}  // namespace

double estimate_K0(const DiscreteOperators& ops, double gamma, int restarts,
                   double tol, std::uint64_t seed) {
  if (ops.gamma1_dofs.empty())
    fail(ErrorCode::NoBoundaryNodes, "Gamma1 carries no free dofs");

  // Deterministic start: the trace-load profile K u = B. Exact maximizer of
  // the p = 2 problem and a strong start for p > 2.
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> solver(ops.K);
  std::vector<Eigen::VectorXd> starts;
  if (solver.info() == Eigen::Success) starts.push_back(solver.solve(ops.B));
  if (starts.empty() && restarts <= 0)
    starts.push_back(Eigen::VectorXd::Ones(ops.n_free));
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(derive_seed(seed, 101 + r));
    std::normal_distribution<double> normal(0.0, 1.0);
    Eigen::VectorXd u(ops.n_free);
    for (int i = 0; i < ops.n_free; ++i) u[i] = normal(rng);
    starts.push_back(std::move(u));
  }

  std::vector<double> results(starts.size(), 0.0);
  parallel_for(static_cast<std::int64_t>(starts.size()),
               [&](std::int64_t lo, std::int64_t hi) {
                 for (std::int64_t s = lo; s < hi; ++s)
                   results[s] = ascend(ops, gamma, starts[s], tol);
               });
  return *std::max_element(results.begin(), results.end());
}

WellConstants well_constants(double K0, double mu0, double gamma) {
  if (K0 <= 0.0 || mu0 <= 0.0 || gamma <= 0.0)
    fail(ErrorCode::ValidationError, "well constants need K0, mu0, gamma > 0");
  WellConstants c;
  c.K0 = K0;
  c.mu0 = mu0;
  c.gamma = gamma;
  c.lambda0 = std::pow(mu0 / std::pow(K0, gamma + 2.0), 1.0 / gamma);
  c.d0 = gamma * mu0 * c.lambda0 * c.lambda0 / (2.0 * (gamma + 2.0));
  return c;
}

double j_profile(const WellConstants& constants, double lambda) {
  if (lambda < 0.0) fail(ErrorCode::ValidationError, "j needs lambda >= 0");
  const double g = constants.gamma;
  return 0.5 * constants.mu0 * lambda * lambda -
         std::pow(constants.K0, g + 2.0) * std::pow(lambda, g + 2.0) / (g + 2.0);
}

std::pair<double, double> functionals_J_I(const DiscreteOperators& ops,
                                          double mu0, double gamma,
                                          const Eigen::VectorXd& u) {
  const double uKu = grad_energy_seminorm(ops, u);
  const double bn_pow = std::pow(boundary_norm(ops, u, gamma + 2.0), gamma + 2.0);
  const double J = 0.5 * mu0 * uKu - bn_pow / (gamma + 2.0);
  const double I = mu0 * uKu - bn_pow;
  return {J, I};
}

Classification classify_initial_data(const Eigen::VectorXd& u0,
                                     const Eigen::VectorXd& u1,
                                     const DiscreteOperators& ops,
                                     const LawSet& laws,
                                     const WellConstants& constants) {
  Classification out;
  const double gamma = laws.source.gamma;
  out.lambda0 = constants.lambda0;
  out.d0 = constants.d0;
  out.grad_norm = std::sqrt(grad_energy_seminorm(ops, u0));
  const double src = laws.source.enabled
                         ? std::pow(boundary_norm(ops, u0, gamma + 2.0), gamma + 2.0) /
                               (gamma + 2.0)
                         : 0.0;
  out.E0 = 0.5 * u1.dot(ops.M.cwiseProduct(u1)) +
           0.5 * laws.mu.mu(0.0) * grad_energy_seminorm(ops, u0) - src;
  out.beta_inv_1 = laws.damping.beta_inverse_at_1;

  const double rho = laws.damping.rho;
  if (!laws.damping.is_none() && rho >= gamma) {
    out.regime = Regime::GlobalUnconditional;
    out.note = "rho >= gamma: global existence regardless of data";
    return out;
  }

  std::ostringstream note;
  if (out.E0 < out.d0 && out.grad_norm < out.lambda0) {
    out.regime = Regime::PotentialWell;
    note << "E(0) < d0 and ||grad_g u0|| < lambda0";
    if (!laws.forcing.is_zero()) note << " (theorem assumes f = 0)";
    out.note = note.str();
    return out;
  }

  const bool data_set = out.grad_norm > out.lambda0 && out.E0 > -1.0 &&
                        out.E0 < out.d0;
  if (data_set && rho < gamma && !laws.damping.is_none()) {
    const double E1 = choose_E1(out.E0, out.d0);
    try {
      out.bound_215 = blowup_smallness_bound(constants.mu0, constants.lambda0,
                                             gamma, E1, ops.gamma1_measure);
      out.cond_215 = out.beta_inv_1 <= out.bound_215;
      if (out.cond_215) {
        const BlowupParams p =
            make_blowup_params(constants.mu0, constants.lambda0, gamma, rho, E1,
                               ops.gamma1_measure, out.beta_inv_1);
        out.has_window = true;
        out.window_lo = p.window_lo;
        out.window_hi = p.window_hi;
        out.regime = Regime::BlowupCandidate;
        note << "||grad_g u0|| > lambda0, -1 < E(0) < d0, rho < gamma, "
                "smallness condition holds";
        out.note = note.str();
        return out;
      }
      note << "smallness condition fails: beta^{-1}(1) = " << out.beta_inv_1
           << " > " << out.bound_215;
    } catch (const Error& err) {
      note << "blow-up parameters unavailable: " << err.what();
    }
  } else if (!data_set) {
    note << "data outside both the well and the blow-up set";
  } else {
    note << "blow-up theorem needs rho < gamma with active damping";
  }
  out.regime = Regime::Indeterminate;
  out.note = note.str();
  return out;
}

TrapReport trapping_monitor(const Trajectory& trajectory,
                            const WellConstants& constants, TrapMode mode) {
  TrapReport report;
  report.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < trajectory.records.size(); ++i) {
    const double norm = trajectory.records[i].grad_seminorm;
    const double margin = mode == TrapMode::Below ? constants.lambda0 - norm
                                                  : norm - constants.lambda0;
    if (margin < report.worst_margin) report.worst_margin = margin;
    if (margin <= 0.0 && report.pass) {
      report.pass = false;
      report.first_violation = static_cast<int>(i);
    }
  }
  return report;
}

InitialData random_well_data(const DiscreteOperators& ops, const LawSet& laws,
                             const WellConstants& constants,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double gamma = laws.source.gamma;

  InitialData data;
  data.u0.resize(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i) data.u0[i] = normal(rng);
  double radius = 0.9 * uniform(rng) * constants.lambda0;
  const double n0 = std::sqrt(grad_energy_seminorm(ops, data.u0));
  if (n0 > 0.0 && radius > 0.0) data.u0 *= radius / n0;
  else data.u0.setZero();

  // Shrink until the potential part leaves room below 0.9 d0.
  double budget = 0.0;
  for (int tries = 0; tries < 200; ++tries) {
    const double src =
        laws.source.enabled
            ? std::pow(boundary_norm(ops, data.u0, gamma + 2.0), gamma + 2.0) /
                  (gamma + 2.0)
            : 0.0;
    const double potential =
        0.5 * laws.mu.mu(0.0) * grad_energy_seminorm(ops, data.u0) - src;
    budget = 0.89 * constants.d0 - potential;
    if (budget > 0.0) break;
    data.u0 *= 0.8;
  }

  data.u1.resize(ops.n_free);
  for (int i = 0; i < ops.n_free; ++i) data.u1[i] = normal(rng);
  const double kinetic_target = uniform(rng) * std::max(budget, 0.0);
  const double k0 = 0.5 * data.u1.dot(ops.M.cwiseProduct(data.u1));
  if (k0 > 0.0 && kinetic_target > 0.0)
    data.u1 *= std::sqrt(kinetic_target / k0);
  else
    data.u1.setZero();
  return data;
}

}  // namespace varwave
