#include "varwave/dynamics.hpp"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace varwave {

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::HorizonReached: return "HorizonReached";
    case Termination::BlowupDetected: return "BlowupDetected";
    case Termination::StepFailure: return "StepFailure";
  }
  return "?";
}

namespace {

struct ScalarProblem {
  std::function<double(double)> g;
  std::function<double(double)> gp;
};

// Safeguarded scalar Newton: sign-change bracket by doubling expansion
// around the start, then Newton steps confined to the bracket with
// bisection fallback.  The residual need not be monotone; any root in the
// bracket is acceptable.
std::optional<double> solve_scalar(const ScalarProblem& p, double x0,
                                   double tol, int max_iters, int& iters) {
  double g0 = p.g(x0);
  if (!std::isfinite(g0)) return std::nullopt;
  if (std::abs(g0) <= tol) return x0;

  double a = x0, b = x0, fa = g0;
  double step = std::max(1.0, std::abs(x0));
  bool bracketed = false;
  for (int k = 0; k < 120 && !bracketed; ++k) {
    const double xl = x0 - step, xr = x0 + step;
    step *= 2.0;
    const double gl = p.g(xl);
    if (std::isfinite(gl) && gl * g0 < 0.0) {
      a = xl; fa = gl; b = x0;
      bracketed = true;
      break;
    }
    const double gr = p.g(xr);
    if (std::isfinite(gr) && gr * g0 < 0.0) {
      a = x0; fa = g0; b = xr;
      bracketed = true;
    }
  }
  if (!bracketed) return std::nullopt;

  double x = std::clamp(x0, std::min(a, b), std::max(a, b));
  for (int it = 0; it < max_iters; ++it) {
    ++iters;
    const double gx = p.g(x);
    if (!std::isfinite(gx)) return std::nullopt;
    if (std::abs(gx) <= tol) return x;
    if (gx * fa > 0.0) {
      a = x; fa = gx;
    } else {
      b = x;
    }
    const double lo = std::min(a, b), hi = std::max(a, b);
    const double gpx = p.gp(x);
    double next = (std::isfinite(gpx) && gpx != 0.0) ? x - gx / gpx
                                                     : 0.5 * (lo + hi);
    if (!(next > lo && next < hi) || !std::isfinite(next))
      next = 0.5 * (lo + hi);
    x = next;
  }
  return std::abs(p.g(x)) <= tol ? std::optional<double>(x) : std::nullopt;
}

}  // namespace

struct Stepper::Impl {
  const DiscreteOperators& ops;
  const LawSet& laws;
  double tol;
  int newton_max;
  int max_sweeps;

  bool linear_path;
  double linear_damping = 0.0;  // q slope for the globally linear case

  // Interior/boundary split for the nonlinear path.
  std::vector<int> interior;          // interior free dofs
  std::vector<int> int_index;         // free dof -> interior idx (or -1)
  std::vector<int> bnd_index;         // free dof -> boundary idx (or -1)

  // Cached factorizations keyed by (dt, mu_star).
  double key_dt = -1.0;
  double key_mu = -1.0;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> lin_solver;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> interior_solver;
  Eigen::SparseMatrix<double> S;
  Eigen::SparseMatrix<double> S_IB;  // n_int x n_bnd
  Eigen::SparseMatrix<double> S_BI;  // n_bnd x n_int
  Eigen::MatrixXd S_BB;              // n_bnd x n_bnd

  Impl(const DiscreteOperators& ops_, const LawSet& laws_, double tol_,
       int newton_max_, int max_sweeps_)
      : ops(ops_), laws(laws_), tol(tol_), newton_max(newton_max_),
        max_sweeps(max_sweeps_) {
    linear_path = laws.linear_boundary() || ops.gamma1_dofs.empty();
    if (laws.damping.family == DampingLaw::Family::Linear &&
        laws.damping.rho == 0.0)
      linear_damping = laws.damping.slope;

    int_index.assign(ops.n_free, -1);
    bnd_index.assign(ops.n_free, -1);
    for (std::size_t b = 0; b < ops.gamma1_dofs.size(); ++b)
      bnd_index[ops.gamma1_dofs[b]] = static_cast<int>(b);
    for (int i = 0; i < ops.n_free; ++i) {
      if (bnd_index[i] < 0) {
        int_index[i] = static_cast<int>(interior.size());
        interior.push_back(i);
      }
    }
  }

  Eigen::SparseMatrix<double> system_matrix(double dt, double mu_star) const {
    Eigen::SparseMatrix<double> mat = (0.5 * dt * mu_star) * ops.K;
    Eigen::VectorXd diag = (2.0 / dt) * ops.M;
    if (linear_path) diag += (linear_damping + laws.eta) * ops.B;
    Eigen::SparseMatrix<double> D(ops.n_free, ops.n_free);
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(ops.n_free);
    for (int i = 0; i < ops.n_free; ++i) trip.emplace_back(i, i, diag[i]);
    D.setFromTriplets(trip.begin(), trip.end());
    mat += D;
    return mat;
  }

  void refresh_cache(double dt, double mu_star) {
    if (dt == key_dt && mu_star == key_mu) return;
    if (linear_path) {
      Eigen::SparseMatrix<double> mat = system_matrix(dt, mu_star);
      lin_solver.compute(mat);
      if (lin_solver.info() != Eigen::Success)
        fail(ErrorCode::NewtonFailure, "linear step factorization failed");
    } else {
      S = system_matrix(dt, mu_star);
      const int ni = static_cast<int>(interior.size());
      const int nb = static_cast<int>(ops.gamma1_dofs.size());
      std::vector<Eigen::Triplet<double>> t_ii, t_ib, t_bi;
      S_BB = Eigen::MatrixXd::Zero(nb, nb);
      for (int col = 0; col < S.outerSize(); ++col) {
        for (Eigen::SparseMatrix<double>::InnerIterator it(S, col); it; ++it) {
          const int r = static_cast<int>(it.row());
          const int c = col;
          const int ri = int_index[r], rb = bnd_index[r];
          const int ci = int_index[c], cb = bnd_index[c];
          if (ri >= 0 && ci >= 0) t_ii.emplace_back(ri, ci, it.value());
          else if (ri >= 0 && cb >= 0) t_ib.emplace_back(ri, cb, it.value());
          else if (rb >= 0 && ci >= 0) t_bi.emplace_back(rb, ci, it.value());
          else S_BB(rb, cb) += it.value();
        }
      }
      Eigen::SparseMatrix<double> S_II(ni, ni);
      S_II.setFromTriplets(t_ii.begin(), t_ii.end());
      S_IB.resize(ni, nb);
      S_IB.setFromTriplets(t_ib.begin(), t_ib.end());
      S_BI.resize(nb, ni);
      S_BI.setFromTriplets(t_bi.begin(), t_bi.end());
      interior_solver.compute(S_II);
      if (interior_solver.info() != Eigen::Success)
        fail(ErrorCode::NewtonFailure, "interior factorization failed");
    }
    key_dt = dt;
    key_mu = mu_star;
  }

  Eigen::VectorXd load_vector(double t_star) const {
    Eigen::VectorXd F = Eigen::VectorXd::Zero(ops.n_free);
    if (!laws.forcing.is_zero()) {
      for (int i = 0; i < ops.n_free; ++i)
        F[i] = ops.M[i] * laws.forcing.eval(ops.coords.row(i).transpose(), t_star);
    }
    return F;
  }

  // Boundary residual pieces at the midpoint velocity w:
  // bf_i(w) = B_i (h(u^n_i + dt/2 w_i) - q(w_i) - eta w_i).
  Eigen::VectorXd boundary_terms(const Eigen::VectorXd& un,
                                 const Eigen::VectorXd& w, double dt) const {
    Eigen::VectorXd bf = Eigen::VectorXd::Zero(ops.n_free);
    for (int i : ops.gamma1_dofs) {
      const double u_mid = un[i] + 0.5 * dt * w[i];
      bf[i] = ops.B[i] * (eval_source(laws.source, u_mid) -
                          eval_damping(laws.damping, w[i]) - laws.eta * w[i]);
    }
    return bf;
  }

  Eigen::VectorXd solve_midpoint_velocity(const State& state, double dt,
                                          const Eigen::VectorXd& r,
                                          int& iters) {
    if (linear_path) return lin_solver.solve(r);

    const int nb = static_cast<int>(ops.gamma1_dofs.size());
    const int ni = static_cast<int>(interior.size());
    const double scale = std::max(1.0, r.lpNorm<Eigen::Infinity>());

    Eigen::VectorXd w = state.v;  // predictor
    Eigen::VectorXd wB(nb), rI(ni), rB(nb);
    for (int b = 0; b < nb; ++b) {
      wB[b] = w[ops.gamma1_dofs[b]];
      rB[b] = r[ops.gamma1_dofs[b]];
    }
    for (int i = 0; i < ni; ++i) rI[i] = r[interior[i]];

    Eigen::VectorXd wI(ni);
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
      wI = interior_solver.solve(rI - S_IB * wB);
      const Eigen::VectorXd coupling = S_BI * wI;
      for (int b = 0; b < nb; ++b) {
        const int dof = ops.gamma1_dofs[b];
        double c = rB[b] - coupling[b];
        for (int b2 = 0; b2 < nb; ++b2)
          if (b2 != b) c -= S_BB(b, b2) * wB[b2];
        const double diag = S_BB(b, b);
        const double Bi = ops.B[dof];
        const double u_n = state.u[dof];
        ScalarProblem p;
        p.g = [&, diag, Bi, u_n, c, dt](double x) {
          const double u_mid = u_n + 0.5 * dt * x;
          return diag * x +
                 Bi * (eval_damping(laws.damping, x) + laws.eta * x -
                       eval_source(laws.source, u_mid)) -
                 c;
        };
        p.gp = [&, diag, Bi, u_n, dt](double x) {
          const double u_mid = u_n + 0.5 * dt * x;
          return diag +
                 Bi * (eval_damping_derivative(laws.damping, x) + laws.eta -
                       0.5 * dt * eval_source_derivative(laws.source, u_mid));
        };
        const auto root =
            solve_scalar(p, wB[b], tol * scale, newton_max, iters);
        if (!root)
          fail(ErrorCode::NewtonFailure, "boundary Newton did not converge");
        wB[b] = *root;
      }
      // Assemble the full midpoint velocity and test the coupled residual.
      for (int i = 0; i < ni; ++i) w[interior[i]] = wI[i];
      for (int b = 0; b < nb; ++b) w[ops.gamma1_dofs[b]] = wB[b];
      const Eigen::VectorXd res = S * w - boundary_terms(state.u, w, dt) - r;
      if (res.lpNorm<Eigen::Infinity>() <= tol * scale) return w;
    }
    fail(ErrorCode::NewtonFailure, "interior/boundary sweeps did not converge");
  }
};

Stepper::Stepper(const DiscreteOperators& ops, const LawSet& laws,
                 double newton_tol, int newton_max_iters, int max_sweeps)
    : impl_(std::make_unique<Impl>(ops, laws, newton_tol, newton_max_iters,
                                   max_sweeps)) {}

Stepper::~Stepper() = default;
Stepper::Stepper(Stepper&&) noexcept = default;
Stepper& Stepper::operator=(Stepper&&) noexcept = default;

Stepper::Result Stepper::advance(const State& state, double dt) {
  if (!(dt > 0.0)) fail(ErrorCode::ValidationError, "step needs dt > 0");
  Impl& im = *impl_;
  const DiscreteOperators& ops = im.ops;
  const LawSet& laws = im.laws;

  const double t_star = state.t + 0.5 * dt;
  const double mu_star = laws.mu.mu(t_star);
  im.refresh_cache(dt, mu_star);

  const Eigen::VectorXd F = im.load_vector(t_star);
  Eigen::VectorXd r = (2.0 / dt) * ops.M.cwiseProduct(state.v) -
                      mu_star * (ops.K * state.u) + F;

  Result out;
  Eigen::VectorXd w = im.solve_midpoint_velocity(state, dt, r, out.newton_iters);
  if (!w.allFinite()) fail(ErrorCode::NewtonFailure, "non-finite midpoint solve");

  out.next.t = state.t + dt;
  out.next.u = state.u + dt * w;
  out.next.v = 2.0 * w - state.v;

  for (int i : ops.gamma1_dofs)
    out.dissipation_inc +=
        dt * ops.B[i] *
        (eval_damping(laws.damping, w[i]) * w[i] + laws.eta * w[i] * w[i]);
  if (!laws.forcing.is_zero()) out.f_work_inc = dt * w.dot(F);
  if (!laws.mu.is_constant) {
    // Telescoping form of (1/2) int mu' ||grad_g u||^2: keeps the discrete
    // energy budget exact while matching midpoint quadrature to O(dt^3).
    const double uKu_new = out.next.u.dot(ops.K * out.next.u);
    const double uKu_old = state.u.dot(ops.K * state.u);
    out.mu_work_inc = 0.5 * ((laws.mu.mu(out.next.t) - mu_star) * uKu_new -
                             (laws.mu.mu(state.t) - mu_star) * uKu_old);
  }
  return out;
}

State step(const State& state, double dt, const DiscreteOperators& ops,
           const LawSet& laws) {
  Stepper stepper(ops, laws);
  return stepper.advance(state, dt).next;
}

// ---------------------------------------------------------------------------
// Adaptive run loop
// ---------------------------------------------------------------------------

namespace {

Record make_record(const DiscreteOperators& ops, const LawSet& laws,
                   const State& state, double dt, double diss, double mu_work,
                   double f_work, int newton_iters) {
  Record rec;
  rec.t = state.t;
  rec.dt = dt;
  const double gamma = laws.source.gamma;
  rec.kinetic = 0.5 * state.v.dot(ops.M.cwiseProduct(state.v));
  const double uKu = state.u.dot(ops.K * state.u);
  rec.grad_seminorm = std::sqrt(std::max(0.0, uKu));
  rec.elastic = 0.5 * laws.mu.mu(state.t) * uKu;
  rec.bdry_norm = boundary_norm(ops, state.u, gamma + 2.0);
  rec.source_term = laws.source.enabled
                        ? std::pow(rec.bdry_norm, gamma + 2.0) / (gamma + 2.0)
                        : 0.0;
  rec.E = rec.kinetic + rec.elastic - rec.source_term;
  const double bn_pow = std::pow(rec.bdry_norm, gamma + 2.0);
  rec.J = 0.5 * laws.mu.mu0 * uKu - bn_pow / (gamma + 2.0);
  rec.I = laws.mu.mu0 * uKu - bn_pow;
  rec.N = state.v.dot(ops.M.cwiseProduct(state.u));
  rec.G = -rec.E;  // E1 = 0 until blow-up params are applied
  rec.M_fn = 0.0;
  rec.dissipation_cum = diss;
  rec.mu_work_cum = mu_work;
  rec.f_work_cum = f_work;
  rec.newton_iters = newton_iters;
  rec.u_max = state.u.size() ? state.u.lpNorm<Eigen::Infinity>() : 0.0;
  return rec;
}

// Fit |u|_max ~ C (T - t)^{-kappa} over the trailing records; scans the pole
// location and solves the profile by linear least squares in log variables.
// Records cluster in time near the dt collapse, so keep only records whose
// amplitude differs from the previously kept one by at least 5%.
std::pair<double, double> fit_blowup_time(const std::vector<Record>& records) {
  std::vector<std::pair<double, double>> pts;
  double last_amp = std::numeric_limits<double>::infinity();
  for (auto it = records.rbegin(); it != records.rend() && pts.size() < 20; ++it) {
    if (!(it->u_max > 0.0)) continue;
    if (it->u_max > last_amp / 1.05) continue;
    last_amp = it->u_max;
    pts.emplace_back(it->t, std::log(it->u_max));
  }
  std::reverse(pts.begin(), pts.end());
  const double nan = std::numeric_limits<double>::quiet_NaN();
  if (pts.size() < 3) return {nan, nan};
  const double t_last = pts.back().first;
  const double span = std::max(t_last - pts.front().first, 1e-12);

  auto sse_at = [&](double T) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const auto n = static_cast<double>(pts.size());
    for (const auto& [t, y] : pts) {
      const double x = -std::log(T - t);
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double det = n * sxx - sx * sx;
    if (std::abs(det) < 1e-300) return std::make_pair(1e300, 0.0);
    const double kappa = (n * sxy - sx * sy) / det;
    const double icept = (sy - kappa * sx) / n;
    double sse = 0.0;
    for (const auto& [t, y] : pts) {
      const double fit = icept + kappa * (-std::log(T - t));
      sse += (y - fit) * (y - fit);
    }
    return std::make_pair(sse, kappa);
  };

  double lo = t_last + 1e-9 * std::max(1.0, span);
  double hi = t_last + 2.0 * span;
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = lo, b = hi;
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = sse_at(x1).first, f2 = sse_at(x2).first;
  for (int it = 0; it < 200; ++it) {
    if (f1 < f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = sse_at(x1).first;
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = sse_at(x2).first;
    }
  }
  const double T_est = 0.5 * (a + b);
  return {T_est, sse_at(T_est).second};
}

}  // namespace

Trajectory run(const DiscreteOperators& ops, const LawSet& laws,
               const RunControls& controls, const State& initial) {
  Trajectory traj;
  Stepper stepper(ops, laws, controls.newton_tol, controls.newton_max_iters,
                  controls.max_sweeps);

  State state = initial;
  double diss = 0.0, mu_work = 0.0, f_work = 0.0;
  traj.records.push_back(make_record(ops, laws, state, 0.0, 0, 0, 0, 0));

  std::vector<double> snaps = controls.snapshot_times;
  std::sort(snaps.begin(), snaps.end());
  std::size_t next_snap = 0;
  while (next_snap < snaps.size() && snaps[next_snap] <= state.t) {
    traj.snapshots.push_back({state.t, state.u, state.v});
    ++next_snap;
  }

  double dt = controls.dt0;
  int consecutive = 0;
  long steps_since_record = 0;
  const double t_eps = 1e-12 * std::max(1.0, controls.T);
  bool last_recorded = true;

  while (state.t < controls.T - t_eps) {
    const double dt_try = std::min(dt, controls.T - state.t);
    bool accepted = false;
    Stepper::Result result;
    try {
      result = stepper.advance(state, dt_try);
      const double amp_old = state.u.size() ? state.u.lpNorm<Eigen::Infinity>() : 0.0;
      const double amp_new =
          result.next.u.size() ? result.next.u.lpNorm<Eigen::Infinity>() : 0.0;
      const bool finite = result.next.u.allFinite() && result.next.v.allFinite();
      const bool exploding = amp_old > 1e-8 && amp_new > 10.0 * amp_old;
      accepted = finite && !exploding;
    } catch (const Error& err) {
      if (err.code() != ErrorCode::NewtonFailure) throw;
      accepted = false;
    }

    if (!accepted) {
      ++traj.rejected_steps;
      dt *= 0.5;
      consecutive = 0;
      if (dt < controls.dt_min) {
        const double amp = state.u.size() ? state.u.lpNorm<Eigen::Infinity>() : 0.0;
        if (amp > controls.amp_max) {
          traj.termination = Termination::BlowupDetected;
          std::tie(traj.t_est, traj.t_est_kappa) = fit_blowup_time(traj.records);
        } else {
          traj.termination = Termination::StepFailure;
        }
        break;
      }
      continue;
    }

    state = result.next;
    diss += result.dissipation_inc;
    mu_work += result.mu_work_inc;
    f_work += result.f_work_inc;
    ++traj.total_steps;
    ++consecutive;
    ++steps_since_record;
    last_recorded = false;

    if (steps_since_record >= controls.record_every) {
      traj.records.push_back(make_record(ops, laws, state, dt_try, diss,
                                         mu_work, f_work, result.newton_iters));
      steps_since_record = 0;
      last_recorded = true;
    }
    while (next_snap < snaps.size() && snaps[next_snap] <= state.t + t_eps) {
      traj.snapshots.push_back({state.t, state.u, state.v});
      ++next_snap;
    }
    if (controls.grow && consecutive >= 20) {
      dt = std::min(dt * 1.2, controls.dt_max);
      consecutive = 0;
    }
  }

  if (state.t >= controls.T - t_eps)
    traj.termination = Termination::HorizonReached;
  if (!last_recorded)
    traj.records.push_back(
        make_record(ops, laws, state, dt, diss, mu_work, f_work, 0));
  traj.final_state = state;
  traj.t_end = state.t;
  return traj;
}

}  // namespace varwave
