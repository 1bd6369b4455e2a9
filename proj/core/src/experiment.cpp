#include "varwave/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

#include "varwave/csv.hpp"

namespace varwave {

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

MeshSpec::Partition partition_of(const std::string& name) {
  using P = MeshSpec::Partition;
  if (name == "default") return P::Default;
  if (name == "right") return P::Gamma1Right;
  if (name == "left") return P::Gamma1Left;
  if (name == "both") return P::Gamma1Both;
  return P::Gamma1AllButLeft;
}

const char* status_name(CheckStatus s) {
  switch (s) {
    case CheckStatus::Pass: return "pass";
    case CheckStatus::Warn: return "warn";
    case CheckStatus::Fail: return "fail";
  }
  return "?";
}

void print_hypotheses(std::ostream& os, const HypothesisReport& report) {
  os << "== hypothesis report ==\n";
  for (const auto& e : report.entries)
    os << e.id << ": " << status_name(e.status) << "  " << e.detail << "\n";
  os << "regime: " << regime_name(report.regime) << "\n";
}

}  // namespace

Problem build_problem(const SimConfig& config) {
  Problem p;
  MeshSpec spec;
  if (config.mesh.kind == "interval") {
    spec = MeshSpec::interval(config.mesh.length, config.mesh.cells,
                              partition_of(config.mesh.gamma1));
  } else {
    spec = MeshSpec::rectangle(config.mesh.lx, config.mesh.ly, config.mesh.nx,
                               config.mesh.ny, partition_of(config.mesh.gamma1));
  }
  p.mesh = build_mesh(spec);

  if (config.coefficients.kind == "identity") {
    p.field = CoefficientField::identity(p.mesh.dim);
  } else if (config.coefficients.kind == "diagonal") {
    if (static_cast<int>(config.coefficients.diag.size()) != p.mesh.dim)
      fail(ErrorCode::ValidationError,
           "[coefficients] diag size must match the mesh dimension");
    Eigen::VectorXd d(p.mesh.dim);
    for (int i = 0; i < p.mesh.dim; ++i) d[i] = config.coefficients.diag[i];
    p.field = CoefficientField::diagonal(d);
  } else {
    p.field = CoefficientField::scalar_profile(p.mesh.dim, config.coefficients.base,
                                               config.coefficients.quad);
  }
  p.field.c1 = ellipticity_constant(p.field, p.mesh);
  p.ops = assemble_operators(p.mesh, p.field);

  p.laws.mu = config.mu.kind == "constant" ? TimeWeight::constant(config.mu.mu0)
                                           : TimeWeight::exp_decay(config.mu.mu0);
  const auto& d = config.damping;
  if (d.family == "none") p.laws.damping = DampingLaw::none();
  else if (d.family == "linear") p.laws.damping = DampingLaw::linear(d.a, d.rho);
  else if (d.family == "polynomial")
    p.laws.damping = DampingLaw::polynomial(d.rho, d.scale);
  else p.laws.damping = DampingLaw::flat(d.rho, d.scale);

  p.laws.source.gamma = config.source.gamma;
  p.laws.source.enabled = config.source.enabled;

  if (config.forcing.kind == "zero") {
    p.laws.forcing = ForcingLaw::zero();
  } else {
    Eigen::Vector2d center = Eigen::Vector2d::Zero();
    for (std::size_t i = 0; i < config.forcing.center.size() && i < 2; ++i)
      center[static_cast<int>(i)] = config.forcing.center[i];
    p.laws.forcing = ForcingLaw::gaussian_pulse(center, config.forcing.width,
                                                config.forcing.amplitude,
                                                config.forcing.decay_rate);
  }
  p.laws.eta = config.run.eta;

  p.controls.T = config.run.T;
  p.controls.dt0 = config.run.dt0;
  p.controls.dt_min = config.run.dt_min;
  p.controls.dt_max = config.run.dt_max > 0.0
                          ? config.run.dt_max
                          : std::numeric_limits<double>::infinity();
  p.controls.amp_max = config.run.amp_max;
  p.controls.record_every = config.run.record_every;
  p.controls.grow = config.run.grow;
  p.controls.snapshot_times = config.run.snapshot_times;
  p.theory_n = config.source.theory_n;
  p.seed = config.run.seed;
  return p;
}

namespace {

Eigen::VectorXd nodal_profile(const Problem& p, const std::string& mode,
                              double scale, int wavenumber, std::uint64_t seed) {
  const auto& ops = p.ops;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(ops.n_free);
  if (mode == "zero") return u;
  if (mode == "ramp") {
    for (int i = 0; i < ops.n_free; ++i) u[i] = scale * ops.coords(i, 0);
    return u;
  }
  if (mode == "sine") {
    const double lx = p.mesh.nodes.col(0).maxCoeff();
    for (int i = 0; i < ops.n_free; ++i) {
      double v = std::sin(wavenumber * std::numbers::pi * ops.coords(i, 0) / lx);
      if (ops.dim == 2) {
        const double ly = p.mesh.nodes.col(1).maxCoeff();
        v *= std::sin(wavenumber * std::numbers::pi * ops.coords(i, 1) / ly);
      }
      u[i] = scale * v;
    }
    return u;
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  for (int i = 0; i < ops.n_free; ++i) u[i] = scale * uni(rng);
  return u;
}

}  // namespace

InitialData build_initial_data(const Problem& problem, const SimConfig& config,
                               const WellConstants* constants) {
  InitialData data;
  data.u0 = nodal_profile(problem, config.initial.u0, config.initial.u0_scale,
                          config.initial.u0_mode, derive_seed(problem.seed, 11));
  data.u1 = nodal_profile(problem, config.initial.u1, config.initial.u1_scale,
                          config.initial.u1_mode, derive_seed(problem.seed, 13));

  if (config.initial.u0_grad_fraction) {
    if (constants == nullptr)
      fail(ErrorCode::ValidationError,
           "[initial] u0_grad_fraction needs the well analysis enabled");
    const double target = *config.initial.u0_grad_fraction * constants->lambda0;
    const double norm = std::sqrt(grad_energy_seminorm(problem.ops, data.u0));
    if (norm <= 0.0)
      fail(ErrorCode::ValidationError, "u0_grad_fraction needs nonzero u0");
    data.u0 *= target / norm;
  }
  if (config.initial.u1_energy_fraction) {
    if (constants == nullptr)
      fail(ErrorCode::ValidationError,
           "[initial] u1_energy_fraction needs the well analysis enabled");
    const double gamma = problem.laws.source.gamma;
    const double src =
        problem.laws.source.enabled
            ? std::pow(boundary_norm(problem.ops, data.u0, gamma + 2.0), gamma + 2.0) /
                  (gamma + 2.0)
            : 0.0;
    const double potential = 0.5 * problem.laws.mu.mu(0.0) *
                                 grad_energy_seminorm(problem.ops, data.u0) -
                             src;
    const double target = *config.initial.u1_energy_fraction * constants->d0;
    const double kinetic = target - potential;
    if (kinetic < 0.0)
      fail(ErrorCode::ValidationError,
           "[initial] requested energy fraction below the potential energy of u0");
    const double k0 = 0.5 * data.u1.dot(problem.ops.M.cwiseProduct(data.u1));
    if (k0 > 0.0) data.u1 *= std::sqrt(kinetic / k0);
  }
  return data;
}

namespace {

struct Pipeline {
  SimConfig config;
  Problem problem;
  WellConstants constants;
  InitialData initial;
  HypothesisReport hypotheses;
  Classification classification;
  std::ostringstream report;
  int exit_code = 0;

  void fail_assertion() { exit_code = std::max(exit_code, 1); }

  void prepare() {
    problem = build_problem(config);
    const double K0 = estimate_K0(problem.ops, problem.laws.source.gamma, 16,
                                  1e-10, derive_seed(problem.seed, 7));
    constants = well_constants(K0, problem.laws.mu.mu0, problem.laws.source.gamma);
    initial = build_initial_data(problem, config, &constants);
    hypotheses = validate_hypotheses(problem.laws, problem.theory_n, problem.mesh,
                                     problem.ops, &initial, &constants);
    classification = classify_initial_data(initial.u0, initial.u1, problem.ops,
                                           problem.laws, constants);
    if (config.analysis.escape || !config.analysis.escape_x0.empty()) {
      Eigen::VectorXd x0 = Eigen::VectorXd::Zero(problem.mesh.dim);
      for (std::size_t i = 0;
           i < config.analysis.escape_x0.size() &&
           i < static_cast<std::size_t>(problem.mesh.dim);
           ++i)
        x0[static_cast<Eigen::Index>(i)] = config.analysis.escape_x0[i];
      EscapeField H = EscapeField::radial(problem.mesh.dim, x0);
      const EscapeReport er = check_escape_field(
          H, problem.field, problem.mesh, problem.laws.source.gamma, 8,
          derive_seed(problem.seed, 17));
      for (auto& e : hypotheses.entries) {
        if (e.id != "divergence-pinch") continue;
        e.status = er.div_condition_ok ? CheckStatus::Pass : CheckStatus::Fail;
        std::ostringstream os;
        os << "sigma = " << num(er.sigma) << ", div H in [" << num(er.div_min)
           << ", " << num(er.div_max) << "], bound " << num(er.div_upper_bound)
           << ", delta = " << num(er.delta)
           << (er.sample_based ? " (sample-based covariant estimate)" : "");
        e.detail = os.str();
        e.evidence = er.sigma;
      }
    }
  }

  void emit_check(bool fails_count) {
    print_hypotheses(report, hypotheses);
    // Hypothesis violations gate the `check` verdict only: desk-scale runs
    // deliberately sit outside the dimension-dependent hypotheses while the
    // run/blowup verdicts come from their own monitors.
    if (fails_count && hypotheses.any_fail()) fail_assertion();
  }

  void emit_well() {
    report << "\n== well constants ==\n";
    report << "K0 = " << num(constants.K0) << "\n";
    report << "lambda0 = " << num(constants.lambda0) << "\n";
    report << "d0 = " << num(constants.d0) << "\n";
    report << "E0 = " << num(classification.E0) << "\n";
    report << "grad_norm_u0 = " << num(classification.grad_norm) << "\n";
    report << "beta_inv_1 = " << num(classification.beta_inv_1) << "\n";
    try {
      const double E1 = choose_E1(classification.E0, constants.d0);
      const double bound = blowup_smallness_bound(
          constants.mu0, constants.lambda0, constants.gamma, E1,
          problem.ops.gamma1_measure);
      report << "E1 = " << num(E1) << "\n";
      report << "smallness_bound = " << num(bound) << "\n";
      if (classification.beta_inv_1 <= bound) {
        const BlowupParams params = make_blowup_params(
            constants.mu0, constants.lambda0, constants.gamma,
            problem.laws.damping.rho, E1, problem.ops.gamma1_measure,
            classification.beta_inv_1);
        report << "eps8_window = [" << num(params.window_lo) << ", "
               << num(params.window_hi) << "]\n";
        report << "eps8 = " << num(params.eps8) << "\n";
      } else {
        report << "eps8_window = empty (smallness condition fails)\n";
      }
    } catch (const Error& err) {
      report << "blowup_thresholds = n/a (" << err.what() << ")\n";
    }
    report << "classification = " << regime_name(classification.regime) << "\n";
  }

  Trajectory integrate() {
    State state;
    state.t = 0.0;
    state.u = initial.u0;
    state.v = initial.u1;
    return run(problem.ops, problem.laws, problem.controls, state);
  }

  void emit_run_summary(const Trajectory& traj) {
    report << "\n== run ==\n";
    report << "termination = " << termination_name(traj.termination) << "\n";
    report << "t_end = " << num(traj.t_end) << "\n";
    report << "steps = " << traj.total_steps << " (rejected "
           << traj.rejected_steps << ")\n";
    report << "records = " << traj.records.size() << "\n";
    if (traj.termination == Termination::BlowupDetected) {
      report << "T_est = " << num(traj.t_est)
             << " (heuristic amplitude extrapolation)\n";
      report << "kappa = " << num(traj.t_est_kappa) << "\n";
    }
    if (traj.termination == Termination::StepFailure) exit_code = 2;
  }

  void write_outputs(Trajectory& traj) {
    const std::string prefix = config.run.output_prefix.empty()
                                   ? std::string("varwave")
                                   : config.run.output_prefix;
    write_timeseries(traj, prefix + "_timeseries.csv");
    report << "timeseries = " << prefix + "_timeseries.csv" << "\n";
    if (config.run.mesh_dump) {
      write_mesh_dump(problem.mesh, prefix + "_mesh.txt");
      report << "mesh = " << prefix + "_mesh.txt" << "\n";
    }
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
      std::ostringstream name;
      name << prefix << "_snap" << k << ".txt";
      write_snapshot(problem.mesh, traj.snapshots[k], name.str());
      report << "snapshot = " << name.str() << "\n";
    }
    std::ofstream rep(prefix + "_report.txt");
    if (!rep) fail(ErrorCode::IoError, "cannot write report for " + prefix);
    rep << report.str();
  }

  void emit_fit(const Trajectory& traj) {
    if (config.analysis.fit == "none") return;
    Eigen::VectorXd t(static_cast<Eigen::Index>(traj.records.size()));
    Eigen::VectorXd E(t.size());
    for (Eigen::Index i = 0; i < t.size(); ++i) {
      t[i] = traj.records[static_cast<std::size_t>(i)].t;
      E[i] = traj.records[static_cast<std::size_t>(i)].E;
    }
    emit_fit_series(t, E);
  }

  void emit_fit_series(const Eigen::VectorXd& t, const Eigen::VectorXd& E) {
    DecayFitOptions options;
    options.tail_fraction = config.analysis.tail_fraction;
    options.rho = problem.laws.damping.rho;
    options.beta = problem.laws.damping.beta;
    const DecayCase which = config.analysis.fit == "case1"
                                ? DecayCase::Exponential
                                : config.analysis.fit == "case2"
                                      ? DecayCase::Polynomial
                                      : DecayCase::General;
    report << "\n== decay fit ==\n";
    try {
      const DecayFitResult fit = fit_decay(t, E, which, options);
      report << "case = " << decay_case_name(fit.decay_case) << "\n";
      report << "rate = " << num(fit.fitted_rate) << "\n";
      report << "constant = " << num(fit.calibration_constant) << "\n";
      report << "window = [" << num(fit.tail_window.first) << ", "
             << num(fit.tail_window.second) << "]\n";
      report << "r2 = " << num(fit.residual_r2) << "\n";
      report << "pass = " << (fit.pass ? "true" : "false") << "\n";
      // CSV row: case, rate, constant, window, pass, r2.
      report << "csv = " << decay_case_name(fit.decay_case) << ","
             << num(fit.fitted_rate) << "," << num(fit.calibration_constant)
             << "," << num(fit.tail_window.first) << ","
             << num(fit.tail_window.second) << ","
             << (fit.pass ? "true" : "false") << "," << num(fit.residual_r2)
             << "\n";
      if (!fit.pass) fail_assertion();
    } catch (const Error& err) {
      report << "error = " << err.what() << "\n";
      fail_assertion();
    }
  }

  void emit_blowup(Trajectory& traj) {
    report << "\n== blowup certificate ==\n";
    try {
      const double E1 = config.blowup.E1
                            ? *config.blowup.E1
                            : choose_E1(classification.E0, constants.d0);
      BlowupParamOverrides ov;
      ov.chi = config.blowup.chi;
      ov.chi_bar = config.blowup.chi_bar;
      ov.tau = config.blowup.tau;
      ov.eps8 = config.blowup.eps8;
      const BlowupParams params = make_blowup_params(
          constants.mu0, constants.lambda0, constants.gamma,
          problem.laws.damping.rho, E1, problem.ops.gamma1_measure,
          problem.laws.damping.beta_inverse_at_1, ov);
      report << "E1 = " << num(params.E1) << "\n";
      report << "eps8 = " << num(params.eps8) << " in [" << num(params.window_lo)
             << ", " << num(params.window_hi) << "]\n";
      report << "chi = " << num(params.chi) << ", chi_bar = " << num(params.chi_bar)
             << "\n";

      const BlowupSeries series = blowup_series(traj, params, true);
      apply_blowup_series(traj, series);
      report << "tau = " << num(series.tau) << "\n";

      bool g_monotone = true;
      for (Eigen::Index i = 1; i < series.G.size(); ++i)
        if (series.G[i] < series.G[i - 1] - 1e-9 * std::max(1.0, series.G[i - 1]))
          g_monotone = false;
      report << "G_monotone = " << (g_monotone ? "pass" : "fail") << "\n";
      if (!g_monotone) fail_assertion();

      const TrapReport above = trapping_monitor(traj, constants, TrapMode::Above);
      report << "above_monitor = " << (above.pass ? "pass" : "fail") << "\n";
      if (!above.pass) fail_assertion();

      const MGrowthResult growth = verify_M_growth(series.t, series.M, params.chi_bar);
      report << "M_growth_c = " << num(growth.c_fit) << " "
             << (growth.pass ? "pass" : "fail") << "\n";
      if (!growth.pass) fail_assertion();

      if (traj.termination != Termination::BlowupDetected) {
        report << "blowup_detected = fail (termination "
               << termination_name(traj.termination) << ")\n";
        fail_assertion();
      } else {
        report << "blowup_detected = pass\n";
      }
    } catch (const Error& err) {
      report << "error = " << err.what() << "\n";
      fail_assertion();
    }
  }
};

}  // namespace

ExperimentResult run_experiment(const SimConfig& config, Action action) {
  Pipeline pipe;
  pipe.config = config;
  ExperimentResult result;
  try {
    pipe.prepare();
    pipe.emit_check(action == Action::Check);
    if (action == Action::Well || action == Action::Run ||
        action == Action::Blowup || config.analysis.well)
      pipe.emit_well();
    if (action == Action::Run || action == Action::Blowup) {
      Trajectory traj = pipe.integrate();
      pipe.emit_run_summary(traj);
      if (action == Action::Blowup || config.analysis.blowup)
        pipe.emit_blowup(traj);
      pipe.emit_fit(traj);
      pipe.write_outputs(traj);
      result.trajectory = std::move(traj);
    }
    result.constants = pipe.constants;
    result.hypotheses = pipe.hypotheses;
  } catch (const Error& err) {
    pipe.report << "error: " << err.what() << "\n";
    pipe.exit_code = 2;
  }
  result.exit_code = pipe.exit_code;
  result.report = pipe.report.str();
  return result;
}

ExperimentResult fit_from_csv(const SimConfig& config,
                              const std::string& csv_path) {
  Pipeline pipe;
  pipe.config = config;
  ExperimentResult result;
  try {
    pipe.problem = build_problem(config);
    const TimeseriesData data = read_timeseries(csv_path);
    pipe.emit_fit_series(data.series("t"), data.series("E"));
  } catch (const Error& err) {
    pipe.report << "error: " << err.what() << "\n";
    pipe.exit_code = 2;
  }
  result.exit_code = pipe.exit_code;
  result.report = pipe.report.str();
  return result;
}

}  // namespace varwave
