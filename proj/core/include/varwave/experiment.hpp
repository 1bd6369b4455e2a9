#ifndef VARWAVE_EXPERIMENT_HPP
#define VARWAVE_EXPERIMENT_HPP

#include <optional>
#include <string>

#include "varwave/config.hpp"
#include "varwave/diagnostics.hpp"
#include "varwave/dynamics.hpp"
#include "varwave/well.hpp"

namespace varwave {

/// Everything assembled from a config: mesh, operators, laws, controls.
struct Problem {
  Mesh mesh;
  CoefficientField field;
  DiscreteOperators ops;
  LawSet laws;
  RunControls controls;
  int theory_n = 3;
  std::uint64_t seed = 0;
};

Problem build_problem(const SimConfig& config);

/// Initial data per the [initial] section. Well constants are required for
/// the fractional rescale modes.
InitialData build_initial_data(const Problem& problem, const SimConfig& config,
                               const WellConstants* constants);

struct ExperimentResult {
  int exit_code = 0;  // 0 pass, 1 failed assertion, 2 solver failure
  std::string report;
  std::optional<Trajectory> trajectory;
  std::optional<WellConstants> constants;
  std::optional<HypothesisReport> hypotheses;
};

enum class Action { Check, Well, Run, Blowup };

/// Runs the requested pipeline (check -> well -> run -> fit/blowup) and
/// writes the timeseries/report/snapshot files next to output_prefix.
ExperimentResult run_experiment(const SimConfig& config, Action action);

/// Decay fit of a previously written timeseries file, per the config's
/// [analysis] section.
ExperimentResult fit_from_csv(const SimConfig& config, const std::string& csv_path);

}  // namespace varwave

#endif
