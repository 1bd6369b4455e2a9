// varwave: simulate the variable-coefficient wave equation with nonlinear
// boundary damping and a boundary source, compute potential-well thresholds,
// verify energy budgets and decay laws, and certify finite-time blow-up.
//
// Subcommands:
//   check  <config>        hypothesis report and regime classification
//   well   <config>        potential-well constants and blow-up thresholds
//   run    <config>        integrate and write timeseries/report/snapshots
//   fit    <config> <csv>  decay-law fit of a previously written timeseries
//   blowup <config>        run plus the blow-up certificate
//
// Exit codes: 0 pass, 1 failed assertion, 2 solver/configuration failure.

#include <CLI11.hpp>
#include <iostream>

#include "varwave/experiment.hpp"

namespace {

int dispatch(const std::string& path, varwave::Action action) {
  try {
    const varwave::SimConfig config = varwave::load_config(path);
    const varwave::ExperimentResult result =
        varwave::run_experiment(config, action);
    std::cout << result.report;
    return result.exit_code;
  } catch (const varwave::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"variable-coefficient wave equation laboratory"};
  app.require_subcommand(1);

  std::string config_path, csv_path;

  auto* check = app.add_subcommand("check", "validate hypotheses and classify");
  check->add_option("config", config_path, "config file")->required();

  auto* well = app.add_subcommand("well", "potential-well constants");
  well->add_option("config", config_path, "config file")->required();

  auto* run = app.add_subcommand("run", "integrate the semidiscrete system");
  run->add_option("config", config_path, "config file")->required();

  auto* fit = app.add_subcommand("fit", "decay fit of a timeseries file");
  fit->add_option("config", config_path, "config file")->required();
  fit->add_option("csv", csv_path, "timeseries CSV")->required();

  auto* blowup = app.add_subcommand("blowup", "blow-up certificate run");
  blowup->add_option("config", config_path, "config file")->required();

  CLI11_PARSE(app, argc, argv);

  if (check->parsed()) return dispatch(config_path, varwave::Action::Check);
  if (well->parsed()) return dispatch(config_path, varwave::Action::Well);
  if (run->parsed()) return dispatch(config_path, varwave::Action::Run);
  if (blowup->parsed()) return dispatch(config_path, varwave::Action::Blowup);
  if (fit->parsed()) {
    try {
      const varwave::SimConfig config = varwave::load_config(config_path);
      const varwave::ExperimentResult result =
          varwave::fit_from_csv(config, csv_path);
      std::cout << result.report;
      return result.exit_code;
    } catch (const varwave::Error& err) {
      std::cerr << "error: " << err.what() << "\n";
      return 2;
    }
  }
  return 2;
}
