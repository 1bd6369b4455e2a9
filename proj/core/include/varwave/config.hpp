#ifndef VARWAVE_CONFIG_HPP
#define VARWAVE_CONFIG_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "varwave/common.hpp"

namespace varwave {

/// Parsed experiment description: sectioned key-value text
/// ([mesh], [coefficients], [mu], [damping], [source], [forcing], [initial],
/// [run], [analysis], [blowup]), `key = value` lines, `#` comments.
/// Unknown keys are errors; numeric ranges are validated at load.
struct SimConfig {
  struct MeshSection {
    std::string kind = "interval";  // interval | rectangle
    double length = 1.0;            // interval
    int cells = 64;
    double lx = 1.0, ly = 1.0;      // rectangle
    int nx = 8, ny = 8;
    std::string gamma1 = "default";  // default|right|left|both|all_but_left
  } mesh;

  struct CoefficientsSection {
    std::string kind = "identity";  // identity | diagonal | scalar_profile
    std::vector<double> diag;       // diagonal entries
    double base = 1.0;              // scalar_profile: base + quad |x|^2
    double quad = 0.0;
  } coefficients;

  struct MuSection {
    std::string kind = "constant";  // constant | exp_decay
    double mu0 = 1.0;
  } mu;

  struct DampingSection {
    std::string family = "linear";  // none | linear | polynomial | flat
    double a = 1.0;                 // linear slope
    double rho = 0.0;
    double scale = 1.0;             // polynomial / flat prefactor
  } damping;

  struct SourceSection {
    double gamma = 2.0;
    bool enabled = true;
    int theory_n = 3;  // ambient dimension used by the hypothesis checks
  } source;

  struct ForcingSection {
    std::string kind = "zero";  // zero | gaussian_pulse
    std::vector<double> center = {0.5};
    double width = 0.1;
    double amplitude = 1.0;
    double decay_rate = 1.0;
  } forcing;

  struct InitialSection {
    std::string u0 = "zero";  // zero | ramp | sine | random
    double u0_scale = 1.0;
    int u0_mode = 1;                        // sine wavenumber
    std::optional<double> u0_grad_fraction;  // rescale: ||grad u0|| = f*lambda0
    std::string u1 = "zero";  // zero | sine | random
    double u1_scale = 0.0;
    int u1_mode = 1;
    std::optional<double> u1_energy_fraction;  // rescale: E(0) = f*d0
  } initial;

  struct RunSection {
    double T = 1.0;
    double dt0 = 1e-3;
    double dt_min = 1e-12;
    double dt_max = 0.0;  // 0 = unlimited
    double amp_max = 1e8;
    int record_every = 1;
    bool grow = true;
    std::uint64_t seed = 0;
    double eta = 0.0;
    std::vector<double> snapshot_times;
    bool mesh_dump = false;  // write <prefix>_mesh.txt
    std::string output_prefix;  // default: config file stem
  } run;

  struct AnalysisSection {
    bool well = false;
    std::string fit = "none";  // none | case1 | case2 | case3
    bool blowup = false;
    double tail_fraction = 0.6;
    bool escape = false;
    std::vector<double> escape_x0;  // radial field origin
  } analysis;

  struct BlowupSection {
    std::optional<double> E1;
    std::optional<double> chi;
    std::optional<double> chi_bar;
    std::optional<double> tau;
    std::optional<double> eps8;
  } blowup;
};

/// Parse the sectioned key-value text. Throws Error(ParseError) with
/// line/column on malformed or unknown input, Error(ValidationError) when a
/// value violates its admissible range.
SimConfig parse_config(const std::string& text);

SimConfig load_config(const std::string& path);

/// Canonical text form; parse(serialize(c)) is semantically identical to c.
std::string serialize_config(const SimConfig& config);

}  // namespace varwave

#endif
