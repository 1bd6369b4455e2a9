#include "varwave/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace varwave {

namespace {

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? "" : s.substr(b, e - b + 1);
}

struct Cursor {
  int line = 0;
  int column = 0;
};

[[noreturn]] void parse_fail(const Cursor& at, const std::string& what) {
  std::ostringstream os;
  os << "line " << at.line << ", column " << at.column << ": " << what;
  fail(ErrorCode::ParseError, os.str());
}

double to_double(const Cursor& at, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) parse_fail(at, "trailing characters in number '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    parse_fail(at, "expected a number, got '" + v + "'");
  }
}

int to_int(const Cursor& at, const std::string& v) {
  const double x = to_double(at, v);
  if (x != std::floor(x)) parse_fail(at, "expected an integer, got '" + v + "'");
  return static_cast<int>(x);
}

std::uint64_t to_seed(const Cursor& at, const std::string& v) {
  try {
    std::size_t pos = 0;
    const auto x = std::stoull(v, &pos);
    if (pos != v.size()) parse_fail(at, "trailing characters in seed '" + v + "'");
    return x;
  } catch (const std::logic_error&) {
    parse_fail(at, "expected a nonnegative integer seed, got '" + v + "'");
  }
}

bool to_bool(const Cursor& at, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  parse_fail(at, "expected true/false, got '" + v + "'");
}

std::vector<double> to_list(const Cursor& at, const std::string& v) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    cell = trim(cell);
    if (!cell.empty()) out.push_back(to_double(at, cell));
  }
  return out;
}

void check(bool ok, const std::string& what) {
  if (!ok) fail(ErrorCode::ValidationError, what);
}

void validate(const SimConfig& c) {
  check(c.mesh.kind == "interval" || c.mesh.kind == "rectangle",
        "[mesh] kind must be interval or rectangle");
  if (c.mesh.kind == "interval") {
    check(c.mesh.length > 0.0, "[mesh] length must be positive");
    check(c.mesh.cells >= 2, "[mesh] cells must be >= 2");
  } else {
    check(c.mesh.lx > 0.0 && c.mesh.ly > 0.0, "[mesh] sides must be positive");
    check(c.mesh.nx >= 1 && c.mesh.ny >= 1, "[mesh] nx, ny must be >= 1");
  }
  static const char* partitions[] = {"default", "right", "left", "both",
                                     "all_but_left"};
  check(std::any_of(std::begin(partitions), std::end(partitions),
                    [&](const char* p) { return c.mesh.gamma1 == p; }),
        "[mesh] gamma1 must be default|right|left|both|all_but_left");

  check(c.coefficients.kind == "identity" || c.coefficients.kind == "diagonal" ||
            c.coefficients.kind == "scalar_profile",
        "[coefficients] kind must be identity, diagonal or scalar_profile");
  if (c.coefficients.kind == "diagonal") {
    check(!c.coefficients.diag.empty(), "[coefficients] diag entries missing");
    for (double d : c.coefficients.diag)
      check(d > 0.0, "[coefficients] diag entries must be positive");
  }
  if (c.coefficients.kind == "scalar_profile") {
    check(c.coefficients.base > 0.0, "[coefficients] base must be positive");
    check(c.coefficients.quad >= 0.0, "[coefficients] quad must be >= 0");
  }

  check(c.mu.kind == "constant" || c.mu.kind == "exp_decay",
        "[mu] kind must be constant or exp_decay");
  check(c.mu.mu0 > 0.0, "[mu] mu0 must be positive");

  check(c.damping.family == "none" || c.damping.family == "linear" ||
            c.damping.family == "polynomial" || c.damping.family == "flat",
        "[damping] family must be none|linear|polynomial|flat");
  check(c.damping.rho >= 0.0, "[damping] rho must be >= 0");
  if (c.damping.family == "linear")
    check(c.damping.a > 0.0, "[damping] slope a must be positive");
  if (c.damping.family == "polynomial")
    check(c.damping.scale > 0.0, "[damping] scale must be positive");
  if (c.damping.family == "flat")
    check(c.damping.scale > 0.0 && c.damping.scale <= 1.0,
          "[damping] flat scale must lie in (0, 1]");

  check(c.source.theory_n >= 3, "[source] theory_n must be >= 3");
  const double lo = 1.0 / (c.source.theory_n - 2.0);
  const double hi = (c.source.theory_n - 1.0) / (c.source.theory_n - 2.0);
  if (!(c.source.gamma > lo && c.source.gamma <= hi)) {
    std::ostringstream os;
    os << "[source] gamma = " << c.source.gamma
       << " violates the source-exponent hypothesis H4: admissible range ("
       << lo << ", " << hi << "] for n = " << c.source.theory_n;
    fail(ErrorCode::ValidationError, os.str());
  }

  check(c.forcing.kind == "zero" || c.forcing.kind == "gaussian_pulse",
        "[forcing] kind must be zero or gaussian_pulse");
  if (c.forcing.kind == "gaussian_pulse") {
    check(c.forcing.width > 0.0, "[forcing] width must be positive");
    check(!c.forcing.center.empty() && c.forcing.center.size() <= 2,
          "[forcing] center must have 1 or 2 components");
  }

  static const char* u0_modes[] = {"zero", "ramp", "sine", "random"};
  check(std::any_of(std::begin(u0_modes), std::end(u0_modes),
                    [&](const char* m) { return c.initial.u0 == m; }),
        "[initial] u0 must be zero|ramp|sine|random");
  static const char* u1_modes[] = {"zero", "sine", "random"};
  check(std::any_of(std::begin(u1_modes), std::end(u1_modes),
                    [&](const char* m) { return c.initial.u1 == m; }),
        "[initial] u1 must be zero|sine|random");
  if (c.initial.u0_grad_fraction)
    check(*c.initial.u0_grad_fraction > 0.0,
          "[initial] u0_grad_fraction must be positive");
  if (c.initial.u1_energy_fraction)
    check(*c.initial.u1_energy_fraction > 0.0,
          "[initial] u1_energy_fraction must be positive");

  check(c.run.T > 0.0, "[run] T must be positive");
  check(c.run.dt0 > 0.0, "[run] dt0 must be positive");
  check(c.run.dt_min > 0.0, "[run] dt_min must be positive");
  check(c.run.dt_max >= 0.0, "[run] dt_max must be >= 0 (0 = unlimited)");
  check(c.run.amp_max > 0.0, "[run] amp_max must be positive");
  check(c.run.record_every >= 1, "[run] record_every must be >= 1");
  check(c.run.eta >= 0.0, "[run] eta must be >= 0");

  check(c.analysis.fit == "none" || c.analysis.fit == "case1" ||
            c.analysis.fit == "case2" || c.analysis.fit == "case3",
        "[analysis] fit must be none|case1|case2|case3");
  check(c.analysis.tail_fraction > 0.0 && c.analysis.tail_fraction < 1.0,
        "[analysis] tail_fraction must lie in (0, 1)");

  if (c.blowup.chi) check(*c.blowup.chi > 0.0, "[blowup] chi must be positive");
  if (c.blowup.chi_bar)
    check(*c.blowup.chi_bar > 0.0 && *c.blowup.chi_bar < 0.5,
          "[blowup] chi_bar must lie in (0, 1/2)");
  if (c.blowup.tau) check(*c.blowup.tau > 0.0, "[blowup] tau must be positive");
  if (c.blowup.eps8) check(*c.blowup.eps8 > 0.0, "[blowup] eps8 must be positive");
}

}  // namespace

SimConfig parse_config(const std::string& text) {
  SimConfig c;
  std::istringstream in(text);
  std::string raw;
  std::string section;
  Cursor at;

  while (std::getline(in, raw)) {
    ++at.line;
    std::string line = raw;
    if (const auto hash = line.find('#'); hash != std::string::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    at.column = static_cast<int>(raw.find_first_not_of(" \t")) + 1;

    if (line.front() == '[') {
      if (line.back() != ']') parse_fail(at, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      static const char* sections[] = {"mesh",    "coefficients", "mu",
                                       "damping", "source",       "forcing",
                                       "initial", "run",          "analysis",
                                       "blowup"};
      if (!std::any_of(std::begin(sections), std::end(sections),
                       [&](const char* s) { return section == s; }))
        parse_fail(at, "unknown section [" + section + "]");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos) parse_fail(at, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) parse_fail(at, "empty key");
    if (value.empty()) parse_fail(at, "empty value for '" + key + "'");
    if (section.empty()) parse_fail(at, "key '" + key + "' outside any section");

    auto unknown = [&]() -> void {
      parse_fail(at, "unknown key '" + key + "' in [" + section + "]");
    };

    if (section == "mesh") {
      if (key == "kind") c.mesh.kind = value;
      else if (key == "length") c.mesh.length = to_double(at, value);
      else if (key == "cells") c.mesh.cells = to_int(at, value);
      else if (key == "lx") c.mesh.lx = to_double(at, value);
      else if (key == "ly") c.mesh.ly = to_double(at, value);
      else if (key == "nx") c.mesh.nx = to_int(at, value);
      else if (key == "ny") c.mesh.ny = to_int(at, value);
      else if (key == "gamma1") c.mesh.gamma1 = value;
      else unknown();
    } else if (section == "coefficients") {
      if (key == "kind") c.coefficients.kind = value;
      else if (key == "diag") c.coefficients.diag = to_list(at, value);
      else if (key == "base") c.coefficients.base = to_double(at, value);
      else if (key == "quad") c.coefficients.quad = to_double(at, value);
      else unknown();
    } else if (section == "mu") {
      if (key == "kind") c.mu.kind = value;
      else if (key == "mu0") c.mu.mu0 = to_double(at, value);
      else unknown();
    } else if (section == "damping") {
      if (key == "family") c.damping.family = value;
      else if (key == "a") c.damping.a = to_double(at, value);
      else if (key == "rho") c.damping.rho = to_double(at, value);
      else if (key == "scale") c.damping.scale = to_double(at, value);
      else unknown();
    } else if (section == "source") {
      if (key == "gamma") c.source.gamma = to_double(at, value);
      else if (key == "enabled") c.source.enabled = to_bool(at, value);
      else if (key == "theory_n") c.source.theory_n = to_int(at, value);
      else unknown();
    } else if (section == "forcing") {
      if (key == "kind") c.forcing.kind = value;
      else if (key == "center") c.forcing.center = to_list(at, value);
      else if (key == "width") c.forcing.width = to_double(at, value);
      else if (key == "amplitude") c.forcing.amplitude = to_double(at, value);
      else if (key == "decay_rate") c.forcing.decay_rate = to_double(at, value);
      else unknown();
    } else if (section == "initial") {
      if (key == "u0") c.initial.u0 = value;
      else if (key == "u0_scale") c.initial.u0_scale = to_double(at, value);
      else if (key == "u0_mode") c.initial.u0_mode = to_int(at, value);
      else if (key == "u0_grad_fraction")
        c.initial.u0_grad_fraction = to_double(at, value);
      else if (key == "u1") c.initial.u1 = value;
      else if (key == "u1_scale") c.initial.u1_scale = to_double(at, value);
      else if (key == "u1_mode") c.initial.u1_mode = to_int(at, value);
      else if (key == "u1_energy_fraction")
        c.initial.u1_energy_fraction = to_double(at, value);
      else unknown();
    } else if (section == "run") {
      if (key == "T") c.run.T = to_double(at, value);
      else if (key == "dt0") c.run.dt0 = to_double(at, value);
      else if (key == "dt_min") c.run.dt_min = to_double(at, value);
      else if (key == "dt_max") c.run.dt_max = to_double(at, value);
      else if (key == "amp_max") c.run.amp_max = to_double(at, value);
      else if (key == "record_every") c.run.record_every = to_int(at, value);
      else if (key == "grow") c.run.grow = to_bool(at, value);
      else if (key == "seed") c.run.seed = to_seed(at, value);
      else if (key == "eta") c.run.eta = to_double(at, value);
      else if (key == "snapshot_times") c.run.snapshot_times = to_list(at, value);
      else if (key == "mesh_dump") c.run.mesh_dump = to_bool(at, value);
      else if (key == "output_prefix") c.run.output_prefix = value;
      else unknown();
    } else if (section == "analysis") {
      if (key == "well") c.analysis.well = to_bool(at, value);
      else if (key == "fit") c.analysis.fit = value;
      else if (key == "blowup") c.analysis.blowup = to_bool(at, value);
      else if (key == "tail_fraction")
        c.analysis.tail_fraction = to_double(at, value);
      else if (key == "escape") c.analysis.escape = to_bool(at, value);
      else if (key == "escape_x0") c.analysis.escape_x0 = to_list(at, value);
      else unknown();
    } else if (section == "blowup") {
      if (key == "E1") c.blowup.E1 = to_double(at, value);
      else if (key == "chi") c.blowup.chi = to_double(at, value);
      else if (key == "chi_bar") c.blowup.chi_bar = to_double(at, value);
      else if (key == "tau") c.blowup.tau = to_double(at, value);
      else if (key == "eps8") c.blowup.eps8 = to_double(at, value);
      else unknown();
    }
  }

  validate(c);
  return c;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open config " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  SimConfig c = parse_config(buf.str());
  if (c.run.output_prefix.empty()) {
    std::string stem = path;
    if (const auto slash = stem.find_last_of('/'); slash != std::string::npos)
      stem = stem.substr(slash + 1);
    if (const auto dot = stem.find_last_of('.'); dot != std::string::npos)
      stem = stem.substr(0, dot);
    c.run.output_prefix = stem;
  }
  return c;
}

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += num(v[i]);
  }
  return out;
}

}  // namespace

std::string serialize_config(const SimConfig& c) {
  std::ostringstream os;
  os << "[mesh]\n";
  os << "kind = " << c.mesh.kind << "\n";
  if (c.mesh.kind == "interval") {
    os << "length = " << num(c.mesh.length) << "\n";
    os << "cells = " << c.mesh.cells << "\n";
  } else {
    os << "lx = " << num(c.mesh.lx) << "\nly = " << num(c.mesh.ly) << "\n";
    os << "nx = " << c.mesh.nx << "\nny = " << c.mesh.ny << "\n";
  }
  os << "gamma1 = " << c.mesh.gamma1 << "\n";

  os << "\n[coefficients]\nkind = " << c.coefficients.kind << "\n";
  if (c.coefficients.kind == "diagonal")
    os << "diag = " << list(c.coefficients.diag) << "\n";
  if (c.coefficients.kind == "scalar_profile") {
    os << "base = " << num(c.coefficients.base) << "\n";
    os << "quad = " << num(c.coefficients.quad) << "\n";
  }

  os << "\n[mu]\nkind = " << c.mu.kind << "\nmu0 = " << num(c.mu.mu0) << "\n";

  os << "\n[damping]\nfamily = " << c.damping.family << "\n";
  os << "a = " << num(c.damping.a) << "\n";
  os << "rho = " << num(c.damping.rho) << "\n";
  os << "scale = " << num(c.damping.scale) << "\n";

  os << "\n[source]\ngamma = " << num(c.source.gamma) << "\n";
  os << "enabled = " << (c.source.enabled ? "true" : "false") << "\n";
  os << "theory_n = " << c.source.theory_n << "\n";

  os << "\n[forcing]\nkind = " << c.forcing.kind << "\n";
  if (c.forcing.kind == "gaussian_pulse") {
    os << "center = " << list(c.forcing.center) << "\n";
    os << "width = " << num(c.forcing.width) << "\n";
    os << "amplitude = " << num(c.forcing.amplitude) << "\n";
    os << "decay_rate = " << num(c.forcing.decay_rate) << "\n";
  }

  os << "\n[initial]\nu0 = " << c.initial.u0 << "\n";
  os << "u0_scale = " << num(c.initial.u0_scale) << "\n";
  os << "u0_mode = " << c.initial.u0_mode << "\n";
  if (c.initial.u0_grad_fraction)
    os << "u0_grad_fraction = " << num(*c.initial.u0_grad_fraction) << "\n";
  os << "u1 = " << c.initial.u1 << "\n";
  os << "u1_scale = " << num(c.initial.u1_scale) << "\n";
  os << "u1_mode = " << c.initial.u1_mode << "\n";
  if (c.initial.u1_energy_fraction)
    os << "u1_energy_fraction = " << num(*c.initial.u1_energy_fraction) << "\n";

  os << "\n[run]\nT = " << num(c.run.T) << "\n";
  os << "dt0 = " << num(c.run.dt0) << "\n";
  os << "dt_min = " << num(c.run.dt_min) << "\n";
  os << "dt_max = " << num(c.run.dt_max) << "\n";
  os << "amp_max = " << num(c.run.amp_max) << "\n";
  os << "record_every = " << c.run.record_every << "\n";
  os << "grow = " << (c.run.grow ? "true" : "false") << "\n";
  os << "seed = " << c.run.seed << "\n";
  os << "eta = " << num(c.run.eta) << "\n";
  if (!c.run.snapshot_times.empty())
    os << "snapshot_times = " << list(c.run.snapshot_times) << "\n";
  os << "mesh_dump = " << (c.run.mesh_dump ? "true" : "false") << "\n";
  if (!c.run.output_prefix.empty())
    os << "output_prefix = " << c.run.output_prefix << "\n";

  os << "\n[analysis]\nwell = " << (c.analysis.well ? "true" : "false") << "\n";
  os << "fit = " << c.analysis.fit << "\n";
  os << "blowup = " << (c.analysis.blowup ? "true" : "false") << "\n";
  os << "tail_fraction = " << num(c.analysis.tail_fraction) << "\n";
  os << "escape = " << (c.analysis.escape ? "true" : "false") << "\n";
  if (!c.analysis.escape_x0.empty())
    os << "escape_x0 = " << list(c.analysis.escape_x0) << "\n";

  const auto& b = c.blowup;
  if (b.E1 || b.chi || b.chi_bar || b.tau || b.eps8) {
    os << "\n[blowup]\n";
    if (b.E1) os << "E1 = " << num(*b.E1) << "\n";
    if (b.chi) os << "chi = " << num(*b.chi) << "\n";
    if (b.chi_bar) os << "chi_bar = " << num(*b.chi_bar) << "\n";
    if (b.tau) os << "tau = " << num(*b.tau) << "\n";
    if (b.eps8) os << "eps8 = " << num(*b.eps8) << "\n";
  }
  return os.str();
}

}  // namespace varwave
