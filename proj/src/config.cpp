#include "nlch/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "nlch/error.hpp"

namespace nlch {

SchemeParams RunConfig::scheme_params() const {
  SchemeParams s;
  s.dt = dt;
  s.solver = solver;
  s.tol = tol;
  s.max_iter = max_iter;
  s.damping = damping;
  s.stagnation_tol = stagnation_tol;
  s.convolution = convolution;
  return s;
}

KernelSpec RunConfig::kernel_spec() const {
  KernelSpec k;
  k.shape = kernel_shape;
  k.support_radius = kernel_radius;
  k.scaling = kernel_scaling;
  return k;
}

double RunConfig::step_size() const {
  if (scheme == SchemeKind::bound_preserving) return dt;
  if (naive_dt > 0.0) return naive_dt;
  const double h = length / n;
  return 0.2 * h * h;
}

void validate(const RunConfig& c) {
  auto fail = [](const std::string& key, const std::string& why) {
    throw ConfigError(key + ": " + why);
  };
  if (c.n < 2) fail("n", "must be at least 2");
  if (!(c.length > 0.0) || !std::isfinite(c.length)) fail("length", "must be positive");
  if (!(c.beta > 0.0) || !std::isfinite(c.beta)) fail("beta", "must be positive");
  if (!(c.dt > 0.0) || !std::isfinite(c.dt)) fail("dt", "must be positive");
  if (!(c.t_final > 0.0) || !std::isfinite(c.t_final)) fail("t_final", "must be positive");
  if (!(c.amplitude > 0.0 && c.amplitude < 1.0)) fail("amplitude", "must lie in (0, 1)");
  if (!(c.kernel_scaling > 0.0)) fail("kernel_scaling", "must be positive");
  if (c.kernel_shape == KernelShape::table) {
    if (c.kernel_table.empty()) fail("kernel_table", "required when kernel_shape = table");
  } else {
    const double r = c.kernel_radius / c.kernel_scaling;
    const double h = c.length / c.n;
    if (!(r >= h)) fail("kernel_radius", "effective radius must be at least one cell");
    if (!(2.0 * r < c.length)) fail("kernel_radius", "effective support must satisfy 2r < length");
  }
  if (!(c.tol >= 1e-14)) fail("solver_tol", "must be at least 1e-14");
  if (c.max_iter < 1) fail("solver_max_iter", "must be at least 1");
  if (!(c.damping > 0.0 && c.damping <= 1.0)) fail("solver_damping", "must lie in (0, 1]");
  if (!(c.stagnation_tol >= 0.0)) fail("solver_stagnation_tol", "must be >= 0");
  if (!(c.naive_dt >= 0.0)) fail("naive_dt", "must be >= 0");
  if (c.snapshot_stride < 0) fail("snapshot_stride", "must be >= 0");
  if (c.snapshot_stride > 0 && c.snapshot_dir.empty()) {
    fail("snapshot_dir", "required when snapshot_stride > 0");
  }
  if (c.slope_t_min < 0.0 || c.slope_t_max < 0.0) fail("slope_t_min", "must be >= 0");
  if ((c.slope_t_min > 0.0 || c.slope_t_max > 0.0) && !(c.slope_t_min < c.slope_t_max)) {
    fail("slope_t_max", "must exceed slope_t_min");
  }
}

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

template <class T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* name_of(PotentialKind k) {
  return k == PotentialKind::flory_huggins ? "fh" : "gl";
}
const char* name_of(KernelShape k) {
  switch (k) {
    case KernelShape::bump: return "bump";
    case KernelShape::wendland: return "wendland";
    case KernelShape::table: return "table";
  }
  return "bump";
}
const char* name_of(SchemeKind k) {
  return k == SchemeKind::bound_preserving ? "bound_preserving" : "naive_explicit";
}
const char* name_of(SolverKind k) { return k == SolverKind::picard ? "picard" : "damped_newton"; }
const char* name_of(ConvolutionMethod k) {
  return k == ConvolutionMethod::fft ? "fft" : "direct";
}

using Setter = std::function<bool(RunConfig&, const std::string&)>;

template <class T>
Setter num(T RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) { return parse_number(v, c.*field); };
}

Setter text(std::string RunConfig::*field) {
  return [field](RunConfig& c, const std::string& v) {
    c.*field = v;
    return true;
  };
}

template <class E>
Setter choice(E RunConfig::*field, std::vector<std::pair<std::string, E>> options) {
  return [field, options](RunConfig& c, const std::string& v) {
    for (const auto& [name, value] : options) {
      if (v == name) {
        c.*field = value;
        return true;
      }
    }
    return false;
  };
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"n", num(&RunConfig::n)},
      {"length", num(&RunConfig::length)},
      {"beta", num(&RunConfig::beta)},
      {"dt", num(&RunConfig::dt)},
      {"t_final", num(&RunConfig::t_final)},
      {"potential", choice(&RunConfig::potential, {{"fh", PotentialKind::flory_huggins},
                                                   {"flory_huggins", PotentialKind::flory_huggins},
                                                   {"gl", PotentialKind::ginzburg_landau},
                                                   {"ginzburg_landau", PotentialKind::ginzburg_landau}})},
      {"kernel_shape", choice(&RunConfig::kernel_shape, {{"bump", KernelShape::bump},
                                                         {"wendland", KernelShape::wendland},
                                                         {"table", KernelShape::table}})},
      {"kernel_radius", num(&RunConfig::kernel_radius)},
      {"kernel_scaling", num(&RunConfig::kernel_scaling)},
      {"kernel_table", text(&RunConfig::kernel_table)},
      {"seed", num(&RunConfig::seed)},
      {"amplitude", num(&RunConfig::amplitude)},
      {"scheme", choice(&RunConfig::scheme, {{"bound_preserving", SchemeKind::bound_preserving},
                                             {"naive_explicit", SchemeKind::naive_explicit}})},
      {"solver", choice(&RunConfig::solver, {{"picard", SolverKind::picard},
                                             {"damped_newton", SolverKind::damped_newton}})},
      {"solver_tol", num(&RunConfig::tol)},
      {"solver_max_iter", num(&RunConfig::max_iter)},
      {"solver_damping", num(&RunConfig::damping)},
      {"solver_stagnation_tol", num(&RunConfig::stagnation_tol)},
      {"convolution", choice(&RunConfig::convolution, {{"fft", ConvolutionMethod::fft},
                                                       {"direct", ConvolutionMethod::direct}})},
      {"naive_dt", num(&RunConfig::naive_dt)},
      {"stop_on_bound_violation",
       choice(&RunConfig::stop_on_bound_violation, {{"true", true}, {"false", false}})},
      {"timeseries", text(&RunConfig::timeseries)},
      {"snapshot_dir", text(&RunConfig::snapshot_dir)},
      {"snapshot_stride", num(&RunConfig::snapshot_stride)},
      {"slope_t_min", num(&RunConfig::slope_t_min)},
      {"slope_t_max", num(&RunConfig::slope_t_max)},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::string_view text) {
  RunConfig c;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(std::string_view(raw).substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw FormatError(where + "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw FormatError(where + "missing key");
    if (key == "preset") {
      try {
        c = preset(value);
      } catch (const ConfigError& e) {
        throw FormatError(where + e.what());
      }
      continue;
    }
    const auto it = setters().find(key);
    if (it == setters().end()) throw FormatError(where + "unknown key '" + key + "'");
    if (!it->second(c, value)) {
      throw FormatError(where + "invalid value '" + value + "' for " + key);
    }
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string format_config(const RunConfig& c) {
  std::ostringstream o;
  o << "n = " << c.n << "\n";
  o << "length = " << number(c.length) << "\n";
  o << "beta = " << number(c.beta) << "\n";
  o << "dt = " << number(c.dt) << "\n";
  o << "t_final = " << number(c.t_final) << "\n";
  o << "potential = " << name_of(c.potential) << "\n";
  o << "kernel_shape = " << name_of(c.kernel_shape) << "\n";
  o << "kernel_radius = " << number(c.kernel_radius) << "\n";
  o << "kernel_scaling = " << number(c.kernel_scaling) << "\n";
  if (!c.kernel_table.empty()) o << "kernel_table = " << c.kernel_table << "\n";
  o << "seed = " << c.seed << "\n";
  o << "amplitude = " << number(c.amplitude) << "\n";
  o << "scheme = " << name_of(c.scheme) << "\n";
  o << "solver = " << name_of(c.solver) << "\n";
  o << "solver_tol = " << number(c.tol) << "\n";
  o << "solver_max_iter = " << c.max_iter << "\n";
  o << "solver_damping = " << number(c.damping) << "\n";
  o << "solver_stagnation_tol = " << number(c.stagnation_tol) << "\n";
  o << "convolution = " << name_of(c.convolution) << "\n";
  o << "naive_dt = " << number(c.naive_dt) << "\n";
  o << "stop_on_bound_violation = " << (c.stop_on_bound_violation ? "true" : "false") << "\n";
  if (!c.timeseries.empty()) o << "timeseries = " << c.timeseries << "\n";
  if (!c.snapshot_dir.empty()) o << "snapshot_dir = " << c.snapshot_dir << "\n";
  o << "snapshot_stride = " << c.snapshot_stride << "\n";
  o << "slope_t_min = " << number(c.slope_t_min) << "\n";
  o << "slope_t_max = " << number(c.slope_t_max) << "\n";
  return o.str();
}

std::vector<std::string> preset_names() { return {"fig1-naive", "fig2-fh", "fig2-gl", "fig4-slope"}; }

RunConfig preset(std::string_view name) {
  RunConfig c;  // defaults are the phase-separation protocol
  c.n = 128;
  c.beta = 5.0;
  c.dt = 1e-2;
  c.t_final = 50.0;
  c.amplitude = 0.05;
  c.slope_t_min = 5.0;
  c.slope_t_max = 50.0;
  if (name == "fig2-fh") {
    c.potential = PotentialKind::flory_huggins;
    c.timeseries = "fig2-fh.csv";
    c.snapshot_dir = "fig2-fh-snapshots";
    c.snapshot_stride = 500;
  } else if (name == "fig2-gl") {
    c.potential = PotentialKind::ginzburg_landau;
    c.timeseries = "fig2-gl.csv";
    c.snapshot_dir = "fig2-gl-snapshots";
    c.snapshot_stride = 500;
  } else if (name == "fig4-slope") {
    c.potential = PotentialKind::flory_huggins;
    c.timeseries = "fig4-slope.csv";
  } else if (name == "fig1-naive") {
    c.potential = PotentialKind::flory_huggins;
    c.scheme = SchemeKind::naive_explicit;
    c.stop_on_bound_violation = true;
    c.timeseries = "fig1-naive.csv";
    c.snapshot_dir = "fig1-naive-snapshots";
    c.snapshot_stride = 1000;
    c.slope_t_min = 0.0;
    c.slope_t_max = 0.0;
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  validate(c);
  return c;
}

}  // namespace nlch
