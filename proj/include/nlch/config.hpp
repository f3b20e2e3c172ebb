#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/scheme.hpp"

namespace nlch {

enum class SchemeKind { bound_preserving, naive_explicit };

/// Everything needed to reproduce one simulation.
///
/// Text form: one `key = value` per line, `#` starts a comment. Keys are the
/// field names below (kernel fields prefixed with `kernel_`, solver fields with
/// `solver_`). `preset = name` loads a preset; later lines override it.
struct RunConfig {
  int n = 128;
  double length = 16.0;
  double beta = 5.0;
  double dt = 1e-2;
  double t_final = 50.0;
  PotentialKind potential = PotentialKind::flory_huggins;

  KernelShape kernel_shape = KernelShape::bump;
  double kernel_radius = 0.5;
  double kernel_scaling = 1.0;
  std::string kernel_table;  // path, for kernel_shape = table

  unsigned long long seed = 20240607;
  double amplitude = 0.05;

  SchemeKind scheme = SchemeKind::bound_preserving;
  SolverKind solver = SolverKind::damped_newton;
  double tol = 1e-10;
  int max_iter = 100;
  double damping = 1.0;
  double stagnation_tol = 1e-13;
  ConvolutionMethod convolution = ConvolutionMethod::fft;

  /// Explicit baseline step; 0 means 0.2 h^2.
  double naive_dt = 0.0;
  /// Stop the run at the first step with max |rho| > 1.
  bool stop_on_bound_violation = false;

  std::string timeseries;    // CSV path, empty for none
  std::string snapshot_dir;  // empty for none
  long snapshot_stride = 0;  // steps between snapshots, 0 for none

  /// Slope fit window in time; both 0 selects the second half of the run in log-time.
  double slope_t_min = 0.0;
  double slope_t_max = 0.0;

  Potential potential_params() const { return Potential{potential, beta}; }
  SchemeParams scheme_params() const;
  KernelSpec kernel_spec() const;
  /// Step size actually used by the configured scheme.
  double step_size() const;
};

/// Throws ConfigError naming the offending key.
void validate(const RunConfig& config);

/// Parses the text form and validates. Throws FormatError (with the line number)
/// for malformed lines and unknown keys, ConfigError for invalid values.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::string& path);

/// Text form of a config; parse_config(format_config(c)) reproduces c.
std::string format_config(const RunConfig& config);

/// Known presets: fig1-naive, fig2-fh, fig2-gl, fig4-slope. Throws ConfigError otherwise.
RunConfig preset(std::string_view name);
std::vector<std::string> preset_names();

}  // namespace nlch
