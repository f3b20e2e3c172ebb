#pragma once

#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "nlch/config.hpp"
#include "nlch/diagnostics.hpp"
#include "nlch/report.hpp"

namespace nlch {

inline constexpr const char* kTimeseriesHeader =
    "step,time,mass_raw,max_abs_rho,energy,pseudo_energy,theorem2_lhs,theorem2_rhs,"
    "inner_w_check,solver_iters";

/// One CSV row (no newline). Inequality sides print as "nan" when not applicable.
std::string format_timeseries_row(const StepReport& report);

struct RunSummary {
  long steps = 0;
  double final_time = 0.0;
  double initial_mass_raw = 0.0;
  /// max over steps of |sum rho^k - sum rho^0|
  double mass_drift = 0.0;
  /// max over steps of max |rho^k|
  double max_abs_rho = 0.0;
  /// max(0, max_abs_rho - 1)
  double bound_excess = 0.0;
  /// First step with max |rho| > 1, if any.
  std::optional<long> first_bound_violation;
  long theorem2_violations = 0;
  long dissipation_violations = 0;
  /// Steps on which E_h rose by more than 1e-9.
  long energy_increases = 0;
  std::optional<SlopeFit> slope;
  double slope_t_min = 0.0;
  double slope_t_max = 0.0;
  bool completed = false;
  /// Solver failure message when the run stopped early.
  std::string failure;
  std::optional<long> failed_step;
  std::vector<EnergySample> energy_series;
};

struct RunHooks {
  /// Called after every accepted step with its completed report.
  std::function<void(const StepReport&, const Field& rho)> on_step;
  /// Overrides config.timeseries when set (for in-memory runs).
  std::ostream* timeseries = nullptr;
};

/// Seeds the perturbation, steps to t_final, streams the timeseries CSV and
/// snapshots. A SolverFailure ends the run: outputs written so far are kept and
/// the summary records the failure with completed = false.
RunSummary run_simulation(const RunConfig& config, const RunHooks& hooks = {});

/// Text rendering of a summary for the CLI.
std::string format_summary(const RunSummary& summary);

}  // namespace nlch
