#pragma once

#include <optional>

namespace nlch {

/// Per-step diagnostics of an accepted time step.
struct StepReport {
  long step_index = 0;  // index k+1 of the new state
  double time = 0.0;
  double mass_raw = 0.0;
  double max_abs_rho = 0.0;
  double energy = 0.0;         // E_h(rho^{k+1})
  double pseudo_energy = 0.0;  // E^_h(rho^{k+1}, rho^k)
  // Stability inequality sides; empty on the first step (no rho^{k-1}).
  std::optional<double> theorem2_lhs;
  std::optional<double> theorem2_rhs;
  double inner_w_check = 0.0;  // <rho^{k+1} - rho^k, w^{k+1}>_h
  int solver_iters = 0;
  double residual_norm = 0.0;
  bool stagnated = false;  // stopped on iterate change with residual above tol
  long saturation_count = 0;

  bool theorem2_violated(double slack = 1e-10) const {
    return theorem2_lhs && *theorem2_lhs > *theorem2_rhs + slack;
  }
  bool dissipation_violated(double slack = 1e-10) const { return inner_w_check > slack; }
};

}  // namespace nlch
