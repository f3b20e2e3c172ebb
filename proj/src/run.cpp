#include "nlch/run.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "nlch/error.hpp"
#include "nlch/snapshot.hpp"

namespace nlch {

namespace {

std::string g17(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DiscreteKernel kernel_for(const RunConfig& c, const Grid& g) {
  if (c.kernel_shape == KernelShape::table) {
    std::ifstream in(c.kernel_table);
    if (!in) throw ConfigError("kernel_table: cannot open " + c.kernel_table);
    return load_kernel_table(in, g);
  }
  return build_kernel(c.kernel_spec(), g);
}

std::string snapshot_path(const std::string& dir, long step) {
  char name[32];
  std::snprintf(name, sizeof name, "snap_%08ld.txt", step);
  return (std::filesystem::path(dir) / name).string();
}

}  // namespace

std::string format_timeseries_row(const StepReport& r) {
  const double nan = std::nan("");
  std::string row = std::to_string(r.step_index);
  for (double v : {r.time, r.mass_raw, r.max_abs_rho, r.energy, r.pseudo_energy,
                   r.theorem2_lhs.value_or(nan), r.theorem2_rhs.value_or(nan), r.inner_w_check}) {
    row += ',';
    row += g17(v);
  }
  row += ',';
  row += std::to_string(r.solver_iters);
  return row;
}

RunSummary run_simulation(const RunConfig& config, const RunHooks& hooks) {
  validate(config);
  const Grid g = make_grid(config.n, config.length);
  const DiscreteKernel kernel = kernel_for(config, g);
  const Potential p = config.potential_params();
  const ConvolutionMethod method = config.convolution;
  const double dt = config.step_size();
  const long total_steps = std::max(1L, std::lround(config.t_final / dt));

  std::ofstream csv_file;
  std::ostream* csv = hooks.timeseries;
  if (!csv && !config.timeseries.empty()) {
    csv_file.open(config.timeseries);
    if (!csv_file) throw ConfigError("timeseries: cannot open " + config.timeseries);
    csv = &csv_file;
  }
  if (csv) *csv << kTimeseriesHeader << '\n';
  const bool snapshots = config.snapshot_stride > 0 && !config.snapshot_dir.empty();
  if (snapshots) std::filesystem::create_directories(config.snapshot_dir);

  StepState state = make_initial_state(init_random_perturbation(g, config.amplitude, config.seed),
                                       kernel, method);
  if (snapshots) write_snapshot(snapshot_path(config.snapshot_dir, 0), state.rho_curr, 0.0);

  RunSummary summary;
  summary.initial_mass_raw = total_mass(state.rho_curr).raw;
  summary.max_abs_rho = state.rho_curr.max_abs();
  double last_energy = discrete_energy(state.rho_curr, kernel, p, method);

  std::optional<StepSolver> solver;
  if (config.scheme == SchemeKind::bound_preserving) {
    solver.emplace(config.scheme_params(), kernel, p);
  }
  std::optional<StepReport> prev;

  for (long s = 0; s < total_steps; ++s) {
    std::optional<StepState> advanced;
    if (solver) {
      try {
        StepResult r = solver->advance(state);
        prev = check_step(prev, state, r.state, r.report, kernel, p, method);
        advanced = std::move(r.state);
      } catch (const SolverFailure& e) {
        summary.failure = e.what();
        summary.failed_step = e.step_index();
        break;
      }
    } else {
      StepState n = naive_explicit_step(state, dt, p.beta, kernel, method);
      StepReport partial;
      partial.inner_w_check = std::nan("");  // no implicit chemical potential
      try {
        prev = check_step(prev, state, n, partial, kernel, p, method);
      } catch (const DomainError&) {
        // Flory-Huggins energy is undefined once |rho| > 1.
        partial.step_index = n.step_index;
        partial.time = n.time;
        partial.mass_raw = total_mass(n.rho_curr).raw;
        partial.max_abs_rho = n.rho_curr.max_abs();
        partial.energy = std::nan("");
        partial.pseudo_energy = std::nan("");
        prev = partial;
      }
      advanced = std::move(n);
    }
    StepState& next = *advanced;
    const StepReport& rep = *prev;

    summary.steps = rep.step_index;
    summary.final_time = rep.time;
    summary.mass_drift = std::max(summary.mass_drift, std::abs(rep.mass_raw - summary.initial_mass_raw));
    summary.max_abs_rho = std::max(summary.max_abs_rho, rep.max_abs_rho);
    if (rep.max_abs_rho > 1.0 && !summary.first_bound_violation) {
      summary.first_bound_violation = rep.step_index;
    }
    if (rep.theorem2_violated()) ++summary.theorem2_violations;
    if (solver && rep.dissipation_violated()) ++summary.dissipation_violations;
    if (rep.energy > last_energy + 1e-9) ++summary.energy_increases;
    last_energy = rep.energy;
    summary.energy_series.push_back({rep.time, rep.energy});

    if (csv) *csv << format_timeseries_row(rep) << '\n';
    if (hooks.on_step) hooks.on_step(rep, next.rho_curr);
    state = std::move(next);
    const bool last = s + 1 == total_steps;
    if (snapshots && (state.step_index % config.snapshot_stride == 0 || last)) {
      write_snapshot(snapshot_path(config.snapshot_dir, state.step_index), state.rho_curr,
                     state.time);
    }
    if (!state.rho_curr.all_finite()) break;
    if (config.stop_on_bound_violation && summary.first_bound_violation) break;
  }
  if (csv) csv->flush();
  summary.bound_excess = std::max(0.0, summary.max_abs_rho - 1.0);
  summary.completed = summary.steps == total_steps;

  double t_min = config.slope_t_min;
  double t_max = config.slope_t_max;
  if (t_min == 0.0 && t_max == 0.0) {
    t_max = summary.final_time;
    t_min = std::sqrt(dt * std::max(dt, t_max));
  }
  summary.slope_t_min = t_min;
  summary.slope_t_max = t_max;
  try {
    summary.slope = fit_dissipation_slope(summary.energy_series, t_min, t_max);
  } catch (const ConfigError&) {
    summary.slope.reset();
  }
  return summary;
}

std::string format_summary(const RunSummary& s) {
  std::ostringstream o;
  o << "steps                 " << s.steps << (s.completed ? "" : " (stopped early)") << "\n";
  o << "final time            " << g17(s.final_time) << "\n";
  o << "mass drift (raw sum)  " << g17(s.mass_drift) << "\n";
  o << "max |rho|             " << g17(s.max_abs_rho) << "\n";
  o << "bound excess          " << g17(s.bound_excess) << "\n";
  if (s.first_bound_violation) o << "first |rho| > 1 step  " << *s.first_bound_violation << "\n";
  o << "stability violations  " << s.theorem2_violations << "\n";
  o << "dissipation violations " << s.dissipation_violations << "\n";
  o << "energy increases      " << s.energy_increases << "\n";
  if (s.slope) {
    o << "slope [" << g17(s.slope_t_min) << ", " << g17(s.slope_t_max) << "]  " << g17(s.slope->slope)
      << " (" << s.slope->points << " points";
    if (s.slope->offset != 0.0) o << ", offset " << g17(s.slope->offset);
    o << ")\n";
  }
  if (!s.failure.empty()) o << "failure               " << s.failure << "\n";
  return o.str();
}

}  // namespace nlch
