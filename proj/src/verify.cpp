#include "nlch/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "nlch/diagnostics.hpp"
#include "nlch/error.hpp"
#include "nlch/reference.hpp"
#include "nlch/run.hpp"
#include "nlch/snapshot.hpp"

namespace nlch {

namespace {

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

std::vector<double> to_vector(const Field& f) { return {f.values().begin(), f.values().end()}; }

std::vector<double> weights_of(const DiscreteKernel& k) {
  return {k.weights().begin(), k.weights().end()};
}

double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]));
  return m;
}

const PotentialKind kBoth[] = {PotentialKind::flory_huggins, PotentialKind::ginzburg_landau};

const char* short_name(PotentialKind k) { return k == PotentialKind::flory_huggins ? "FH" : "GL"; }

struct Suite {
  std::ostream* log;
  std::vector<CheckResult> results;

  void check(const std::string& name, const std::function<std::pair<bool, std::string>()>& body) {
    CheckResult r{name, false, {}};
    try {
      std::tie(r.passed, r.detail) = body();
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    if (log) *log << (r.passed ? "PASS  " : "FAIL  ") << r.name << "  (" << r.detail << ")\n";
    results.push_back(std::move(r));
  }
};

// Short implicit run; calls `visit` with every completed report and both states.
void short_run(const DiscreteKernel& kernel, const Potential& p, SchemeParams sp,
               Field rho0, int steps,
               const std::function<void(const StepState&, const StepState&, const StepReport&)>& visit) {
  StepSolver solver(sp, kernel, p);
  StepState state = make_initial_state(std::move(rho0), kernel, sp.convolution);
  std::optional<StepReport> prev;
  for (int s = 0; s < steps; ++s) {
    StepResult r = solver.advance(state);
    prev = check_step(prev, state, r.state, r.report, kernel, p, sp.convolution);
    visit(state, r.state, *prev);
    state = std::move(r.state);
  }
}

}  // namespace

std::vector<CheckResult> run_verification(const RunConfig& config, std::ostream* log) {
  Suite suite{log, {}};
  const std::uint64_t seed = config.seed;
  KernelSpec spec;
  spec.shape = config.kernel_shape == KernelShape::table ? KernelShape::bump : config.kernel_shape;

  // Kernel invariants.
  suite.check("kernel weights invariant under the 8 lattice symmetries", [&] {
    double worst = 0.0;
    for (int n : {8, 16, 17}) {
      const Grid g = make_grid(n, 1.0);
      spec.support_radius = 0.3;
      const DiscreteKernel k = build_kernel(spec, g);
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          const double w = k.weight(a, b);
          for (double v : {k.weight(-a, b), k.weight(a, -b), k.weight(-a, -b), k.weight(b, a),
                           k.weight(-b, a), k.weight(b, -a), k.weight(-b, -a)}) {
            worst = std::max(worst, std::abs(v - w));
          }
        }
      }
    }
    return std::pair{worst == 0.0, "max asymmetry " + sci(worst)};
  });

  suite.check("kernel has unit mass", [&] {
    double worst = 0.0;
    for (int n : {8, 32, 64}) {
      const Grid g = make_grid(n, 1.0);
      spec.support_radius = 0.25;
      const DiscreteKernel k = build_kernel(spec, g);
      double s = 0.0;
      for (double w : k.weights()) s += w;
      worst = std::max(worst, std::abs(s * g.h() * g.h() - 1.0));
    }
    return std::pair{worst <= 1e-14, "max |mass - 1| " + sci(worst)};
  });

  // Oracle comparisons on 4x4 and 8x8, in unit-cell scaling (h = 1, dt = 1) so
  // that absolute tolerances are relative to O(1) values.
  for (int n : {4, 8}) {
    const Grid g = make_grid(n, n);
    spec.support_radius = 0.45 * n;
    const DiscreteKernel k = build_kernel(spec, g);
    const Field a = init_random_perturbation(g, 0.9, seed);
    const Field b = init_random_perturbation(g, 0.9, seed + 1);
    const std::string tag = " (" + std::to_string(n) + "x" + std::to_string(n) + ")";

    suite.check("direct and FFT convolution match the brute-force loop" + tag, [&] {
      const auto ref = reference::convolution(weights_of(k), to_vector(a), n, g.h());
      const double d1 = max_diff(convolve(k, a, ConvolutionMethod::direct).values(), ref);
      const double d2 = max_diff(convolve(k, a, ConvolutionMethod::fft).values(), ref);
      return std::pair{std::max(d1, d2) <= 1e-12, "direct " + sci(d1) + ", fft " + sci(d2)};
    });

    suite.check("convolution is self-adjoint in <.,.>_h" + tag, [&] {
      const double lhs = inner_product(convolve(k, a, ConvolutionMethod::direct), b);
      const double rhs = inner_product(a, convolve(k, b, ConvolutionMethod::direct));
      const double rel = std::abs(lhs - rhs) / std::max(std::abs(lhs), 1e-300);
      return std::pair{rel <= 1e-12, "relative gap " + sci(rel)};
    });

    for (PotentialKind kind : kBoth) {
      const Potential p{kind, 5.0};
      const std::string ptag = tag + " " + short_name(kind);

      suite.check("energy matches the reference assembly" + ptag, [&] {
        const double e = discrete_energy(a, k, p);
        const double ref = reference::energy(weights_of(k), to_vector(a), n, g.h(), kind, p.beta);
        return std::pair{std::abs(e - ref) <= 1e-12, "diff " + sci(std::abs(e - ref))};
      });

      suite.check("pseudo-energy matches the reference assembly" + ptag, [&] {
        const double e = pseudo_energy(a, b, k, p);
        const double ref =
            reference::pseudo_energy(weights_of(k), to_vector(a), to_vector(b), n, g.h(), kind, p.beta);
        return std::pair{std::abs(e - ref) <= 1e-12, "diff " + sci(std::abs(e - ref))};
      });

      suite.check("residual matches the reference assembly" + ptag, [&] {
        SchemeParams sp;
        sp.dt = 1.0;
        const StepState st = make_initial_state(b, k, ConvolutionMethod::direct);
        const Field r = residual(a, st, sp, p);
        const auto ref = reference::residual(weights_of(k), to_vector(a), to_vector(b), n, g.h(),
                                             sp.dt, kind, p.beta);
        const double d = max_diff(r.values(), ref);
        return std::pair{d <= 1e-12, "max diff " + sci(d)};
      });
    }
  }

  suite.check("energy from f and from the convex split agree", [&] {
    const Grid g = make_grid(16, 1.0);
    double worst = 0.0;
    for (PotentialKind kind : kBoth) {
      const Potential p{kind, 5.0};
      const Field a = init_random_perturbation(g, 0.95, seed + 2);
      double via_f = 0.0, via_split = 0.0;
      for (double r : a.values()) {
        via_f += eval_f(p, r);
        const Split s = eval_split(p, r);
        via_split += s.convex - s.concave;
      }
      worst = std::max(worst, std::abs(via_f - via_split) * g.h() * g.h());
    }
    return std::pair{worst <= 1e-12, "diff " + sci(worst)};
  });

  suite.check("assembled Jacobian matches finite differences", [&] {
    const Grid g = make_grid(6, 1.0);
    spec.support_radius = 0.3;
    const DiscreteKernel k = build_kernel(spec, g);
    double worst = 0.0;
    for (PotentialKind kind : kBoth) {
      const Potential p{kind, 5.0};
      SchemeParams sp;
      const StepState st = make_initial_state(init_random_perturbation(g, 0.6, seed), k);
      const Field rho = init_random_perturbation(g, 0.8, seed + 3);
      const auto jac = detail::dense_linearization(rho, st, sp, p, true);
      const Field w = chemical_potential(rho, st.rho_curr, st.conv_curr, p);
      const std::size_t cells = g.cells();
      auto residual_at = [&](const Field& ww) {
        Field r(g);
        for (std::size_t c = 0; c < cells; ++c) {
          const double shift = w[c] - eval_fc_prime(p, rho[c]) - 2.0 * rho[c];
          r[c] = invert_implicit_map(p, ww[c] - shift);
        }
        return residual(r, st, sp, p);
      };
      double scale = 0.0;
      for (std::size_t c = 0; c < cells; ++c) {
        const double eps = 1e-6;
        Field wp = w, wm = w;
        wp[c] += eps;
        wm[c] -= eps;
        const Field d = residual_at(wp) - residual_at(wm);
        for (std::size_t r = 0; r < cells; ++r) {
          worst = std::max(worst, std::abs(d[r] / (2 * eps) - jac[r * cells + c]));
          scale = std::max(scale, std::abs(jac[r * cells + c]));
        }
      }
      worst /= scale;
    }
    return std::pair{worst <= 1e-6, "relative diff " + sci(worst)};
  });

  // Stepping matrix on a 16x16 grid.
  const Grid g16 = make_grid(16, 2.0);
  spec.support_radius = 0.5;
  const DiscreteKernel k16 = build_kernel(spec, g16);
  long steps_checked = 0, t2_bad = 0, diss_bad = 0, bound_bad = 0, max_scan_bad = 0;
  double worst_mass = 0.0, worst_t2 = -1e300, worst_diss = -1e300, worst_bound = 0.0;
  for (PotentialKind kind : kBoth) {
    for (double beta : {1.0, 5.0}) {
      for (double dt : {1e-3, 1e-2, 1e-1}) {
        const Potential p{kind, beta};
        SchemeParams sp;
        sp.dt = dt;
        sp.solver = config.solver;
        const Field rho0 = init_random_perturbation(g16, 0.5, seed + 7);
        const double m0 = total_mass(rho0).raw;
        short_run(k16, p, sp, rho0, 15,
                  [&](const StepState&, const StepState& after, const StepReport& rep) {
                    ++steps_checked;
                    worst_mass = std::max(worst_mass, std::abs(rep.mass_raw - m0));
                    worst_bound = std::max(worst_bound, rep.max_abs_rho);
                    if (rep.max_abs_rho > 1.0 + 1e-12) ++bound_bad;
                    if (rep.max_abs_rho != after.rho_curr.max_abs()) ++max_scan_bad;
                    double scan = 0.0;
                    for (double v : after.rho_curr.values()) scan = std::max(scan, std::abs(v));
                    if (scan != rep.max_abs_rho) ++max_scan_bad;
                    if (rep.theorem2_violated()) ++t2_bad;
                    if (rep.theorem2_lhs) {
                      worst_t2 = std::max(worst_t2, *rep.theorem2_lhs - *rep.theorem2_rhs);
                    }
                    if (rep.dissipation_violated()) ++diss_bad;
                    worst_diss = std::max(worst_diss, rep.inner_w_check);
                  });
      }
    }
  }
  suite.check("mass is conserved by the implicit step", [&] {
    return std::pair{worst_mass <= 1e-10, "max drift " + sci(worst_mass)};
  });
  suite.check("implicit step keeps |rho| <= 1", [&] {
    return std::pair{bound_bad == 0, "max |rho| " + sci(worst_bound)};
  });
  suite.check("pseudo-energy stability inequality on the step matrix", [&] {
    return std::pair{t2_bad == 0, std::to_string(steps_checked) + " steps, max lhs - rhs " + sci(worst_t2)};
  });
  suite.check("<rho^{k+1} - rho^k, w^{k+1}>_h <= 0 on the step matrix", [&] {
    return std::pair{diss_bad == 0, "max " + sci(worst_diss)};
  });
  suite.check("reported max |rho| equals a full scan", [&] {
    return std::pair{max_scan_bad == 0, std::to_string(max_scan_bad) + " mismatches"};
  });

  suite.check("bound holds from data near saturation", [&] {
    double worst = 0.0;
    for (PotentialKind kind : kBoth) {
      const Potential p{kind, 5.0};
      SchemeParams sp;
      sp.dt = 1e-1;
      sp.solver = config.solver;
      Field rho0 = init_random_perturbation(g16, 0.98, seed + 11);
      short_run(k16, p, sp, rho0, 10,
                [&](const StepState&, const StepState&, const StepReport& rep) {
                  worst = std::max(worst, rep.max_abs_rho);
                });
    }
    return std::pair{worst <= 1.0 + 1e-12, "max |rho| " + sci(worst)};
  });

  suite.check("energy is nonincreasing for small steps", [&] {
    double worst = -1e300;
    for (PotentialKind kind : kBoth) {
      const Potential p{kind, 5.0};
      SchemeParams sp;
      sp.dt = 1e-4;
      sp.solver = config.solver;
      double last = discrete_energy(init_random_perturbation(g16, 0.5, seed + 7), k16, p);
      short_run(k16, p, sp, init_random_perturbation(g16, 0.5, seed + 7), 200,
                [&](const StepState&, const StepState&, const StepReport& rep) {
                  worst = std::max(worst, rep.energy - last);
                  last = rep.energy;
                });
    }
    return std::pair{worst <= 1e-9, "max increase " + sci(worst)};
  });

  suite.check("constant states stay constant (both potentials, both solvers)", [&] {
    double worst = 0.0;
    for (PotentialKind kind : kBoth) {
      for (SolverKind solver : {SolverKind::picard, SolverKind::damped_newton}) {
        const Potential p{kind, 5.0};
        SchemeParams sp;
        sp.solver = solver;
        const double c = 0.3;
        short_run(k16, p, sp, Field(g16, c), 20,
                  [&](const StepState&, const StepState& after, const StepReport&) {
                    for (double v : after.rho_curr.values()) worst = std::max(worst, std::abs(v - c));
                  });
      }
    }
    return std::pair{worst <= 1e-12, "max deviation " + sci(worst)};
  });

  suite.check("snapshot write/read is bit-exact", [&] {
    const Field a = init_random_perturbation(g16, 0.7, seed + 5);
    std::stringstream io;
    write_snapshot(io, a, 1.25);
    const Snapshot s = read_snapshot(io);
    const bool same = s.rho.grid() == a.grid() && s.time == 1.25 &&
                      std::equal(a.values().begin(), a.values().end(), s.rho.values().begin());
    return std::pair{same, same ? "identical" : "values differ"};
  });

  suite.check("repeated runs give byte-identical timeseries", [&] {
    RunConfig c = config;
    c.n = 16;
    c.length = 2.0;
    c.kernel_shape = spec.shape;
    c.kernel_radius = 0.5;
    c.kernel_scaling = 1.0;
    c.t_final = 0.2;
    c.dt = 1e-2;
    c.scheme = SchemeKind::bound_preserving;
    c.timeseries.clear();
    c.snapshot_dir.clear();
    c.snapshot_stride = 0;
    std::ostringstream first, second;
    run_simulation(c, RunHooks{{}, &first});
    run_simulation(c, RunHooks{{}, &second});
    const bool same = first.str() == second.str() && !first.str().empty();
    return std::pair{same, std::to_string(first.str().size()) + " bytes"};
  });

  return suite.results;
}

}  // namespace nlch
