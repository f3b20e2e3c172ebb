#include <cmath>
#include <vector>

#include "doctest.h"
#include "nlch/error.hpp"
#include "nlch/reference.hpp"
#include "nlch/scheme.hpp"

using namespace nlch;

namespace {

std::vector<double> vec(const Field& f) { return {f.values().begin(), f.values().end()}; }
std::vector<double> vec(const DiscreteKernel& k) { return {k.weights().begin(), k.weights().end()}; }

DiscreteKernel kernel_on(const Grid& g, double radius) {
  KernelSpec s;
  s.support_radius = radius;
  return build_kernel(s, g);
}

const Potential kFH{PotentialKind::flory_huggins, 5.0};
const Potential kGL{PotentialKind::ginzburg_landau, 5.0};

}  // namespace

TEST_CASE("mobility") {
  CHECK(mobility(0.0, 0.0, 5.0) == 5.0);
  CHECK(mobility(0.5, 1.2, 3.0) == 0.0);
  CHECK(mobility(1.0, 0.5, 2.0) == 2.0);
  CHECK(mobility(-1.5, 0.0, 2.0) == 0.0);
  CHECK(mobility(-1.0, -1.0, 2.0) == 0.0);
}

TEST_CASE("chemical potential") {
  const Grid g = make_grid(8, 1.0);
  const Field zero(g);
  const Field w0 = chemical_potential(zero, zero, zero, kGL);
  for (double v : w0.values()) CHECK(v == 0.0);
  const Field c(g, 0.4);
  const Field wc = chemical_potential(c, c, c, kGL);
  for (double v : wc.values()) {
    CHECK(std::abs(v - (0.4 * 0.4 * 0.4 - 0.4)) <= 1e-15);
  }
  const Field next = init_random_perturbation(g, 0.7, 1);
  const Field curr = init_random_perturbation(g, 0.7, 2);
  const Field conv = init_random_perturbation(g, 0.7, 3);
  for (const Potential& p : {kFH, kGL}) {
    const Field w = chemical_potential(next, curr, conv, p);
    for (std::size_t k = 0; k < g.cells(); ++k) {
      const double oracle = eval_fc_prime(p, next[k]) - eval_fe_prime(p, curr[k]) + 2.0 * next[k] -
                            2.0 * conv[k];
      CHECK(std::abs(w[k] - oracle) <= 1e-14);
    }
  }
}

TEST_CASE("edge velocities") {
  const Grid g = make_grid(4, 1.0);
  const double h = g.h();
  const EdgeField zero = edge_velocities(Field(g, 2.5));
  for (double v : zero.x) CHECK(v == 0.0);
  for (double v : zero.y) CHECK(v == 0.0);
  Field ramp(g);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) ramp(i, j) = (i + 0.5) * h;
  }
  const EdgeField u = edge_velocities(ramp);
  for (int j = 0; j < 4; ++j) {
    for (int i = 0; i < 3; ++i) CHECK(u.x[g.index(i, j)] == doctest::Approx(-1.0).epsilon(1e-14));
    // the seam face carries the jump from x = L - h/2 back to h/2
    CHECK(u.x[g.index(3, j)] == doctest::Approx(3.0).epsilon(1e-14));
    for (int i = 0; i < 4; ++i) CHECK(u.y[g.index(i, j)] == 0.0);
  }
  const EdgeField r = edge_velocities(init_random_perturbation(g, 0.5, 9));
  for (int j = 0; j < 4; ++j) {
    double row = 0.0;
    for (int i = 0; i < 4; ++i) row += r.x[g.index(i, j)];
    CHECK(std::abs(row) <= 1e-13);
  }
}

TEST_CASE("numerical flux") {
  const Grid g = make_grid(4, 1.0);
  EdgeField still(g);
  const EdgeField f0 = numerical_flux(init_random_perturbation(g, 0.5, 1), still, 5.0);
  for (double v : f0.x) CHECK(v == 0.0);
  const EdgeField u = edge_velocities(init_random_perturbation(g, 0.5, 2));
  const EdgeField f1 = numerical_flux(Field(g, 1.0), u, 5.0);
  for (double v : f1.x) CHECK(v == 0.0);
  for (double v : f1.y) CHECK(v == 0.0);

  Field rho(g);
  rho(1, 0) = 0.5;
  EdgeField one(g);
  one.x[g.index(0, 0)] = 2.0;
  CHECK(numerical_flux(rho, one, 1.0).x[g.index(0, 0)] == doctest::Approx(1.0).epsilon(1e-15));
  one.x[g.index(0, 0)] = -2.0;
  // donor is now the right cell: M(0.5, 0) * (-2) = 1.5 * 1 * -2
  CHECK(numerical_flux(rho, one, 1.0).x[g.index(0, 0)] == doctest::Approx(-3.0).epsilon(1e-15));
}

TEST_CASE("residual: steady constants, telescoping divergence, oracle") {
  const Grid g = make_grid(4, 4.0);
  const DiscreteKernel k = kernel_on(g, 1.8);
  SchemeParams sp;
  sp.dt = 0.5;
  for (const Potential& p : {kFH, kGL}) {
    const StepState c = make_initial_state(Field(g, -0.3), k, ConvolutionMethod::direct);
    const Field steady = residual(c.rho_curr, c, sp, p);
    for (double v : steady.values()) CHECK(std::abs(v) <= 1e-14);

    const StepState st = make_initial_state(init_random_perturbation(g, 0.7, 4), k);
    const Field next = init_random_perturbation(g, 0.7, 5);
    const Field r = residual(next, st, sp, p);
    CHECK(std::abs(total_mass(r).raw - total_mass(next - st.rho_curr).raw / sp.dt) <= 1e-12);
    const auto oracle =
        reference::residual(vec(k), vec(next), vec(st.rho_curr), 4, g.h(), sp.dt, p.kind, p.beta);
    for (std::size_t c2 = 0; c2 < g.cells(); ++c2) CHECK(std::abs(r[c2] - oracle[c2]) <= 1e-13);
  }
  const EdgeField f = numerical_flux(init_random_perturbation(g, 0.7, 6),
                                     edge_velocities(init_random_perturbation(g, 0.7, 7)), 5.0);
  CHECK(std::abs(total_mass(flux_divergence(f)).raw) <= 1e-13);
}

TEST_CASE("zero state is a fixed point reached without iterating") {
  const Grid g = make_grid(16, 1.0);
  const DiscreteKernel k = kernel_on(g, 0.25);
  for (const Potential& p : {kFH, kGL}) {
    const StepResult r = step(make_initial_state(Field(g), k), SchemeParams{}, k, p);
    CHECK(r.state.rho_curr.max_abs() == 0.0);
    CHECK(r.report.solver_iters == 1);
    CHECK(r.state.step_index == 1);
    CHECK(r.state.rho_prev.has_value());
  }
}

TEST_CASE("converged step satisfies the independent residual to the requested tolerance") {
  const Grid g = make_grid(4, 4.0);
  const DiscreteKernel k = kernel_on(g, 1.8);
  for (SolverKind solver : {SolverKind::picard, SolverKind::damped_newton}) {
    for (const Potential& p : {kFH, kGL}) {
      SchemeParams sp;
      sp.dt = 0.1;
      sp.tol = 1e-13;
      sp.stagnation_tol = 0.0;
      sp.solver = solver;
      sp.convolution = ConvolutionMethod::direct;
      const StepState st = make_initial_state(init_random_perturbation(g, 0.6, 8), k);
      const StepResult r = step(st, sp, k, p);
      const auto oracle = reference::residual(vec(k), vec(r.state.rho_curr), vec(st.rho_curr), 4,
                                              g.h(), sp.dt, p.kind, p.beta);
      for (double v : oracle) CHECK(std::abs(v) <= 1e-13);
    }
  }
}

TEST_CASE("implicit step conserves mass, keeps bounds and dissipates") {
  const Grid g = make_grid(24, 3.0);
  const DiscreteKernel k = kernel_on(g, 0.5);
  for (const Potential& p : {kFH, kGL}) {
    for (double dt : {1e-2, 1e-1, 1.0}) {
      SchemeParams sp;
      sp.dt = dt;
      StepSolver solver(sp, k, p);
      StepState st = make_initial_state(init_random_perturbation(g, 0.7, 10), k);
      const double m0 = total_mass(st.rho_curr).raw;
      for (int s = 0; s < 8; ++s) {
        const StepResult r = solver.advance(st);
        CHECK(std::abs(r.report.mass_raw - total_mass(st.rho_curr).raw) <= 1e-10);
        CHECK(r.report.max_abs_rho <= 1.0 + 1e-9);
        CHECK(r.report.inner_w_check <= 1e-10);
        CHECK((r.report.residual_norm <= sp.tol || r.report.stagnated));
        st = r.state;
      }
      CHECK(std::abs(total_mass(st.rho_curr).raw - m0) <= 1e-10);
    }
  }
}

TEST_CASE("cached convolution is refreshed after every step") {
  const Grid g = make_grid(16, 2.0);
  const DiscreteKernel k = kernel_on(g, 0.5);
  StepState st = make_initial_state(init_random_perturbation(g, 0.5, 3), k);
  StepSolver solver(SchemeParams{}, k, kFH);
  for (int s = 0; s < 3; ++s) {
    st = solver.advance(st).state;
    const Field diff = st.conv_curr - convolve(k, st.rho_curr, ConvolutionMethod::direct);
    CHECK(diff.max_abs() <= 1e-12);
  }
}

TEST_CASE("Picard and damped Newton reach the same fixed point") {
  const Grid g = make_grid(16, 2.0);
  const DiscreteKernel k = kernel_on(g, 0.5);
  for (const Potential& p : {kFH, kGL}) {
    const StepState st = make_initial_state(init_random_perturbation(g, 0.7, 21), k);
    SchemeParams a, b;
    a.solver = SolverKind::picard;
    a.max_iter = 500;
    b.solver = SolverKind::damped_newton;
    const Field diff = step(st, a, k, p).state.rho_curr - step(st, b, k, p).state.rho_curr;
    CHECK(diff.max_abs() <= 10 * a.tol);
  }
}

TEST_CASE("assembled linearization matches finite differences of the residual") {
  const Grid g = make_grid(5, 1.0);
  const DiscreteKernel k = kernel_on(g, 0.3);
  for (const Potential& p : {kFH, kGL}) {
    SchemeParams sp;
    const StepState st = make_initial_state(init_random_perturbation(g, 0.6, 31), k);
    const Field rho = init_random_perturbation(g, 0.8, 32);
    const auto jac = detail::dense_linearization(rho, st, sp, p, true);
    const auto frozen = detail::dense_linearization(rho, st, sp, p, false);
    const Field w = chemical_potential(rho, st.rho_curr, st.conv_curr, p);
    const std::size_t n = g.cells();
    // rho as a function of w through the pointwise implicit map
    auto residual_at = [&](const Field& ww) {
      Field r(g);
      for (std::size_t c = 0; c < n; ++c) {
        r[c] = invert_implicit_map(p, ww[c] - (w[c] - eval_fc_prime(p, rho[c]) - 2.0 * rho[c]));
      }
      return residual(r, st, sp, p);
    };
    double scale = 0.0, err = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      Field wp = w, wm = w;
      wp[c] += 1e-6;
      wm[c] -= 1e-6;
      const Field d = residual_at(wp) - residual_at(wm);
      for (std::size_t r = 0; r < n; ++r) {
        err = std::max(err, std::abs(d[r] / 2e-6 - jac[r * n + c]));
        scale = std::max(scale, std::abs(jac[r * n + c]));
      }
    }
    CHECK(err <= 1e-6 * scale);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t c = 0; c < n; ++c) CHECK(frozen[r * n + c] == doctest::Approx(frozen[c * n + r]));
    }
  }
}

TEST_CASE("exhausting the iteration budget raises a solver failure") {
  const Grid g = make_grid(16, 2.0);
  const DiscreteKernel k = kernel_on(g, 0.5);
  SchemeParams sp;
  sp.max_iter = 2;
  sp.dt = 1.0;
  sp.stagnation_tol = 0.0;
  StepState st = make_initial_state(init_random_perturbation(g, 0.7, 1), k);
  st.step_index = 6;
  try {
    step(st, sp, k, kFH);
    FAIL("expected SolverFailure");
  } catch (const SolverFailure& e) {
    CHECK(e.step_index() == 7);
    CHECK(e.best_residual() > sp.tol);
  }
}

TEST_CASE("scheme parameters are validated") {
  SchemeParams sp;
  sp.dt = -1.0;
  CHECK_THROWS_AS(validate(sp), ConfigError);
  sp = SchemeParams{};
  sp.tol = 1e-16;
  CHECK_THROWS_AS(validate(sp), ConfigError);
  sp = SchemeParams{};
  sp.damping = 0.0;
  CHECK_THROWS_AS(validate(sp), ConfigError);
}

TEST_CASE("naive explicit step keeps constants and conserves mass") {
  const Grid g = make_grid(32, 1.0);
  const DiscreteKernel k = kernel_on(g, 0.25);
  const double dt = 0.2 * g.h() * g.h();
  StepState c = make_initial_state(Field(g, 0.2), k);
  const StepState c1 = naive_explicit_step(c, dt, 5.0, k);
  for (double v : c1.rho_curr.values()) CHECK(std::abs(v - 0.2) <= 1e-15);
  StepState st = make_initial_state(init_random_perturbation(g, 0.5, 2), k);
  for (int s = 0; s < 20; ++s) {
    const StepState nx = naive_explicit_step(st, dt, 5.0, k);
    CHECK(std::abs(total_mass(nx.rho_curr).raw - total_mass(st.rho_curr).raw) <= 1e-12);
    st = nx;
  }
}
