#include "nlch/scheme.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <unsupported/Eigen/IterativeSolvers>

#include <algorithm>
#include <cmath>
#include <string>

#include "nlch/error.hpp"

namespace nlch {

void validate(const SchemeParams& params) {
  if (!(params.dt > 0.0) || !std::isfinite(params.dt)) throw ConfigError("scheme: dt must be positive");
  if (!(params.tol >= 1e-14)) throw ConfigError("scheme: tol must be at least 1e-14");
  if (params.max_iter < 1) throw ConfigError("scheme: max_iter must be at least 1");
  if (!(params.damping > 0.0 && params.damping <= 1.0)) {
    throw ConfigError("scheme: damping must lie in (0, 1]");
  }
  if (!(params.stagnation_tol >= 0.0)) throw ConfigError("scheme: stagnation_tol must be >= 0");
}

StepState make_initial_state(Field rho0, const DiscreteKernel& kernel, ConvolutionMethod method) {
  Field conv = convolve(kernel, rho0, method);
  return StepState{std::move(rho0), std::nullopt, std::move(conv), 0.0, 0};
}

Field chemical_potential(const Field& rho_next, const Field& rho_curr, const Field& conv_curr,
                         const Potential& p, long* saturated) {
  require_same_grid(rho_next.grid(), rho_curr.grid());
  require_same_grid(rho_next.grid(), conv_curr.grid());
  Field w(rho_next.grid());
  long clamped = 0;
  for (std::size_t k = 0; k < w.size(); ++k) {
    const double r = rho_next[k];
    if (saturated && clamp_interior(p, r).second) ++clamped;
    w[k] = eval_fc_prime(p, r) - eval_fe_prime(p, rho_curr[k]) + 2.0 * r - 2.0 * conv_curr[k];
  }
  if (saturated) *saturated = clamped;
  return w;
}

EdgeField edge_velocities(const Field& w) {
  const Grid& g = w.grid();
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  EdgeField u(g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = g.index(i, j);
      u.x[k] = -(w(i + 1, j) - w(i, j)) * inv_h;
      u.y[k] = -(w(i, j + 1) - w(i, j)) * inv_h;
    }
  }
  return u;
}

namespace {

inline double upwind_flux(double rho_l, double rho_r, double u, double beta) {
  const double up = u > 0.0 ? u : 0.0;
  const double down = u < 0.0 ? u : 0.0;
  return mobility(rho_l, rho_r, beta) * up + mobility(rho_r, rho_l, beta) * down;
}

}  // namespace

EdgeField numerical_flux(const Field& rho_next, const EdgeField& u, double beta) {
  require_same_grid(rho_next.grid(), u.grid);
  const Grid& g = rho_next.grid();
  const int n = g.n();
  EdgeField f(g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = g.index(i, j);
      const double r = rho_next(i, j);
      f.x[k] = upwind_flux(r, rho_next(i + 1, j), u.x[k], beta);
      f.y[k] = upwind_flux(r, rho_next(i, j + 1), u.y[k], beta);
    }
  }
  return f;
}

Field flux_divergence(const EdgeField& flux) {
  const Grid& g = flux.grid;
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  Field div(g);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = g.index(i, j);
      div[k] = ((flux.x[k] - flux.x[g.index(i - 1, j)]) + (flux.y[k] - flux.y[g.index(i, j - 1)])) *
               inv_h;
    }
  }
  return div;
}

Field residual(const Field& rho_next, const StepState& state, const SchemeParams& params,
               const Potential& p) {
  const Field w = chemical_potential(rho_next, state.rho_curr, state.conv_curr, p);
  const EdgeField flux = numerical_flux(rho_next, edge_velocities(w), p.beta);
  Field r = flux_divergence(flux);
  const double inv_dt = 1.0 / params.dt;
  for (std::size_t k = 0; k < r.size(); ++k) {
    r[k] += (rho_next[k] - state.rho_curr[k]) * inv_dt;
  }
  return r;
}

namespace {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

// Smoothed fraction of the flux carried by the [u]^+ branch.
inline double upwind_weight(double u) {
  constexpr double eps = 1e-8;
  return 0.5 * (1.0 + u / std::sqrt(u * u + eps * eps));
}

// d/dx of M(x, y) and d/dy of M(x, y).
inline double mobility_dx(double x, double y, double beta) {
  return (1.0 + x > 0.0 && 1.0 - y > 0.0) ? beta * (1.0 - y) : 0.0;
}
inline double mobility_dy(double x, double y, double beta) {
  return (1.0 + x > 0.0 && 1.0 - y > 0.0) ? -beta * (1.0 + x) : 0.0;
}

struct Evaluation {
  Field rho;
  Field w;
  EdgeField u;
  Field r;
  double norm = 0.0;
  long saturated = 0;
};

}  // namespace

// Applies a factorization computed elsewhere (possibly at an older iterate).
class LaggedPreconditioner {
 public:
  using StorageIndex = int;
  enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

  LaggedPreconditioner() = default;
  template <class M>
  explicit LaggedPreconditioner(const M&) {}
  template <class M>
  LaggedPreconditioner& analyzePattern(const M&) { return *this; }
  template <class M>
  LaggedPreconditioner& factorize(const M&) { return *this; }
  template <class M>
  LaggedPreconditioner& compute(const M&) { return *this; }

  void attach(const Eigen::SimplicialLDLT<SparseMatrix>* ldlt) { ldlt_ = ldlt; }
  template <class Rhs>
  Eigen::VectorXd solve(const Rhs& b) const { return ldlt_->solve(b); }
  Eigen::ComputationInfo info() const { return Eigen::Success; }

 private:
  const Eigen::SimplicialLDLT<SparseMatrix>* ldlt_ = nullptr;
};

struct StepSolver::Workspace {
  explicit Workspace(const Grid& grid) : grid(grid) {
    const int n = grid.n();
    const auto cells = static_cast<int>(grid.cells());
    std::vector<Eigen::Triplet<double>> pattern;
    pattern.reserve(5 * grid.cells());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int k = static_cast<int>(grid.index(i, j));
        pattern.emplace_back(k, k, 1.0);
        for (auto [di, dj] : {std::pair{1, 0}, {-1, 0}, {0, 1}, {0, -1}}) {
          pattern.emplace_back(k, static_cast<int>(grid.index(i + di, j + dj)), 1.0);
        }
      }
    }
    picard.resize(cells, cells);
    picard.setFromTriplets(pattern.begin(), pattern.end());
    picard.makeCompressed();
    jacobian = picard;

    auto slot = [&](int row, int col) {
      return static_cast<std::size_t>(&picard.coeffRef(row, col) - picard.valuePtr());
    };
    diag.resize(grid.cells());
    x_edges.resize(grid.cells());
    y_edges.resize(grid.cells());
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const int k = static_cast<int>(grid.index(i, j));
        diag[k] = slot(k, k);
        const int kx = static_cast<int>(grid.index(i + 1, j));
        const int ky = static_cast<int>(grid.index(i, j + 1));
        x_edges[k] = {slot(k, k), slot(k, kx), slot(kx, k), slot(kx, kx)};
        y_edges[k] = {slot(k, k), slot(k, ky), slot(ky, k), slot(ky, ky)};
      }
    }
    ldlt.analyzePattern(picard);
  }

  // Value slots of the 2x2 block coupling the cells on either side of a face.
  struct EdgeSlots {
    std::size_t ll, lr, rl, rr;
  };

  // Linearization of the residual in w at (rho, u). The frozen-mobility part is
  // symmetric; `full` adds the mobility derivatives of the upwind flux.
  void assemble(const Field& rho, const EdgeField& u, const Potential& p, double dt,
                SparseMatrix& m, bool full) {
    const int n = grid.n();
    const std::size_t cells = grid.cells();
    const double beta = p.beta;
    const double h = grid.h();
    const double inv_h2 = 1.0 / (h * h);
    double* values = m.valuePtr();
    std::fill(values, values + m.nonZeros(), 0.0);
    drho_dw.resize(cells);
    for (std::size_t k = 0; k < cells; ++k) {
      drho_dw[k] = 1.0 / (eval_fc_second(p, rho[k]) + 2.0);
      values[diag[k]] += drho_dw[k] / dt;
    }
    auto couple = [&](const EdgeSlots& s, double rho_l, double rho_r, double vel, double dl,
                      double dr) {
      const double m_lr = mobility(rho_l, rho_r, beta);
      const double m_rl = mobility(rho_r, rho_l, beta);
      const double wt = upwind_weight(vel);
      // Velocity part: dF/dw_l = k_u h, dF/dw_r = -k_u h.
      const double k_u = (wt * m_lr + (1.0 - wt) * m_rl) * inv_h2;
      values[s.ll] += k_u;
      values[s.lr] -= k_u;
      values[s.rl] -= k_u;
      values[s.rr] += k_u;
      if (!full) return;
      const double up = vel > 0.0 ? vel : 0.0;
      const double down = vel < 0.0 ? vel : 0.0;
      const double df_dl =
          mobility_dx(rho_l, rho_r, beta) * up + mobility_dy(rho_r, rho_l, beta) * down;
      const double df_dr =
          mobility_dy(rho_l, rho_r, beta) * up + mobility_dx(rho_r, rho_l, beta) * down;
      const double a = df_dl * dl / h;
      const double b = df_dr * dr / h;
      values[s.ll] += a;
      values[s.lr] += b;
      values[s.rl] -= a;
      values[s.rr] -= b;
    };
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t k = grid.index(i, j);
        const std::size_t kx = grid.index(i + 1, j);
        const std::size_t ky = grid.index(i, j + 1);
        couple(x_edges[k], rho[k], rho[kx], u.x[k], drho_dw[k], drho_dw[kx]);
        couple(y_edges[k], rho[k], rho[ky], u.y[k], drho_dw[k], drho_dw[ky]);
      }
    }
  }

  Grid grid;
  SparseMatrix picard;    // frozen-mobility operator, SPD
  SparseMatrix jacobian;  // full linearization, same pattern
  std::vector<std::size_t> diag;
  std::vector<EdgeSlots> x_edges;
  std::vector<EdgeSlots> y_edges;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  std::vector<double> drho_dw;
  bool factor_valid = false;
  double factor_dt = 0.0;
};

StepSolver::StepSolver(SchemeParams params, DiscreteKernel kernel, Potential potential)
    : params_(params), kernel_(std::move(kernel)), potential_(potential) {
  validate(params_);
  validate(potential_);
}

StepSolver::~StepSolver() = default;
StepSolver::StepSolver(StepSolver&&) noexcept = default;
StepSolver& StepSolver::operator=(StepSolver&&) noexcept = default;

StepResult StepSolver::advance(const StepState& state) {
  const Grid& g = state.rho_curr.grid();
  require_same_grid(g, kernel_.grid());
  require_same_grid(g, state.conv_curr.grid());
  if (!work_ || !(work_->grid == g)) work_ = std::make_unique<Workspace>(g);
  Workspace& ws = *work_;

  const Potential& p = potential_;
  const double beta = p.beta;
  const double dt = params_.dt;
  const std::size_t cells = g.cells();
  const bool newton = params_.solver == SolverKind::damped_newton;

  // Explicit part of the chemical potential: w = f_c'(rho) + 2 rho + explicit.
  std::vector<double> explicit_part(cells);
  for (std::size_t k = 0; k < cells; ++k) {
    explicit_part[k] = -eval_fe_prime(p, state.rho_curr[k]) - 2.0 * state.conv_curr[k];
  }

  auto evaluate = [&](Field rho) {
    Evaluation e{std::move(rho), Field(g), EdgeField(g), Field(g)};
    e.w = chemical_potential(e.rho, state.rho_curr, state.conv_curr, p, &e.saturated);
    e.u = edge_velocities(e.w);
    e.r = flux_divergence(numerical_flux(e.rho, e.u, beta));
    for (std::size_t k = 0; k < cells; ++k) e.r[k] += (e.rho[k] - state.rho_curr[k]) / dt;
    e.norm = max_abs(e.r.values());
    return e;
  };

  // The SPD factorization is kept across iterations and steps and rebuilt when
  // it stops being effective (Picard contraction or Krylov iteration count).
  auto refactor = [&](const Evaluation& at) {
    ws.assemble(at.rho, at.u, p, dt, ws.picard, false);
    ws.ldlt.factorize(ws.picard);
    ws.factor_valid = ws.ldlt.info() == Eigen::Success;
    ws.factor_dt = dt;
    return ws.factor_valid;
  };

  auto try_step = [&](const Evaluation& from, const Eigen::VectorXd& delta, double lambda) {
    Field rho(g);
    for (std::size_t k = 0; k < cells; ++k) {
      const double w_k = from.w[k] + lambda * delta[static_cast<Eigen::Index>(k)];
      rho[k] = invert_implicit_map(p, w_k - explicit_part[k], from.rho[k]);
    }
    return evaluate(std::move(rho));
  };

  Eigen::BiCGSTAB<SparseMatrix, LaggedPreconditioner> krylov;
  krylov.preconditioner().attach(&ws.ldlt);
  krylov.setMaxIterations(60);
  krylov.setTolerance(1e-8);

  Evaluation cur = evaluate(state.rho_curr);
  int iters = 1;
  bool converged = cur.norm <= params_.tol;
  bool stagnated = false;
  if (!converged && state.rho_prev) {
    // Linear extrapolation in time, kept inside [-1, 1] (the interior for FH).
    const double edge = clamp_interior(p, 1.0).first;
    Field guess(g);
    for (std::size_t k = 0; k < cells; ++k) {
      guess[k] = std::clamp(2.0 * state.rho_curr[k] - (*state.rho_prev)[k], -edge, edge);
    }
    Evaluation extrapolated = evaluate(std::move(guess));
    ++iters;
    if (extrapolated.norm < cur.norm) cur = std::move(extrapolated);
    converged = cur.norm <= params_.tol;
  }
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(cells));
  if (ws.factor_dt != dt) ws.factor_valid = false;

  while (!converged && iters < params_.max_iter) {
    bool fresh = false;
    if (!ws.factor_valid) {
      if (!refactor(cur)) break;
      fresh = true;
    }
    for (std::size_t k = 0; k < cells; ++k) rhs[static_cast<Eigen::Index>(k)] = -cur.r[k];

    Eigen::VectorXd delta;
    std::optional<Evaluation> trial;
    if (newton) {
      ws.assemble(cur.rho, cur.u, p, dt, ws.jacobian, true);
      krylov.compute(ws.jacobian);
      delta = krylov.solve(rhs);
      if (krylov.info() != Eigen::Success && !fresh) {
        if (!refactor(cur)) break;
        fresh = true;
        delta = krylov.solve(rhs);
      }
      if (krylov.iterations() > 6) ws.factor_valid = false;
      double lambda = params_.damping;
      trial = try_step(cur, delta, lambda);
      for (int halvings = 0; trial->norm >= cur.norm && halvings < 8; ++halvings) {
        lambda *= 0.5;
        trial = try_step(cur, delta, lambda);
      }
    } else {
      delta = ws.ldlt.solve(rhs);
      trial = try_step(cur, delta, params_.damping);
      if (!fresh && trial->norm > cur.norm) {
        // A stale operator made things worse: rebuild it here and retry.
        if (!refactor(cur)) break;
        delta = ws.ldlt.solve(rhs);
        trial = try_step(cur, delta, params_.damping);
      }
      if (trial->norm > params_.tol && trial->norm > 0.5 * cur.norm) ws.factor_valid = false;
    }
    ++iters;

    double change = 0.0;
    for (std::size_t k = 0; k < cells; ++k) {
      change = std::max(change, std::abs(trial->rho[k] - cur.rho[k]));
    }
    cur = std::move(*trial);
    stagnated = cur.norm > params_.tol && change <= params_.stagnation_tol;
    converged = cur.norm <= params_.tol || stagnated;
  }

  if (!converged) {
    throw SolverFailure("nonlinear solver did not converge at step " +
                            std::to_string(state.step_index + 1) + " (residual " +
                            std::to_string(cur.norm) + ")",
                        state.step_index + 1, cur.norm);
  }

  StepResult result{StepState{cur.rho, state.rho_curr, Field(g), state.time + dt,
                              state.step_index + 1},
                    StepReport{}};
  result.state.conv_curr = convolve(kernel_, cur.rho, params_.convolution);

  StepReport& rep = result.report;
  rep.step_index = result.state.step_index;
  rep.time = result.state.time;
  rep.mass_raw = total_mass(cur.rho).raw;
  rep.max_abs_rho = cur.rho.max_abs();
  rep.inner_w_check = inner_product(cur.rho - state.rho_curr, cur.w);
  rep.solver_iters = iters;
  rep.residual_norm = cur.norm;
  rep.stagnated = stagnated;
  rep.saturation_count = cur.saturated;
  return result;
}

namespace detail {

std::vector<double> dense_linearization(const Field& rho_next, const StepState& state,
                                        const SchemeParams& params, const Potential& p,
                                        bool full) {
  const Grid& g = rho_next.grid();
  const Field w = chemical_potential(rho_next, state.rho_curr, state.conv_curr, p);
  StepSolver::Workspace ws(g);
  ws.assemble(rho_next, edge_velocities(w), p, params.dt, full ? ws.jacobian : ws.picard, full);
  const Eigen::MatrixXd dense(full ? ws.jacobian : ws.picard);
  const auto cells = static_cast<Eigen::Index>(g.cells());
  std::vector<double> out(g.cells() * g.cells());
  for (Eigen::Index r = 0; r < cells; ++r) {
    for (Eigen::Index c = 0; c < cells; ++c) out[static_cast<std::size_t>(r * cells + c)] = dense(r, c);
  }
  return out;
}

}  // namespace detail

StepResult step(const StepState& state, const SchemeParams& params, const DiscreteKernel& kernel,
                const Potential& p) {
  StepSolver solver(params, kernel, p);
  return solver.advance(state);
}

StepState naive_explicit_step(const StepState& state, double dt, double beta,
                              const DiscreteKernel& kernel, ConvolutionMethod method) {
  const Field& rho = state.rho_curr;
  const Field& conv = state.conv_curr;
  const Grid& g = rho.grid();
  require_same_grid(g, conv.grid());
  const int n = g.n();
  const double inv_h = 1.0 / g.h();
  EdgeField flux(g);
  auto face = [&](double rl, double rr, double cl, double cr) {
    const double drift = beta * ((1.0 - rl * rl) + (1.0 - rr * rr));  // centred 2 beta (1 - rho^2)
    return -(rr - rl) * inv_h + drift * (cr - cl) * inv_h;
  };
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const std::size_t k = g.index(i, j);
      flux.x[k] = face(rho(i, j), rho(i + 1, j), conv(i, j), conv(i + 1, j));
      flux.y[k] = face(rho(i, j), rho(i, j + 1), conv(i, j), conv(i, j + 1));
    }
  }
  Field next = flux_divergence(flux);
  for (std::size_t k = 0; k < next.size(); ++k) next[k] = rho[k] - dt * next[k];
  Field next_conv = convolve(kernel, next, method);
  return StepState{std::move(next), rho, std::move(next_conv), state.time + dt,
                   state.step_index + 1};
}

}  // namespace nlch
