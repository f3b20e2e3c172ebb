#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "nlch/grid.hpp"
#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/report.hpp"

namespace nlch {

enum class SolverKind { picard, damped_newton };

struct SchemeParams {
  double dt = 1e-2;
  SolverKind solver = SolverKind::picard;
  double tol = 1e-10;  // l-infinity norm of the scheme residual
  int max_iter = 100;
  double damping = 1.0;
  /// Iterates closer than this in l-infinity are treated as converged.
  double stagnation_tol = 1e-13;
  ConvolutionMethod convolution = ConvolutionMethod::fft;
};

void validate(const SchemeParams& params);

struct StepState {
  Field rho_curr;                  // rho^k
  std::optional<Field> rho_prev;   // rho^{k-1}
  Field conv_curr;                 // [J * rho^k]
  double time = 0.0;
  long step_index = 0;
};

StepState make_initial_state(Field rho0, const DiscreteKernel& kernel,
                             ConvolutionMethod method = ConvolutionMethod::fft);

/// M(x, y) = beta [1 + x]^+ [1 - y]^+.
inline double mobility(double x, double y, double beta) {
  const double a = 1.0 + x;
  const double b = 1.0 - y;
  return beta * (a > 0.0 ? a : 0.0) * (b > 0.0 ? b : 0.0);
}

/// w = f_c'(rho^{k+1}) - f_e'(rho^k) + 2 rho^{k+1} - 2 [J * rho^k], cellwise.
/// When `saturated` is given, it receives the number of clamped f_c' arguments.
Field chemical_potential(const Field& rho_next, const Field& rho_curr, const Field& conv_curr,
                         const Potential& p, long* saturated = nullptr);

/// u_{i+1/2,j} = -(w_{i+1,j} - w_{i,j}) / h and likewise in y.
EdgeField edge_velocities(const Field& w);

/// F = M(rho_L, rho_R) [u]^+ + M(rho_R, rho_L) [u]^- on every face.
EdgeField numerical_flux(const Field& rho_next, const EdgeField& u, double beta);

/// (1/h) [F_{i+1/2,j} - F_{i-1/2,j} + F_{i,j+1/2} - F_{i,j-1/2}].
Field flux_divergence(const EdgeField& flux);

/// (rho^{k+1} - rho^k)/dt + flux divergence; zero exactly at the scheme's solution.
Field residual(const Field& rho_next, const StepState& state, const SchemeParams& params,
               const Potential& p);

struct StepResult {
  StepState state;
  /// Mass, bound, dissipation and solver fields; energies are filled by check_step.
  StepReport report;
};

/// Advances one implicit step of the bound-preserving scheme.
///
/// The unknown is the chemical potential w; the cell values follow from the
/// strictly increasing map rho -> f_c'(rho) + 2 rho, inverted per cell. Picard
/// freezes the upwind mobility and solves an SPD system per iteration; damped
/// Newton uses the full Jacobian with a smoothed upwind switch and backtracking.
/// Reuses its sparse factorization pattern across steps on one grid.
namespace detail {
/// Dense Jacobian of the residual with respect to the chemical potential at rho_next,
/// row-major. `full` includes mobility derivatives; otherwise the frozen-mobility
/// operator. Quadratic in the number of cells, so only for small grids.
std::vector<double> dense_linearization(const Field& rho_next, const StepState& state,
                                        const SchemeParams& params, const Potential& p,
                                        bool full);
}  // namespace detail

class StepSolver {
 public:
  StepSolver(SchemeParams params, DiscreteKernel kernel, Potential potential);
  ~StepSolver();
  StepSolver(StepSolver&&) noexcept;
  StepSolver& operator=(StepSolver&&) noexcept;

  /// Throws SolverFailure when max_iter is exhausted.
  StepResult advance(const StepState& state);

  const SchemeParams& params() const noexcept { return params_; }
  const DiscreteKernel& kernel() const noexcept { return kernel_; }
  const Potential& potential() const noexcept { return potential_; }

 private:
  struct Workspace;
  friend std::vector<double> detail::dense_linearization(const Field&, const StepState&,
                                                         const SchemeParams&, const Potential&,
                                                         bool);

  SchemeParams params_;
  DiscreteKernel kernel_;
  Potential potential_;
  std::unique_ptr<Workspace> work_;
};

StepResult step(const StepState& state, const SchemeParams& params, const DiscreteKernel& kernel,
                const Potential& p);

/// Forward-Euler finite volumes for d_t rho = div[grad rho - 2 beta (1 - rho^2) grad(J * rho)]
/// with centred faces and no limiting. Kept as the baseline that breaks |rho| <= 1.
StepState naive_explicit_step(const StepState& state, double dt, double beta,
                              const DiscreteKernel& kernel,
                              ConvolutionMethod method = ConvolutionMethod::fft);

}  // namespace nlch
