#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "nlch/kernel.hpp"
#include "nlch/potential.hpp"
#include "nlch/report.hpp"
#include "nlch/scheme.hpp"

namespace nlch {

/// E_h(rho) = h^2 sum [f_c - f_e + rho^2] - <J * rho, rho>_h.
double discrete_energy(const Field& rho, const DiscreteKernel& kernel, const Potential& p,
                       ConvolutionMethod method = ConvolutionMethod::fft);

/// E^_h(next, curr) = E_h(next) + ||d||^2 + <J * d, d>_h with d = next - curr.
double pseudo_energy(const Field& rho_next, const Field& rho_curr, const DiscreteKernel& kernel,
                     const Potential& p, ConvolutionMethod method = ConvolutionMethod::fft);

/// Completes the report produced by a step: energy, pseudo-energy and both sides
/// of the stability inequality E^(k+1, k) - E^(k, k-1) <= ||rho^{k+1} - rho^k||^2.
///
/// `before` is the state the step started from (rho^k, optional rho^{k-1});
/// `prev` is the report of the preceding step, used for E^(k, k-1). The
/// inequality sides stay empty when rho^{k-1} is unknown.
StepReport check_step(const std::optional<StepReport>& prev, const StepState& before,
                      const StepState& after, StepReport partial, const DiscreteKernel& kernel,
                      const Potential& p, ConvolutionMethod method = ConvolutionMethod::fft);

struct EnergySample {
  double time;
  double energy;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  std::size_t points = 0;
  /// Added to every energy before taking logs; zero unless an energy in the
  /// window was nonpositive.
  double offset = 0.0;
};

/// Least-squares slope of log E against log t over samples with t in [t_min, t_max].
/// Throws ConfigError with fewer than 10 samples in the window.
SlopeFit fit_dissipation_slope(std::span<const EnergySample> series, double t_min, double t_max);

}  // namespace nlch
