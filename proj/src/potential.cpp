#include "nlch/potential.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "nlch/error.hpp"

namespace nlch {

namespace {

// x log(x / 2) with the continuous extension 0 at x = 0.
double xlog_half(double x) { return x > 0.0 ? x * std::log(0.5 * x) : 0.0; }

double clamp_for_energy(const Potential& p, double rho) {
  if (p.kind != PotentialKind::flory_huggins) return rho;
  if (std::abs(rho) > 1.0 || std::isnan(rho)) {
    throw DomainError("Flory-Huggins potential evaluated outside [-1, 1]");
  }
  return rho;
}

}  // namespace

void validate(const Potential& p) {
  if (!(p.beta > 0.0) || !std::isfinite(p.beta)) throw ConfigError("potential: beta must be positive");
  if (p.kind == PotentialKind::flory_huggins &&
      !(p.barrier_margin > 0.0 && p.barrier_margin < 1e-6)) {
    throw ConfigError("potential: barrier margin must lie in (0, 1e-6)");
  }
}

std::pair<double, bool> clamp_interior(const Potential& p, double rho) {
  if (p.kind != PotentialKind::flory_huggins) return {rho, false};
  const double hi = 1.0 - p.barrier_margin;
  if (rho > hi) return {hi, true};
  if (rho < -hi) return {-hi, true};
  return {rho, false};
}

Split eval_split(const Potential& p, double rho) {
  rho = clamp_for_energy(p, rho);
  if (p.kind == PotentialKind::ginzburg_landau) {
    const double r2 = rho * rho;
    return {(r2 * r2 + 1.0) / 4.0, r2 / 2.0};
  }
  return {(xlog_half(1.0 - rho) + xlog_half(1.0 + rho)) / p.beta, rho * rho - 1.0};
}

double eval_f(const Potential& p, double rho) {
  rho = clamp_for_energy(p, rho);
  if (p.kind == PotentialKind::ginzburg_landau) {
    const double q = rho * rho - 1.0;
    return q * q / 4.0;
  }
  return (xlog_half(1.0 - rho) + xlog_half(1.0 + rho)) / p.beta + (1.0 - rho * rho);
}

double eval_fc_prime(const Potential& p, double rho) {
  if (p.kind == PotentialKind::ginzburg_landau) return rho * rho * rho;
  rho = clamp_interior(p, rho).first;
  // log((1+r)/(1-r)) = 2 atanh(r), accurate near 0 and symmetric.
  return 2.0 * std::atanh(rho) / p.beta;
}

double eval_fc_second(const Potential& p, double rho) {
  if (p.kind == PotentialKind::ginzburg_landau) return 3.0 * rho * rho;
  rho = clamp_interior(p, rho).first;
  return 2.0 / (p.beta * (1.0 - rho) * (1.0 + rho));
}

double eval_fe_prime(const Potential& p, double rho) {
  return p.kind == PotentialKind::ginzburg_landau ? rho : 2.0 * rho;
}

double invert_implicit_map(const Potential& p, double target) {
  const double guess = p.kind == PotentialKind::flory_huggins ? std::tanh(0.5 * p.beta * target)
                                                              : std::cbrt(target);
  return invert_implicit_map(p, target, guess);
}

double invert_implicit_map(const Potential& p, double target, double guess) {
  auto map = [&](double r) { return eval_fc_prime(p, r) + 2.0 * r; };
  double lo;
  double hi;
  if (p.kind == PotentialKind::flory_huggins) {
    hi = 1.0 - p.barrier_margin;
    lo = -hi;
  } else {
    // r^3 + 2r is odd and |r^3 + 2r| >= |r|, so |root| <= max(|target|, 1).
    hi = std::max(1.0, std::abs(target));
    lo = -hi;
  }
  // Newton safeguarded by bisection; [lo, hi] always brackets the root or
  // collapses onto a saturated endpoint.
  double r = std::isfinite(guess) ? std::clamp(guess, lo, hi) : 0.0;
  for (int it = 0; it < 200; ++it) {
    const double g = map(r) - target;
    if (g == 0.0) return r;
    if (g > 0.0) {
      hi = r;
    } else {
      lo = r;
    }
    const double slope = eval_fc_second(p, r) + 2.0;
    double next = r - g / slope;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double scale = std::max(1e-3, std::abs(next));
    if (std::abs(next - r) <= 2.0 * std::numeric_limits<double>::epsilon() * scale ||
        hi - lo <= std::numeric_limits<double>::epsilon() * scale) {
      return next;
    }
    r = next;
  }
  return r;
}

}  // namespace nlch
