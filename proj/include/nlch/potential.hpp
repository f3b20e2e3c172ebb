#pragma once

#include <utility>

namespace nlch {

enum class PotentialKind { flory_huggins, ginzburg_landau };

/// Reference free-energy density f = f_c - f_e with f_c, f_e convex.
///
///   Flory-Huggins:     f_c = beta^-1 [(1-r) log((1-r)/2) + (1+r) log((1+r)/2)],
///                      f_e = r^2 - 1
///   Ginzburg-Landau:   f_c = (r^4 + 1) / 4,  f_e = r^2 / 2
///
/// For Flory-Huggins, derivative evaluations clamp their argument to
/// [-1 + margin, 1 - margin]; evaluations of f itself are defined on [-1, 1].
struct Potential {
  PotentialKind kind = PotentialKind::flory_huggins;
  double beta = 5.0;
  double barrier_margin = 1e-12;
};

/// Throws ConfigError for beta <= 0 or a margin outside (0, 1e-6).
void validate(const Potential& p);

struct Split {
  double convex;     // f_c
  double concave;    // f_e, entering f with a minus sign
};

/// f(rho). Flory-Huggins throws DomainError for |rho| > 1.
double eval_f(const Potential& p, double rho);
Split eval_split(const Potential& p, double rho);

/// f_c'(rho), clamped near +-1 for Flory-Huggins.
double eval_fc_prime(const Potential& p, double rho);
/// f_c''(rho), clamped like eval_fc_prime.
double eval_fc_second(const Potential& p, double rho);
double eval_fe_prime(const Potential& p, double rho);

/// Maps rho into the interior used for Flory-Huggins derivatives; .second is
/// true when the argument had to be moved. Identity for Ginzburg-Landau.
std::pair<double, bool> clamp_interior(const Potential& p, double rho);

/// Solves f_c'(rho) + 2 rho = target for rho.
///
/// The left side is strictly increasing; for Flory-Huggins the root is
/// bracketed inside the clamp interval and saturates at its ends.
double invert_implicit_map(const Potential& p, double target);
/// As above, starting Newton from `guess` (any real; clipped to the bracket).
double invert_implicit_map(const Potential& p, double target, double guess);

}  // namespace nlch
