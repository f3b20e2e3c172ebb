#pragma once

#include <vector>

#include "nlch/potential.hpp"

namespace nlch::reference {

// Brute-force versions of the discrete operators, written straight from their
// definitions on plain row-major arrays (index i*n + j). They share no code with
// the production path and are meant for small grids.

/// c_{i,j} = h^2 sum over all n^2 offsets of J_{a,b} rho_{(i-a) mod n, (j-b) mod n}.
std::vector<double> convolution(const std::vector<double>& weights, const std::vector<double>& rho,
                                int n, double h);

/// Flory-Huggins or Ginzburg-Landau f(r) from the closed forms.
double free_energy_density(PotentialKind kind, double beta, double r);

/// E_h(rho).
double energy(const std::vector<double>& weights, const std::vector<double>& rho, int n, double h,
              PotentialKind kind, double beta);

/// E^_h(next, curr).
double pseudo_energy(const std::vector<double>& weights, const std::vector<double>& next,
                     const std::vector<double>& curr, int n, double h, PotentialKind kind,
                     double beta);

/// Residual (next - curr)/dt + div F of the implicit upwind step.
std::vector<double> residual(const std::vector<double>& weights, const std::vector<double>& next,
                             const std::vector<double>& curr, int n, double h, double dt,
                             PotentialKind kind, double beta);

}  // namespace nlch::reference
