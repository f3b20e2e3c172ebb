#pragma once

#include <istream>
#include <memory>
#include <vector>

#include "nlch/grid.hpp"

namespace nlch {

enum class KernelShape { bump, wendland, table };

/// Continuum interaction kernel description.
///
/// The kernel is radial, nonnegative and supported on |x| < support_radius / scaling.
/// `scaling` is the Kac parameter gamma of J_gamma(x) = gamma^d J(gamma x); since the
/// discrete kernel is renormalized to unit mass, only the effective radius matters.
struct KernelSpec {
  KernelShape shape = KernelShape::bump;
  double support_radius = 0.25;
  double scaling = 1.0;
  /// N*N row-major weights for KernelShape::table, indexed by lattice offset.
  std::vector<double> table;

  double effective_radius() const noexcept { return support_radius / scaling; }
};

/// Radial profile of the built-in shapes at s = |x| / radius (unnormalized).
double kernel_profile(KernelShape shape, double s);

namespace detail {
class FftConvolver;
}

/// Kernel weights J_{n,m} on the lattice offsets of a grid.
///
/// Weights are nonnegative, invariant under n -> -n, m -> -m and n <-> m (indices
/// mod N), and normalized so that h^2 * sum J = 1.
class DiscreteKernel {
 public:
  struct Tap {
    int di;
    int dj;
    double weight;
  };

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> weights() const noexcept { return weights_; }
  double weight(int n, int m) const noexcept { return weights_[grid_.index(n, m)]; }
  double mass() const noexcept { return mass_; }
  /// Nonzero weights, with offsets reduced to (-N/2, N/2].
  const std::vector<Tap>& stencil() const noexcept { return stencil_; }
  /// Largest relative change applied by symmetrization and renormalization.
  double correction() const noexcept { return correction_; }

 private:
  friend DiscreteKernel make_discrete_kernel(const Grid& grid, std::vector<double> raw);

  DiscreteKernel(const Grid& grid) : grid_(grid) {}

  Grid grid_;
  std::vector<double> weights_;
  double mass_ = 0.0;
  double correction_ = 0.0;
  std::vector<Tap> stencil_;
  std::shared_ptr<const detail::FftConvolver> fft_;

  friend Field convolve_fft(const DiscreteKernel& kernel, const Field& rho);
};

/// Symmetrizes and normalizes raw lattice weights. Throws ConfigError on negative
/// or all-zero input.
DiscreteKernel make_discrete_kernel(const Grid& grid, std::vector<double> raw);

/// Samples the continuum kernel at cell-centre offsets from the origin cell.
DiscreteKernel build_kernel(const KernelSpec& spec, const Grid& grid);

/// [J * rho]_{i,j} = h^2 sum_{n,m} J_{n,m} rho_{i-n, j-m}, summed over the stencil.
Field convolve(const DiscreteKernel& kernel, const Field& rho);

/// Same contract as convolve(), evaluated with FFTW.
Field convolve_fft(const DiscreteKernel& kernel, const Field& rho);

enum class ConvolutionMethod { direct, fft };

Field convolve(const DiscreteKernel& kernel, const Field& rho, ConvolutionMethod method);

/// Parses the plain-text table format: a header line "N L" followed by N*N
/// weights in row-major order. Returns a spec with shape == table; the grid
/// it is built on must match the header.
struct KernelTable {
  int n = 0;
  double length = 0.0;
  KernelSpec spec;
};

KernelTable read_kernel_table(std::istream& in);

/// Builds a table kernel, logging a warning to stderr when the symmetrization
/// or normalization correction exceeds 1e-6.
DiscreteKernel load_kernel_table(std::istream& in, const Grid& grid);

}  // namespace nlch
