#include "nlch/kernel.hpp"

#include <fftw3.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <iostream>
#include <mutex>
#include <string>

#include "nlch/error.hpp"

namespace nlch {

namespace detail {

namespace {

// FFTW's planner is not reentrant; execution with new-array calls is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer real_buffer(std::size_t n) {
  return RealBuffer(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
}

ComplexBuffer complex_buffer(std::size_t n) {
  return ComplexBuffer(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n)));
}

}  // namespace

class FftConvolver {
 public:
  FftConvolver(const Grid& grid, std::span<const double> weights)
      : n_(grid.n()), half_(grid.n() / 2 + 1) {
    const std::size_t real_size = grid.cells();
    const std::size_t spec_size = static_cast<std::size_t>(n_) * half_;
    auto in = real_buffer(real_size);
    auto out = complex_buffer(spec_size);
    {
      std::lock_guard lock(planner_mutex());
      forward_ = fftw_plan_dft_r2c_2d(n_, n_, in.get(), out.get(), FFTW_ESTIMATE);
      inverse_ = fftw_plan_dft_c2r_2d(n_, n_, out.get(), in.get(), FFTW_ESTIMATE);
    }
    std::copy(weights.begin(), weights.end(), in.get());
    fftw_execute_dft_r2c(forward_, in.get(), out.get());
    // h^2 from the convolution sum, 1/N^2 from the unnormalized inverse.
    const double h = grid.h();
    const double scale = h * h / static_cast<double>(real_size);
    spectrum_.resize(spec_size);
    for (std::size_t k = 0; k < spec_size; ++k) {
      spectrum_[k] = scale * std::complex<double>(out[k][0], out[k][1]);
    }
  }

  FftConvolver(const FftConvolver&) = delete;
  FftConvolver& operator=(const FftConvolver&) = delete;

  ~FftConvolver() {
    std::lock_guard lock(planner_mutex());
    fftw_destroy_plan(forward_);
    fftw_destroy_plan(inverse_);
  }

  void apply(std::span<const double> rho, std::span<double> result) const {
    const std::size_t real_size = rho.size();
    auto in = real_buffer(real_size);
    auto out = complex_buffer(spectrum_.size());
    std::copy(rho.begin(), rho.end(), in.get());
    fftw_execute_dft_r2c(forward_, in.get(), out.get());
    for (std::size_t k = 0; k < spectrum_.size(); ++k) {
      const std::complex<double> v =
          std::complex<double>(out[k][0], out[k][1]) * spectrum_[k];
      out[k][0] = v.real();
      out[k][1] = v.imag();
    }
    fftw_execute_dft_c2r(inverse_, out.get(), in.get());
    std::copy(in.get(), in.get() + real_size, result.begin());
  }

 private:
  int n_;
  int half_;
  fftw_plan forward_ = nullptr;
  fftw_plan inverse_ = nullptr;
  std::vector<std::complex<double>> spectrum_;
};

}  // namespace detail

double kernel_profile(KernelShape shape, double s) {
  s = std::abs(s);
  if (s >= 1.0) return 0.0;
  switch (shape) {
    case KernelShape::bump:
      return std::exp(-1.0 / (1.0 - s * s));
    case KernelShape::wendland: {
      const double t = 1.0 - s;
      return t * t * t * t * (4.0 * s + 1.0);
    }
    case KernelShape::table:
      break;
  }
  throw ConfigError("kernel_profile: table kernels have no continuum profile");
}

namespace {

int signed_offset(int k, int n) { return k <= n / 2 ? k : k - n; }

}  // namespace

DiscreteKernel make_discrete_kernel(const Grid& grid, std::vector<double> raw) {
  const int n = grid.n();
  if (raw.size() != grid.cells()) {
    throw ConfigError("kernel: expected " + std::to_string(grid.cells()) + " weights");
  }
  for (double w : raw) {
    if (!(w >= 0.0) || !std::isfinite(w)) {
      throw ConfigError("kernel: weights must be finite and nonnegative");
    }
  }

  // Average over the eight lattice symmetries. The images are summed in sorted
  // order so every member of an orbit receives bit-identical weight.
  std::vector<double> sym(raw.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::array<double, 8> images = {
          raw[grid.index(i, j)],   raw[grid.index(-i, j)],  raw[grid.index(i, -j)],
          raw[grid.index(-i, -j)], raw[grid.index(j, i)],   raw[grid.index(-j, i)],
          raw[grid.index(j, -i)],  raw[grid.index(-j, -i)]};
      std::sort(images.begin(), images.end());
      double s = 0.0;
      for (double v : images) s += v;
      sym[grid.index(i, j)] = s / 8.0;
    }
  }

  double total = 0.0;
  for (double w : sym) total += w;
  if (!(total > 0.0)) throw ConfigError("kernel: all sampled weights are zero");
  const double h = grid.h();
  const double inv_mass = 1.0 / (h * h * total);

  DiscreteKernel kernel(grid);
  kernel.weights_.resize(sym.size());
  double max_weight = 0.0;
  for (std::size_t k = 0; k < sym.size(); ++k) {
    kernel.weights_[k] = sym[k] * inv_mass;
    max_weight = std::max(max_weight, kernel.weights_[k]);
  }
  double change = 0.0;
  for (std::size_t k = 0; k < sym.size(); ++k) {
    change = std::max(change, std::abs(kernel.weights_[k] - raw[k]));
  }
  kernel.correction_ = change / max_weight;

  double sum = 0.0;
  for (double w : kernel.weights_) sum += w;
  kernel.mass_ = h * h * sum;

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double w = kernel.weights_[grid.index(i, j)];
      if (w != 0.0) kernel.stencil_.push_back({signed_offset(i, n), signed_offset(j, n), w});
    }
  }
  kernel.fft_ = std::make_shared<const detail::FftConvolver>(grid, kernel.weights_);
  return kernel;
}

DiscreteKernel build_kernel(const KernelSpec& spec, const Grid& grid) {
  if (spec.shape == KernelShape::table) {
    if (spec.table.size() != grid.cells()) {
      throw ConfigError("kernel: table size does not match the grid");
    }
    return make_discrete_kernel(grid, spec.table);
  }
  if (!(spec.scaling > 0.0)) throw ConfigError("kernel: scaling gamma must be positive");
  const double radius = spec.effective_radius();
  if (!(radius > 0.0)) throw ConfigError("kernel: support radius must be positive");
  if (!(2.0 * radius < grid.length())) {
    throw ConfigError("kernel: support diameter must be smaller than the box side L");
  }
  if (radius < grid.h()) {
    throw ConfigError("kernel: support radius is smaller than one cell");
  }
  const int n = grid.n();
  const double h = grid.h();
  std::vector<double> raw(grid.cells());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const double dx = h * signed_offset(i, n);
      const double dy = h * signed_offset(j, n);
      raw[grid.index(i, j)] = kernel_profile(spec.shape, std::hypot(dx, dy) / radius);
    }
  }
  return make_discrete_kernel(grid, std::move(raw));
}

Field convolve(const DiscreteKernel& kernel, const Field& rho) {
  require_same_grid(kernel.grid(), rho.grid());
  const Grid& g = rho.grid();
  const int n = g.n();
  const double h2 = g.h() * g.h();
  Field out(g);
  const auto& taps = kernel.stencil();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (const auto& t : taps) acc += t.weight * rho(i - t.di, j - t.dj);
      out(i, j) = h2 * acc;
    }
  }
  return out;
}

Field convolve_fft(const DiscreteKernel& kernel, const Field& rho) {
  require_same_grid(kernel.grid(), rho.grid());
  Field out(rho.grid());
  kernel.fft_->apply(rho.values(), out.values());
  return out;
}

Field convolve(const DiscreteKernel& kernel, const Field& rho, ConvolutionMethod method) {
  return method == ConvolutionMethod::fft ? convolve_fft(kernel, rho) : convolve(kernel, rho);
}

KernelTable read_kernel_table(std::istream& in) {
  KernelTable table;
  if (!(in >> table.n >> table.length)) throw FormatError("kernel table: missing 'N L' header");
  if (table.n < 2 || !(table.length > 0.0)) throw FormatError("kernel table: invalid header");
  const std::size_t count = static_cast<std::size_t>(table.n) * table.n;
  table.spec.shape = KernelShape::table;
  table.spec.table.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    if (!(in >> table.spec.table[k])) {
      throw FormatError("kernel table: expected " + std::to_string(count) + " weights, got " +
                        std::to_string(k));
    }
  }
  double extra = 0.0;
  if (in >> extra) throw FormatError("kernel table: trailing values after N*N weights");
  return table;
}

DiscreteKernel load_kernel_table(std::istream& in, const Grid& grid) {
  KernelTable table = read_kernel_table(in);
  if (table.n != grid.n() || table.length != grid.length()) {
    throw FormatError("kernel table: header does not match the simulation grid");
  }
  DiscreteKernel kernel = build_kernel(table.spec, grid);
  if (kernel.correction() > 1e-6) {
    std::cerr << "warning: kernel table was re-symmetrized/re-normalized (relative change "
              << kernel.correction() << ")\n";
  }
  return kernel;
}

}  // namespace nlch
