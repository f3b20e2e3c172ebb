#include <cmath>
#include <sstream>
#include <vector>

#include "doctest.h"
#include "nlch/error.hpp"
#include "nlch/kernel.hpp"
#include "nlch/reference.hpp"

using namespace nlch;

namespace {

KernelSpec bump(double r) {
  KernelSpec s;
  s.support_radius = r;
  return s;
}

std::vector<double> vec(const Field& f) { return {f.values().begin(), f.values().end()}; }

Field shifted(const Field& f, int di, int dj) {
  Field out(f.grid());
  const int n = f.grid().n();
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) out(i + di, j + dj) = f(i, j);
  }
  return out;
}

}  // namespace

TEST_CASE("built kernels have unit mass and the lattice symmetries") {
  for (KernelShape shape : {KernelShape::bump, KernelShape::wendland}) {
    const Grid g = make_grid(128, 1.0);
    KernelSpec spec = bump(0.25);
    spec.shape = shape;
    const DiscreteKernel k = build_kernel(spec, g);
    double sum = 0.0;
    for (double w : k.weights()) {
      CHECK(w >= 0.0);
      sum += w;
    }
    CHECK(std::abs(sum * g.h() * g.h() - 1.0) <= 1e-14);
    CHECK(std::abs(k.mass() - 1.0) <= 1e-14);
    for (int n = 0; n < 128; n += 3) {
      for (int m = 0; m < 128; m += 5) {
        CHECK(k.weight(n, m) == k.weight((128 - n) % 128, m));
        CHECK(k.weight(n, m) == k.weight(n, (128 - m) % 128));
        CHECK(k.weight(n, m) == k.weight(m, n));
      }
    }
  }
}

TEST_CASE("kernel construction rejects supports that do not fit") {
  const Grid g = make_grid(32, 1.0);
  CHECK_THROWS_AS(build_kernel(bump(0.5), g), ConfigError);
  CHECK_THROWS_AS(build_kernel(bump(0.01), g), ConfigError);
  KernelSpec scaled = bump(0.25);
  scaled.scaling = 0.0;
  CHECK_THROWS_AS(build_kernel(scaled, g), ConfigError);
  scaled.scaling = 2.0;
  CHECK(scaled.effective_radius() == 0.125);
  CHECK_NOTHROW(build_kernel(scaled, g));
}

TEST_CASE("point-sampled bump matches a cell-averaged quadrature oracle") {
  const int n = 32;
  const Grid g = make_grid(n, 1.0);
  const double r = 0.45;
  const DiscreteKernel k = build_kernel(bump(r), g);
  // Average the continuum profile over each cell with a 40x40 midpoint rule.
  const int sub = 40;
  std::vector<double> avg(g.cells(), 0.0);
  double total = 0.0;
  for (int a = -n / 2 + 1; a <= n / 2; ++a) {
    for (int b = -n / 2 + 1; b <= n / 2; ++b) {
      double s = 0.0;
      for (int p = 0; p < sub; ++p) {
        for (int q = 0; q < sub; ++q) {
          const double x = (a - 0.5 + (p + 0.5) / sub) * g.h();
          const double y = (b - 0.5 + (q + 0.5) / sub) * g.h();
          s += kernel_profile(KernelShape::bump, std::hypot(x, y) / r);
        }
      }
      s /= sub * sub;
      avg[g.index(a, b)] = s;
      total += s;
    }
  }
  double peak = 0.0;
  for (double& v : avg) {
    v /= total * g.h() * g.h();
    peak = std::max(peak, v);
  }
  for (std::size_t c = 0; c < g.cells(); ++c) {
    if (avg[c] < 0.1 * peak) continue;  // relative error is meaningless in the far tail
    CHECK(std::abs(k.weights()[c] - avg[c]) <= 0.02 * avg[c]);
  }
}

TEST_CASE("convolution of constants and of a discrete delta") {
  const Grid g = make_grid(16, 1.0);
  const DiscreteKernel k = build_kernel(bump(0.3), g);
  for (ConvolutionMethod m : {ConvolutionMethod::direct, ConvolutionMethod::fft}) {
    const Field c = convolve(k, Field(g, 0.37), m);
    for (double v : c.values()) CHECK(std::abs(v - 0.37) <= 1e-12);
    Field delta(g);
    delta(0, 0) = 1.0 / (g.h() * g.h());
    const Field d = convolve(k, delta, m);
    for (std::size_t i = 0; i < g.cells(); ++i) CHECK(std::abs(d[i] - k.weights()[i]) <= 1e-12);
  }
}

TEST_CASE("direct, FFT and brute-force convolution agree") {
  for (int n : {4, 8}) {
    const Grid g = make_grid(n, 1.0);
    const DiscreteKernel k = build_kernel(bump(0.45), g);
    const Field rho = init_random_perturbation(g, 0.9, 77);
    const std::vector<double> weights(k.weights().begin(), k.weights().end());
    const auto oracle = reference::convolution(weights, vec(rho), n, g.h());
    const Field direct = convolve(k, rho, ConvolutionMethod::direct);
    const Field fft = convolve(k, rho, ConvolutionMethod::fft);
    for (std::size_t c = 0; c < g.cells(); ++c) {
      CHECK(std::abs(direct[c] - oracle[c]) <= 1e-13);
      CHECK(std::abs(fft[c] - oracle[c]) <= 1e-12);
    }
  }
  const Grid g = make_grid(64, 1.0);
  const DiscreteKernel k = build_kernel(bump(0.25), g);
  const Field rho = init_random_perturbation(g, 0.9, 78);
  const Field diff = convolve(k, rho, ConvolutionMethod::fft) - convolve(k, rho, ConvolutionMethod::direct);
  CHECK(diff.max_abs() <= 1e-12);
}

TEST_CASE("convolution commutes in the discrete inner product") {
  for (int n : {8, 33}) {
    const Grid g = make_grid(n, 1.0);
    const DiscreteKernel k = build_kernel(bump(0.3), g);
    const Field phi = init_random_perturbation(g, 0.8, 1);
    const Field psi = init_random_perturbation(g, 0.8, 2);
    const double lhs = inner_product(convolve(k, phi), psi);
    const double rhs = inner_product(convolve(k, psi), phi);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * std::abs(lhs));
  }
}

TEST_CASE("Young-type bound, averaging bounds and translation equivariance") {
  const Grid g = make_grid(24, 1.0);
  const DiscreteKernel k = build_kernel(bump(0.3), g);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Field phi = init_random_perturbation(g, 0.9, seed);
    const Field psi = init_random_perturbation(g, 0.6, seed + 100);
    for (double eps : {0.5, 1.0, 2.0}) {
      const double lhs = std::abs(inner_product(convolve(k, phi), psi));
      const double bound = eps / 2 * inner_product(phi, phi) + inner_product(psi, psi) / (2 * eps);
      CHECK(lhs <= bound + 1e-12);
    }
    const Field c = convolve(k, phi, ConvolutionMethod::direct);
    double lo = 1e300, hi = -1e300;
    for (double v : phi.values()) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    for (double v : c.values()) {
      CHECK(v >= lo - 1e-13);
      CHECK(v <= hi + 1e-13);
    }
    const Field a = convolve(k, shifted(phi, 3, -5), ConvolutionMethod::direct);
    const Field b = shifted(c, 3, -5);
    CHECK(std::equal(a.values().begin(), a.values().end(), b.values().begin()));
  }
}

TEST_CASE("kernel tables are parsed, re-symmetrized and validated") {
  const Grid g = make_grid(4, 1.0);
  std::ostringstream text;
  text << "4 1\n";
  for (int c = 0; c < 16; ++c) text << (c == 0 ? 4.0 : (c == 1 ? 2.0 : 0.0)) << ' ';
  std::istringstream in(text.str());
  const DiscreteKernel k = load_kernel_table(in, g);
  CHECK(k.weight(0, 1) == k.weight(1, 0));
  CHECK(k.weight(0, 1) == k.weight(0, -1));
  CHECK(std::abs(k.mass() - 1.0) <= 1e-14);

  std::istringstream bad_header("x 1\n1 1 1 1\n");
  CHECK_THROWS_AS(read_kernel_table(bad_header), FormatError);
  std::istringstream short_body("2 1\n1 1 1\n");
  CHECK_THROWS_AS(read_kernel_table(short_body), FormatError);
  std::istringstream mismatch("2 1\n1 0 0 0\n");
  CHECK_THROWS_AS(load_kernel_table(mismatch, g), FormatError);
}
