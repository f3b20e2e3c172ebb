#include "nlch/reference.hpp"

#include <cmath>

namespace nlch::reference {

namespace {

int wrap(int i, int n) { return ((i % n) + n) % n; }

double dot(const std::vector<double>& a, const std::vector<double>& b, double h) {
  long double s = 0.0L;
  for (std::size_t k = 0; k < a.size(); ++k) s += static_cast<long double>(a[k]) * b[k];
  return static_cast<double>(s) * h * h;
}

double fc_prime(PotentialKind kind, double beta, double r) {
  if (kind == PotentialKind::ginzburg_landau) return r * r * r;
  return std::log((1.0 + r) / (1.0 - r)) / beta;
}

double fe_prime(PotentialKind kind, double r) {
  return kind == PotentialKind::ginzburg_landau ? r : 2.0 * r;
}

double pos(double x) { return x > 0.0 ? x : 0.0; }
double neg(double x) { return x < 0.0 ? x : 0.0; }

}  // namespace

std::vector<double> convolution(const std::vector<double>& weights, const std::vector<double>& rho,
                                int n, double h) {
  std::vector<double> out(rho.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      long double s = 0.0L;
      for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
          s += static_cast<long double>(weights[a * n + b]) * rho[wrap(i - a, n) * n + wrap(j - b, n)];
        }
      }
      out[i * n + j] = static_cast<double>(s) * h * h;
    }
  }
  return out;
}

double free_energy_density(PotentialKind kind, double beta, double r) {
  if (kind == PotentialKind::ginzburg_landau) return (r * r - 1.0) * (r * r - 1.0) / 4.0;
  auto xlogx = [](double x) { return x > 0.0 ? x * std::log(x / 2.0) : 0.0; };
  return (xlogx(1.0 - r) + xlogx(1.0 + r)) / beta - (r * r - 1.0);
}

double energy(const std::vector<double>& weights, const std::vector<double>& rho, int n, double h,
              PotentialKind kind, double beta) {
  long double local = 0.0L;
  for (double r : rho) local += free_energy_density(kind, beta, r) + r * r;
  return static_cast<double>(local) * h * h - dot(convolution(weights, rho, n, h), rho, h);
}

double pseudo_energy(const std::vector<double>& weights, const std::vector<double>& next,
                     const std::vector<double>& curr, int n, double h, PotentialKind kind,
                     double beta) {
  std::vector<double> d(next.size());
  for (std::size_t k = 0; k < d.size(); ++k) d[k] = next[k] - curr[k];
  return energy(weights, next, n, h, kind, beta) + dot(d, d, h) +
         dot(convolution(weights, d, n, h), d, h);
}

std::vector<double> residual(const std::vector<double>& weights, const std::vector<double>& next,
                             const std::vector<double>& curr, int n, double h, double dt,
                             PotentialKind kind, double beta) {
  const std::vector<double> conv = convolution(weights, curr, n, h);
  std::vector<double> w(next.size());
  for (std::size_t k = 0; k < w.size(); ++k) {
    w[k] = fc_prime(kind, beta, next[k]) - fe_prime(kind, curr[k]) + 2.0 * next[k] - 2.0 * conv[k];
  }
  auto m = [beta](double x, double y) { return beta * pos(1.0 + x) * pos(1.0 - y); };
  // Flux through the face between cell a and its neighbour b in the + direction.
  auto flux = [&](int a, int b) {
    const double u = -(w[b] - w[a]) / h;
    return m(next[a], next[b]) * pos(u) + m(next[b], next[a]) * neg(u);
  };
  std::vector<double> r(next.size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      const int c = i * n + j;
      const double east = flux(c, wrap(i + 1, n) * n + j);
      const double west = flux(wrap(i - 1, n) * n + j, c);
      const double north = flux(c, i * n + wrap(j + 1, n));
      const double south = flux(i * n + wrap(j - 1, n), c);
      r[c] = (next[c] - curr[c]) / dt + (east - west + north - south) / h;
    }
  }
  return r;
}

}  // namespace nlch::reference
