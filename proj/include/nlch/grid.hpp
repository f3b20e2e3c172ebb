#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace nlch {

/// Periodic uniform N x N lattice on the square [0, L)^2.
///
/// Cell (i, j) covers [i h, (i+1) h) x [j h, (j+1) h); i runs along x and is
/// the slow (row) index of the row-major storage used by Field.
class Grid {
 public:
  int n() const noexcept { return n_; }
  double length() const noexcept { return length_; }
  double h() const noexcept { return h_; }
  std::size_t cells() const noexcept { return static_cast<std::size_t>(n_) * n_; }

  /// Reduces i modulo N into [0, N).
  int wrap(int i) const noexcept {
    int r = i % n_;
    return r < 0 ? r + n_ : r;
  }

  std::size_t index(int i, int j) const noexcept {
    return static_cast<std::size_t>(wrap(i)) * n_ + wrap(j);
  }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  friend Grid make_grid(int n, double length);
  Grid(int n, double length) : n_(n), length_(length), h_(length / n) {}

  int n_;
  double length_;
  double h_;
};

/// Throws ConfigError unless n >= 2 and length > 0.
Grid make_grid(int n, double length);

/// Cell averages on a Grid, stored row-major.
class Field {
 public:
  explicit Field(const Grid& grid, double fill = 0.0);
  Field(const Grid& grid, std::vector<double> values);

  const Grid& grid() const noexcept { return grid_; }
  std::span<const double> values() const noexcept { return values_; }
  std::span<double> values() noexcept { return values_; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Periodic access; (i + N, j) aliases (i, j).
  double operator()(int i, int j) const noexcept { return values_[grid_.index(i, j)]; }
  double& operator()(int i, int j) noexcept { return values_[grid_.index(i, j)]; }

  double operator[](std::size_t k) const noexcept { return values_[k]; }
  double& operator[](std::size_t k) noexcept { return values_[k]; }

  double max_abs() const noexcept;
  bool all_finite() const noexcept;

  Field& operator+=(const Field& other);
  Field& operator-=(const Field& other);
  Field& operator*=(double s) noexcept;

  friend Field operator+(Field a, const Field& b) { return a += b; }
  friend Field operator-(Field a, const Field& b) { return a -= b; }
  friend Field operator*(double s, Field a) { return a *= s; }

 private:
  Grid grid_;
  std::vector<double> values_;
};

/// Values on the faces of a Grid. x[idx(i,j)] lives on face (i+1/2, j) and
/// y[idx(i,j)] on face (i, j+1/2); face (N-1/2, j) is the same face as (-1/2, j).
struct EdgeField {
  explicit EdgeField(const Grid& g) : grid(g), x(g.cells(), 0.0), y(g.cells(), 0.0) {}

  Grid grid;
  std::vector<double> x;
  std::vector<double> y;
};

enum class Summation { ordered, compensated };

void require_same_grid(const Grid& a, const Grid& b);

/// <a, b>_h = h^2 sum a_ij b_ij, accumulated in row-major order.
double inner_product(const Field& a, const Field& b, Summation mode = Summation::ordered);
double l2_norm(const Field& a, Summation mode = Summation::ordered);

struct MassTotals {
  double raw;       // sum of cell values
  double integral;  // h^2 * raw
};

MassTotals total_mass(const Field& a, Summation mode = Summation::ordered);

/// I.i.d. uniform values on [-amplitude, amplitude] shifted to zero mean.
///
/// Uniform draws come from std::mt19937_64 (fully specified by the standard)
/// mapped to [0, 1) through the top 53 bits, so results are identical on all
/// conforming platforms.
Field init_random_perturbation(const Grid& grid, double amplitude, std::uint64_t seed);

}  // namespace nlch
