#include "nlch/grid.hpp"

#include <cmath>
#include <random>
#include <string>

#include "nlch/error.hpp"

namespace nlch {

namespace {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

template <class Term>
double accumulate(std::size_t count, Summation mode, Term term) {
  if (mode == Summation::compensated) {
    CompensatedSum acc;
    for (std::size_t k = 0; k < count; ++k) acc.add(term(k));
    return acc.value();
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < count; ++k) acc += term(k);
  return acc;
}

}  // namespace

Grid make_grid(int n, double length) {
  if (n < 2) throw ConfigError("grid: N must be at least 2, got " + std::to_string(n));
  if (!(length > 0.0) || !std::isfinite(length)) {
    throw ConfigError("grid: L must be positive and finite");
  }
  return Grid(n, length);
}

Field::Field(const Grid& grid, double fill) : grid_(grid), values_(grid.cells(), fill) {}

Field::Field(const Grid& grid, std::vector<double> values)
    : grid_(grid), values_(std::move(values)) {
  if (values_.size() != grid_.cells()) {
    throw ConfigError("field: expected " + std::to_string(grid_.cells()) + " values, got " +
                      std::to_string(values_.size()));
  }
}

double Field::max_abs() const noexcept {
  double m = 0.0;
  for (double v : values_) m = std::max(m, std::abs(v));
  return m;
}

bool Field::all_finite() const noexcept {
  for (double v : values_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Field& Field::operator+=(const Field& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += other.values_[k];
  return *this;
}

Field& Field::operator-=(const Field& other) {
  require_same_grid(grid_, other.grid_);
  for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= other.values_[k];
  return *this;
}

Field& Field::operator*=(double s) noexcept {
  for (double& v : values_) v *= s;
  return *this;
}

void require_same_grid(const Grid& a, const Grid& b) {
  if (!(a == b)) throw GridMismatch();
}

double inner_product(const Field& a, const Field& b, Summation mode) {
  require_same_grid(a.grid(), b.grid());
  const double h = a.grid().h();
  return h * h * accumulate(a.size(), mode, [&](std::size_t k) { return a[k] * b[k]; });
}

double l2_norm(const Field& a, Summation mode) { return std::sqrt(inner_product(a, a, mode)); }

MassTotals total_mass(const Field& a, Summation mode) {
  const double raw = accumulate(a.size(), mode, [&](std::size_t k) { return a[k]; });
  const double h = a.grid().h();
  return {raw, h * h * raw};
}

Field init_random_perturbation(const Grid& grid, double amplitude, std::uint64_t seed) {
  if (!(amplitude > 0.0 && amplitude < 1.0)) {
    throw ConfigError("perturbation amplitude must lie in (0, 1)");
  }
  std::mt19937_64 engine(seed);
  std::vector<double> values(grid.cells());
  for (double& v : values) {
    const double unit = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    v = amplitude * (2.0 * unit - 1.0);
  }
  CompensatedSum sum;
  for (double v : values) sum.add(v);
  const double mean = sum.value() / static_cast<double>(values.size());
  for (double& v : values) v -= mean;
  return Field(grid, std::move(values));
}

}  // namespace nlch
