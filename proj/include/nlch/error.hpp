#pragma once

#include <stdexcept>
#include <string>

namespace nlch {

/// Invalid run or object configuration (bad N, L, dt, kernel radius, ...).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Two operands were built on different grids.
class GridMismatch : public std::invalid_argument {
 public:
  GridMismatch() : std::invalid_argument("fields live on different grids") {}
};

/// A potential was evaluated outside the domain where it is defined.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed snapshot, kernel table, CSV or config text.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The nonlinear solver did not reach the residual tolerance.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, long step_index, double best_residual)
      : std::runtime_error(what), step_index_(step_index), best_residual_(best_residual) {}

  long step_index() const noexcept { return step_index_; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  long step_index_;
  double best_residual_;
};

}  // namespace nlch
