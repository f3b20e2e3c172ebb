#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "nlch/config.hpp"

namespace nlch {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Runs the invariant and oracle checks on small grids (both potentials, a
/// short stepping matrix) and prints one PASS/FAIL line per property to `log`
/// when given. The config supplies the seed and kernel shape.
std::vector<CheckResult> run_verification(const RunConfig& config, std::ostream* log = nullptr);

}  // namespace nlch
