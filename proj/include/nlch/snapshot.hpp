#pragma once

#include <istream>
#include <ostream>
#include <string>

#include "nlch/grid.hpp"

namespace nlch {

struct Snapshot {
  Field rho;
  double time;
};

/// Plain-text field dump:
///
///   NLCH-SNAPSHOT 1
///   N L time
///   N rows of N values (row i holds rho_{i,0} .. rho_{i,N-1}), 17 significant digits
void write_snapshot(std::ostream& out, const Field& rho, double time);
void write_snapshot(const std::string& path, const Field& rho, double time);

/// Throws FormatError on a wrong version line, malformed numbers or a row
/// count/length that disagrees with N.
Snapshot read_snapshot(std::istream& in);
Snapshot read_snapshot(const std::string& path);

}  // namespace nlch
