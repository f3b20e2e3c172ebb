#include "nlch/snapshot.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "nlch/error.hpp"

namespace nlch {

namespace {

constexpr const char* kMagic = "NLCH-SNAPSHOT";

double parse_double(const std::string& token, const std::string& where) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("snapshot: bad number '" + token + "' " + where);
  return v;
}

}  // namespace

void write_snapshot(std::ostream& out, const Field& rho, double time) {
  const Grid& g = rho.grid();
  const int n = g.n();
  char buf[40];
  out << kMagic << " 1\n";
  out << n << ' ';
  std::snprintf(buf, sizeof buf, "%.17g", g.length());
  out << buf << ' ';
  std::snprintf(buf, sizeof buf, "%.17g", time);
  out << buf << '\n';
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", rho(i, j));
      if (j) out << ' ';
      out << buf;
    }
    out << '\n';
  }
}

void write_snapshot(const std::string& path, const Field& rho, double time) {
  std::ofstream out(path);
  if (!out) throw FormatError("snapshot: cannot open " + path + " for writing");
  write_snapshot(out, rho, time);
  if (!out) throw FormatError("snapshot: write to " + path + " failed");
}

Snapshot read_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw FormatError("snapshot: empty input");
  {
    std::istringstream head(line);
    std::string magic;
    int version = 0;
    if (!(head >> magic >> version) || magic != kMagic) {
      throw FormatError("snapshot: missing NLCH-SNAPSHOT header");
    }
    if (version != 1) {
      throw FormatError("snapshot: unsupported version " + std::to_string(version));
    }
  }
  if (!std::getline(in, line)) throw FormatError("snapshot: missing size line");
  std::istringstream dims(line);
  std::string tn, tl, tt, extra;
  if (!(dims >> tn >> tl >> tt) || (dims >> extra)) {
    throw FormatError("snapshot: size line must be 'N L time'");
  }
  int n = 0;
  {
    auto [ptr, ec] = std::from_chars(tn.data(), tn.data() + tn.size(), n);
    if (ec != std::errc() || ptr != tn.data() + tn.size() || n < 2) {
      throw FormatError("snapshot: bad grid size '" + tn + "'");
    }
  }
  const double length = parse_double(tl, "in size line");
  const double time = parse_double(tt, "in size line");
  if (!(length > 0.0)) throw FormatError("snapshot: nonpositive length");

  const Grid g = make_grid(n, length);
  std::vector<double> values;
  values.reserve(g.cells());
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string token;
    int count = 0;
    while (row >> token) {
      values.push_back(parse_double(token, "in row " + std::to_string(rows + 1)));
      ++count;
    }
    if (count == 0) continue;
    ++rows;
    if (count != n) {
      throw FormatError("snapshot: row " + std::to_string(rows) + " has " + std::to_string(count) +
                        " values, expected " + std::to_string(n));
    }
  }
  if (rows != n) {
    throw FormatError("snapshot: " + std::to_string(rows) + " rows, expected " + std::to_string(n));
  }
  return Snapshot{Field(g, std::move(values)), time};
}

Snapshot read_snapshot(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("snapshot: cannot open " + path);
  return read_snapshot(in);
}

}  // namespace nlch
