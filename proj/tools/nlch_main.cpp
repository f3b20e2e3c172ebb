// Command-line front end: run, verify, slope, preset.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include "CLI11.hpp"
#include "nlch/config.hpp"
#include "nlch/diagnostics.hpp"
#include "nlch/error.hpp"
#include "nlch/run.hpp"
#include "nlch/verify.hpp"

namespace {

// Reads the time and energy columns of a timeseries CSV.
std::vector<nlch::EnergySample> read_energy_series(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw nlch::FormatError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw nlch::FormatError(path + ": empty file");
  std::vector<std::string> columns;
  {
    std::istringstream header(line);
    std::string name;
    while (std::getline(header, name, ',')) columns.push_back(name);
  }
  int time_col = -1, energy_col = -1;
  for (int c = 0; c < static_cast<int>(columns.size()); ++c) {
    if (columns[c] == "time") time_col = c;
    if (columns[c] == "energy") energy_col = c;
  }
  if (time_col < 0 || energy_col < 0) {
    throw nlch::FormatError(path + ": header lacks time/energy columns");
  }
  std::vector<nlch::EnergySample> series;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (static_cast<int>(cells.size()) != static_cast<int>(columns.size())) {
      throw nlch::FormatError(path + ": line " + std::to_string(line_no) + " has wrong column count");
    }
    try {
      series.push_back({std::stod(cells[time_col]), std::stod(cells[energy_col])});
    } catch (const std::exception&) {
      throw nlch::FormatError(path + ": line " + std::to_string(line_no) + " is not numeric");
    }
  }
  return series;
}

nlch::RunConfig assemble_config(const std::string& file, const std::string& preset_name,
                                const std::vector<std::string>& overrides) {
  std::string text;
  if (!preset_name.empty()) text += "preset = " + preset_name + "\n";
  if (!file.empty()) {
    std::ifstream in(file);
    if (!in) throw nlch::ConfigError("cannot open config file " + file);
    std::ostringstream body;
    body << in.rdbuf();
    text += body.str() + "\n";
  }
  for (const auto& o : overrides) text += o + "\n";
  return nlch::parse_config(text);
}

}  // namespace

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("NLCH_THREADS")) {
    const int t = std::atoi(threads);
    if (t > 0) omp_set_num_threads(t);
  }

  CLI::App app{"Nonlocal Cahn-Hilliard solver with degenerate mobility.\n"
               "Environment: NLCH_THREADS sets the OpenMP thread count."};
  app.require_subcommand(1);

  std::string config_file, preset_name;
  std::vector<std::string> overrides;

  auto* run = app.add_subcommand("run", "Run a simulation and print its summary");
  run->add_option("config", config_file, "Config file (key = value lines)");
  run->add_option("--preset", preset_name, "Start from a preset; the config file overrides it");
  run->add_option("--set", overrides, "Extra 'key=value' lines applied last")->take_all();

  auto* verify = app.add_subcommand("verify", "Run the invariant and oracle checks");
  verify->add_option("config", config_file, "Optional config supplying seed, kernel and solver");

  std::string csv_path;
  std::vector<double> window;
  auto* slope = app.add_subcommand("slope", "Fit the log-log energy slope of a timeseries CSV");
  slope->add_option("timeseries", csv_path, "Timeseries CSV written by run")->required();
  slope->add_option("--window", window, "Time window t_min,t_max")
      ->delimiter(',')
      ->expected(2)
      ->required();

  std::string shown_preset;
  auto* preset = app.add_subcommand("preset", "Print a preset as config text");
  preset->add_option("name", shown_preset, "fig1-naive | fig2-fh | fig2-gl | fig4-slope")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      if (config_file.empty() && preset_name.empty()) {
        std::cerr << "run: give a config file or --preset\n";
        return 2;
      }
      const nlch::RunConfig config = assemble_config(config_file, preset_name, overrides);
      const nlch::RunSummary summary = nlch::run_simulation(config);
      std::cout << nlch::format_summary(summary);
      return summary.completed || summary.first_bound_violation ? 0 : 1;
    }
    if (*verify) {
      const nlch::RunConfig config = config_file.empty() ? nlch::RunConfig{}
                                                         : nlch::load_config(config_file);
      const auto results = nlch::run_verification(config, &std::cout);
      long failed = 0;
      for (const auto& r : results) failed += r.passed ? 0 : 1;
      std::cout << (results.size() - failed) << "/" << results.size() << " checks passed\n";
      return failed == 0 ? 0 : 1;
    }
    if (*slope) {
      const auto series = read_energy_series(csv_path);
      const nlch::SlopeFit fit = nlch::fit_dissipation_slope(series, window[0], window[1]);
      std::cout << "slope " << fit.slope << " over " << fit.points << " points";
      if (fit.offset != 0.0) std::cout << " (offset " << fit.offset << ")";
      std::cout << "\n";
      return 0;
    }
    if (*preset) {
      std::cout << nlch::format_config(nlch::preset(shown_preset));
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
