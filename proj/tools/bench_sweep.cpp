#include <chrono>
#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "risopt/sweep.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Compare the parallel sweep against the serial reference"};
  std::string scenario = "fig2a";
  int realizations = 4;
  int workers = 0;
  std::uint64_t seed = 1;
  app.add_option("--scenario", scenario, "fig2a|fig2b|fig2c");
  app.add_option("--realizations", realizations, "instances per grid point");
  app.add_option("--workers", workers, "threads for the parallel run (0 = all)");
  app.add_option("--seed", seed, "master seed");
  CLI11_PARSE(app, argc, argv);

  risopt::ScenarioSpec spec = risopt::make_scenario(scenario);
  spec.realizations = realizations;
  spec.seed = seed;

  using clock = std::chrono::steady_clock;

  auto t0 = clock::now();
  risopt::SweepResult serial = risopt::run_scenario_serial(spec);
  auto t1 = clock::now();
  risopt::SweepResult parallel = risopt::run_scenario(spec, workers);
  auto t2 = clock::now();

  const double ser_s = std::chrono::duration<double>(t1 - t0).count();
  const double par_s = std::chrono::duration<double>(t2 - t1).count();

  bool match = serial.cells.size() == parallel.cells.size();
  for (std::size_t i = 0; match && i < serial.cells.size(); ++i) {
    const auto& a = serial.cells[i];
    const auto& b = parallel.cells[i];
    match = a.grid_value == b.grid_value && a.baseline == b.baseline &&
            a.mean_tput == b.mean_tput && a.stderr_tput == b.stderr_tput &&
            a.n_feasible == b.n_feasible && a.mean_t == b.mean_t &&
            a.mean_iters == b.mean_iters;
  }

  std::cout << "scenario " << scenario << ", " << spec.grid.size() << " grid points x "
            << realizations << " realizations\n"
            << "serial   " << ser_s << " s\n"
            << "parallel " << par_s << " s (speedup " << ser_s / std::max(par_s, 1e-12)
            << "x)\n"
            << "results " << (match ? "identical" : "DIFFER") << "\n";
  return match ? 0 : 1;
}
