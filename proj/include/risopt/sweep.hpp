#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "risopt/ao.hpp"
#include "risopt/channel.hpp"
#include "risopt/types.hpp"

namespace risopt {

/// Table I parameter set (R_F at the midpoint of the quoted range).
SystemConfig table1_config();

/// Monte-Carlo sweep description: which parameter varies, over what grid,
/// how many channel realizations, and which baselines run at each point.
struct ScenarioSpec {
  std::string scenario = "custom"; // fig2a | fig2b | fig2c | custom
  std::string param;               // swept SystemConfig key (unit-suffixed)
  std::vector<double> grid;
  int realizations = 100;
  std::uint64_t seed = 0;
  std::vector<std::string> baselines = {"proposed"};
  int b_variant_bits = 2;
  SystemConfig base;
  Geometry geom;
  FadingParams fading;
  SolverOptions solver;

  void validate() const; // throws ConfigError

  bool operator==(const ScenarioSpec&) const;

  std::string to_json() const;
  static ScenarioSpec from_json(const std::string& text);
};

/// Built-in presets matching the three figure sweeps.
ScenarioSpec make_scenario(const std::string& id);

/// Repartition / requantize the config for a baseline; channel dimensions
/// (total N, M) are preserved so paired draws stay comparable.
SystemConfig baseline_config(const SystemConfig& base, const std::string& which);

struct SweepCell {
  double grid_value = 0;
  std::string baseline;
  double mean_tput = 0;
  double stderr_tput = 0;
  int n_feasible = 0;
  int n_infeasible = 0;
  double mean_t = 0;
  double mean_iters = 0;
};

struct SweepResult {
  ScenarioSpec spec;
  std::vector<SweepCell> cells; // grid-major, then baseline order
};

/// Monte-Carlo sweep; instances run in parallel (workers <= 0: all cores)
/// with a deterministic reduction by (grid, baseline, realization) index.
SweepResult run_scenario(const ScenarioSpec& spec, int workers = 0);

/// Serial reference implementation; identical output by construction.
SweepResult run_scenario_serial(const ScenarioSpec& spec);

/// Write <scenario>.csv / <scenario>.json under `dir`; format is
/// "csv", "json" or "both". Emission is byte-deterministic.
std::vector<std::string> emit(const SweepResult& result, const std::string& dir,
                              const std::string& format);

} // namespace risopt
