#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "risopt/subproblems.hpp"
#include "risopt/types.hpp"

namespace risopt {

struct SolverOptions {
  int max_outer_iters = 50;
  double rel_tol = 1e-4;        // relative surrogate change at convergence
  double conic_tol = 1e-8;      // duality gap of the conic subproblems
  double feasibility_tol = 1e-6;
  int init_retries = 10;        // fresh coherent phases when C2 fails at init
  std::uint64_t seed = 0;       // initialization randomness
};

struct TraceRow {
  int iter = 0;
  double surrogate = 0;
  double true_tput = 0;
  double t = 0;
  double energy_slack = 0;
  double min_rate_slack = 0;
  double wall_ms = 0;
};

struct SolveTrace {
  std::vector<TraceRow> rows;
  bool converged = false;
  std::string message;

  int iters() const { return rows.empty() ? 0 : rows.back().iter; }
};

struct InitializationInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Full iterate of the alternating optimization.
struct AoState {
  HybridPhaseConfig phases;
  BeamformerSet beams;
  double t = 0;
  FpAuxiliaries aux;
  double surrogate = 0; // at current (phases, beams, t, aux)
};

/// Random coherent/fixed phases, t at the delivery bound, matched-filter
/// beams at 90% of the residual power budget; retries fresh coherent phases
/// until the rate floors hold. Throws InitializationInfeasible otherwise.
AoState initialize(const SystemConfig& cfg, const ChannelRealization& ch,
                   const SolverOptions& opts = {});

/// One outer iteration: rho, eta, t, beams, phases, with a monotone
/// safeguard on each extracted block.
AoState step(const AoState& state, const SystemConfig& cfg, const ChannelRealization& ch,
             const SolverOptions& opts = {});

/// Alternate until the relative surrogate change drops below rel_tol or the
/// iteration cap is hit (trace flagged "max-iters").
std::pair<Solution, SolveTrace> solve(const SystemConfig& cfg, const ChannelRealization& ch,
                                      const SolverOptions& opts = {});

} // namespace risopt
