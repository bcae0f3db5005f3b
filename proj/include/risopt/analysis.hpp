#pragma once

#include "risopt/types.hpp"

namespace risopt {

/// Single-user simplified scenario of the delivery-time analysis.
struct SimpleScenario {
  double p_t = 0.5;   // fixed transmit power, W
  double p = 0.1;     // delivery power, W (assumed < p_t)
  double T = 1;       // frame, s
  double E_max = 1;   // J
  int b = 1;          // bits per coherent phase
  double R_F = 10;    // control-link rate, bits/s
  double R_min = 0;   // bits
  double C = 1;       // composite channel constant |h_r|^2 |h|^2
  double p_bar = 1e6; // transmit SNR scale p_t / delta^2

  void validate() const; // throws ConfigError
};

/// The analysis case does not apply under the scenario's parameters.
struct CaseInapplicable : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// No delivery time below T satisfies the scenario's constraints.
struct ScenarioInfeasible : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Principal branch of Lambert's W: w >= -1 with w e^w = x, for x >= -1/e.
double lambert_w0(double x);

/// Optimal delivery time max{b N_coh / R_F, (E_max - T p_t)/(p - p_t)}
/// (energy term dropped when nonpositive). Throws ScenarioInfeasible at t >= T.
double t_star(const SimpleScenario& s, double N_coh);

/// Coherent-combining SNR lower bound p_bar * C * N_coh^2.
double snr_lower_bound(const SimpleScenario& s, double N_coh);

/// Delivery-limited element count T R_F / (b W0(e T R_F sqrt(p_bar C)/b)).
/// Requires the large-SNR regime p_bar*C >= 1e4.
double n_star_case1(const SimpleScenario& s);

/// Energy-limited element count (E_max - T p_t) R_F / ((p - p_t) b).
/// Preconditions: E_max < T p_t, p < p_t, T p < E_max; else CaseInapplicable.
double n_star_case2(const SimpleScenario& s);

struct FeasibilityCase1 {
  bool feasible = false;
  bool undefined = false; // log argument <= 1: below the large-SNR regime
  double energy_residual = 0;
  double rate_residual = 0;
};
FeasibilityCase1 feasible_case1(const SimpleScenario& s, double n_star);

struct FeasibilityCase2 {
  bool feasible = false;
  double residual = 0;
};
FeasibilityCase2 feasible_case2(const SimpleScenario& s, double n_star);

enum class TimeRule { case1, case2 }; // delivery-bound t or energy-bound t

struct BruteForceResult {
  double argmax_exact = 0;   // maximizer of (T - t(N)) log2(1 + p_bar C N^2)
  double argmax_leading = 0; // same with the large-SNR leading term
  int best_integer = 0;      // better of the two nearest integers, exact objective
};
/// Golden-section maximization over [n_lo, n_hi] within (0, T R_F / b).
BruteForceResult brute_force_n(const SimpleScenario& s, TimeRule rule, double n_lo,
                               double n_hi);

} // namespace risopt
