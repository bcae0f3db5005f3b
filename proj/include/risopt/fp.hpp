#pragma once

#include "risopt/types.hpp"

namespace risopt {

/// Auxiliaries of the quadratic-transform reformulation.
struct FpAuxiliaries {
  Vec rho; // SINR surrogate, rho_k >= 0
  Vec eta; // transform multiplier, eta_k >= 0
};

/// Optimal rho for fixed remaining blocks: rho_k = gamma_k.
Vec update_rho(const Vec& gamma);

/// Optimal eta for fixed remaining blocks:
/// eta_k = sqrt((1+rho_k) |h_k^H w_k|^2) / (sum_i |h_k^H w_i|^2 + delta2_k).
Vec update_eta(const CMat& heff, const BeamformerSet& beams, const Vec& rho, const Vec& delta2);

/// Quadratic surrogate of the SINR ratio:
/// f_k = 2 eta_k sqrt((1+rho_k) |h_k^H w_k|^2) - eta_k^2 (sum_i |h_k^H w_i|^2 + delta2_k).
Vec surrogate_f(const CMat& heff, const BeamformerSet& beams, const Vec& rho, const Vec& eta,
                const Vec& delta2);

/// Reformulated sum throughput, (T-t)/ln2 * sum_k (ln(1+rho_k) - rho_k + f_k).
/// Equals sum_k (T-t) log2(1+gamma_k) at rho = gamma and optimal eta.
double surrogate_objective(const Vec& rho, const Vec& f, double T, double t);

} // namespace risopt
