#pragma once

#include "risopt/types.hpp"

namespace risopt {

/// Effective BS -> user-k channel row h_k^H under the hybrid phase shift:
/// h_k^H = (h_{r,k}^coh)^H diag(e^{j theta_coh}) H_coh
///       + (h_{r,k}^fix)^H diag(e^{j theta_fix}) H_fix.
CRow effective_channel(const ChannelRealization& ch, const HybridPhaseConfig& ph, int k);

/// All users stacked; row k is effective_channel(ch, ph, k).
CMat effective_channels(const ChannelRealization& ch, const HybridPhaseConfig& ph);

/// Per-user SINR: |h_k^H w_k|^2 / (sum_{i!=k} |h_k^H w_i|^2 + delta2_k).
/// `heff` holds h_k^H in row k.
Vec sinr(const CMat& heff, const BeamformerSet& beams, const Vec& delta2);

/// R_k = (T - t) * log2(1 + gamma_k).
Vec throughput(const Vec& gamma, double T, double t);

/// Energy spent over the frame: p*t + (T - t) * sum_k ||w_k||^2.
double energy_used(double t, double p, const BeamformerSet& beams, double T);

/// Signed-slack report for constraints C1-C4 of the throughput problem.
/// Infeasibility is reported, never thrown. Tolerance is relative.
FeasibilityReport check_feasibility(const Solution& sol, const SystemConfig& cfg,
                                    const ChannelRealization& ch, double tol = 1e-6);

} // namespace risopt
