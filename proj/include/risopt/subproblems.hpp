#pragma once

#include "risopt/fp.hpp"
#include "risopt/types.hpp"

namespace risopt {

/// Lifted beamforming iterate: W_k ~ w_k w_k^H coupled by a Schur block.
struct LiftedBeam {
  std::vector<CMat> W; // M x M Hermitian PSD per user
  std::vector<CVec> w;

  static LiftedBeam from_beams(const BeamformerSet& beams);
};

/// Lifted phase iterate over o = [conj(v); 1], O ~ o o^H.
struct LiftedPhase {
  CMat O; // (N_coh+1) x (N_coh+1)
  CVec o;

  static LiftedPhase from_phases(const Vec& theta_coh);
};

struct SubproblemInfeasible : std::runtime_error {
  double lower = 0, upper = 0;
  SubproblemInfeasible(const std::string& what, double lo = 0, double up = 0)
      : std::runtime_error(what), lower(lo), upper(up) {}
};

/// Solver returned a worse objective than the input iterate allows.
struct InternalConsistencyError : std::logic_error {
  using std::logic_error::logic_error;
};

struct ExtractionDegenerate : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConicOptions {
  double tol = 1e-8;          // duality-gap target of the interior-point solve
  double rank_penalty = 20.0; // weight of the linearized trace penalty
  double rank_tol = 1e-5;     // relative Tr(W) - ||w||^2 accepted at convergence
  int penalty_rounds = 4;     // escalations when the rank residual is too large
};

/// Closed form of the delivery-time linear program: smallest t satisfying
/// C1, C2 (at the current SINRs), C4 and 0 <= t <= T.
/// Throws SubproblemInfeasible (carrying both bounds) on an empty interval.
double solve_delivery_time(const SystemConfig& cfg, const Vec& gamma, double sum_beam_power);

/// Affine minorant of ||x||^2 around x_prev, evaluated at x:
/// -||x_prev||^2 + 2 Re<x_prev, x>. Touches at x = x_prev.
double linearize_trace(const CVec& x_prev, const CVec& x);

/// H_{1,k} = [diag(conj(h_{r,k}^coh)) H_coh ; (h_{r,k}^fix)^H Theta_fix H_fix],
/// so that o^H H_{1,k} = h_k^H for o = [conj(v); 1], v = e^{j theta_coh}.
CMat build_H1(const ChannelRealization& ch, const HybridPhaseConfig& ph, int k);

/// Convex beamforming program (lifted, SCA-linearized around prev.w).
LiftedBeam solve_beamforming(const ChannelRealization& ch, const HybridPhaseConfig& ph,
                             double t, const FpAuxiliaries& aux, const LiftedBeam& prev,
                             const SystemConfig& cfg, const ConicOptions& copts = {});

/// Convex phase-shift program (lifted, SCA-linearized around prev.o).
LiftedPhase solve_phase(const ChannelRealization& ch, const HybridPhaseConfig& ph,
                        const LiftedBeam& beams, double t, const FpAuxiliaries& aux,
                        const LiftedPhase& prev, const SystemConfig& cfg,
                        const ConicOptions& copts = {});

/// Coherent angles from a converged lifted solution, unit-modulus projected.
Vec extract_phases(const LiftedPhase& lp);

/// Lifted surrogate objective (the subproblem objective without penalties),
/// evaluated from trace forms. Used for the non-decrease consistency checks.
double lifted_beam_objective(const CMat& heff, const LiftedBeam& lb, double t,
                             const FpAuxiliaries& aux, const SystemConfig& cfg);
double lifted_phase_objective(const std::vector<CMat>& H1, const LiftedPhase& lp,
                              const LiftedBeam& beams, double t, const FpAuxiliaries& aux,
                              const SystemConfig& cfg);

} // namespace risopt
