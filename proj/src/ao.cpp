#include "risopt/ao.hpp"

#include <chrono>
#include <cmath>

#include "risopt/channel.hpp"
#include "risopt/core_model.hpp"
#include "risopt/fp.hpp"

namespace risopt {

namespace {

double surrogate_at(const SystemConfig& cfg, const CMat& heff, const BeamformerSet& beams,
                    double t, const FpAuxiliaries& aux) {
  const Vec f = surrogate_f(heff, beams, aux.rho, aux.eta, cfg.delta2);
  return surrogate_objective(aux.rho, f, cfg.T, t);
}

Solution make_solution(const SystemConfig& cfg, const ChannelRealization& ch,
                       const AoState& st) {
  Solution sol;
  sol.phases = st.phases;
  sol.beams = st.beams;
  sol.t = st.t;
  const CMat heff = effective_channels(ch, st.phases);
  const Vec gamma = sinr(heff, st.beams, cfg.delta2);
  sol.per_user_rate = throughput(gamma, cfg.T, st.t);
  sol.objective = sol.per_user_rate.sum();
  return sol;
}

TraceRow make_row(const SystemConfig& cfg, const ChannelRealization& ch, const AoState& st,
                  int iter, double wall_ms) {
  TraceRow row;
  row.iter = iter;
  row.surrogate = st.surrogate;
  row.t = st.t;
  row.wall_ms = wall_ms;
  const Solution sol = make_solution(cfg, ch, st);
  row.true_tput = sol.objective;
  const FeasibilityReport rep = check_feasibility(sol, cfg, ch);
  row.energy_slack = rep.c1_slack;
  row.min_rate_slack = rep.c2_slack.size() > 0 ? rep.c2_slack.minCoeff() : 0.0;
  return row;
}

} // namespace

AoState initialize(const SystemConfig& cfg, const ChannelRealization& ch,
                   const SolverOptions& opts) {
  cfg.validate();
  ch.validate(cfg);

  const double t0 = cfg.min_delivery_time();
  if (t0 >= cfg.T)
    throw InitializationInfeasible("initialize: delivery time b*N_coh/R_F exceeds the frame");
  if (cfg.p * t0 > cfg.E_max)
    throw InitializationInfeasible("initialize: energy budget cannot cover phase delivery");
  const double P0 = 0.9 * (cfg.E_max - cfg.p * t0) / (cfg.T - t0);
  if (P0 <= 0) throw InitializationInfeasible("initialize: no transmit power budget");

  auto rng = make_rng(opts.seed, 0);
  AoState st;
  st.t = t0;
  st.phases.theta_fix = Vec(cfg.N_fix);
  for (int n = 0; n < cfg.N_fix; ++n)
    st.phases.theta_fix[n] = 2.0 * M_PI * uniform01(rng);

  const auto floors_met = [&](const Vec& rate) {
    for (int k = 0; k < cfg.K; ++k)
      if (rate[k] < cfg.R_min[k] - opts.feasibility_tol * std::max(1.0, cfg.R_min[k]))
        return false;
    return true;
  };

  // Build beams for the given phases (matched filters first, zero-forcing as
  // fallback since matched filtering is interference-limited) and accept the
  // start point when all rate floors hold.
  const auto attempt = [&](const HybridPhaseConfig& ph) {
    const CMat heff = effective_channels(ch, ph);
    BeamformerSet beams;
    beams.w.assign(cfg.K, CVec::Zero(cfg.M));
    for (int k = 0; k < cfg.K; ++k) {
      const CVec hk = heff.row(k).adjoint();
      const double nrm = hk.norm();
      if (nrm < 1e-300) return false;
      beams.w[k] = std::sqrt(P0 / cfg.K) * hk / nrm;
    }
    Vec gamma = sinr(heff, beams, cfg.delta2);
    if (!floors_met(throughput(gamma, cfg.T, t0))) {
      if (cfg.K > cfg.M) return false;
      const CMat gram = heff * heff.adjoint();
      Eigen::FullPivLU<CMat> lu(gram);
      if (!lu.isInvertible()) return false;
      const CMat Wzf = heff.adjoint() * lu.inverse();
      for (int k = 0; k < cfg.K; ++k) {
        const double nrm = Wzf.col(k).norm();
        if (nrm < 1e-300) return false;
        beams.w[k] = std::sqrt(P0 / cfg.K) * Wzf.col(k) / nrm;
      }
      gamma = sinr(heff, beams, cfg.delta2);
      if (!floors_met(throughput(gamma, cfg.T, t0))) return false;
    }
    st.phases = ph;
    st.beams = std::move(beams);
    st.aux.rho = update_rho(gamma);
    st.aux.eta = update_eta(heff, st.beams, st.aux.rho, cfg.delta2);
    st.surrogate = surrogate_at(cfg, effective_channels(ch, st.phases), st.beams, st.t, st.aux);
    return true;
  };

  HybridPhaseConfig ph;
  ph.theta_fix = st.phases.theta_fix;
  for (int retry = 0; retry < std::max(1, opts.init_retries); ++retry) {
    ph.theta_coh = Vec(cfg.N_coh);
    for (int n = 0; n < cfg.N_coh; ++n) ph.theta_coh[n] = 2.0 * M_PI * uniform01(rng);
    if (attempt(ph)) return st;
  }

  // Random phases can leave tight floors unreachable. As a last resort run a
  // feasibility search: coordinate-descend the coherent phases to minimize the
  // zero-forcing power needed to put every user exactly on its rate floor,
  // then spend the remaining budget as a uniform SINR margin.
  if (cfg.K <= cfg.M) {
    Vec tau(cfg.K);
    for (int k = 0; k < cfg.K; ++k)
      tau[k] = std::pow(2.0, cfg.R_min[k] / (cfg.T - t0)) - 1.0;

    // Per-user floor power under zero-forcing columns, or +inf when ZF fails.
    const auto floor_powers = [&](const HybridPhaseConfig& p, Vec& need, CMat& Wzf) {
      const CMat heff = effective_channels(ch, p);
      Eigen::FullPivLU<CMat> lu(heff * heff.adjoint());
      if (!lu.isInvertible()) return false;
      const CMat gi = lu.inverse();
      Wzf = heff.adjoint() * gi;
      for (int k = 0; k < cfg.K; ++k) {
        const double g = 1.0 / std::real(gi(k, k));
        if (!(g > 0)) return false;
        need[k] = tau[k] * cfg.delta2[k] / g;
      }
      return true;
    };
    const auto required = [&](const HybridPhaseConfig& p) {
      Vec need(cfg.K);
      CMat Wzf;
      if (!floor_powers(p, need, Wzf)) return 1e300;
      return need.sum();
    };

    ph.theta_coh = Vec::Zero(cfg.N_coh);
    double best = required(ph);
    for (int sweep = 0; sweep < 4; ++sweep) {
      for (int n = 0; n < cfg.N_coh; ++n) {
        double bth = ph.theta_coh[n];
        for (int a = 0; a < 24; ++a) {
          ph.theta_coh[n] = 2.0 * M_PI * a / 24;
          const double v = required(ph);
          if (v < best) {
            best = v;
            bth = ph.theta_coh[n];
          }
        }
        ph.theta_coh[n] = bth;
      }
    }
    Vec need(cfg.K);
    CMat Wzf;
    if (best < P0 && floor_powers(ph, need, Wzf)) {
      const double boost = P0 / best; // > 1; scales every SINR uniformly
      BeamformerSet beams;
      beams.w.assign(cfg.K, CVec::Zero(cfg.M));
      for (int k = 0; k < cfg.K; ++k) {
        const double nrm = Wzf.col(k).norm();
        if (nrm < 1e-300) break;
        beams.w[k] = std::sqrt(boost * need[k]) * Wzf.col(k) / nrm;
      }
      const CMat heff = effective_channels(ch, ph);
      const Vec gamma = sinr(heff, beams, cfg.delta2);
      if (floors_met(throughput(gamma, cfg.T, t0))) {
        st.phases = ph;
        st.beams = std::move(beams);
        st.aux.rho = update_rho(gamma);
        st.aux.eta = update_eta(heff, st.beams, st.aux.rho, cfg.delta2);
        st.surrogate = surrogate_at(cfg, heff, st.beams, st.t, st.aux);
        return st;
      }
    }
  }
  throw InitializationInfeasible("initialize: rate floors unmet after all retries");
}

AoState step(const AoState& state, const SystemConfig& cfg, const ChannelRealization& ch,
             const SolverOptions& opts) {
  ConicOptions copts;
  copts.tol = opts.conic_tol;

  AoState st = state;
  CMat heff = effective_channels(ch, st.phases);

  // rho, eta
  Vec gamma = sinr(heff, st.beams, cfg.delta2);
  st.aux.rho = update_rho(gamma);
  st.aux.eta = update_eta(heff, st.beams, st.aux.rho, cfg.delta2);

  // t
  try {
    st.t = solve_delivery_time(cfg, gamma, st.beams.sum_power());
  } catch (const SubproblemInfeasible& e) {
    throw SubproblemInfeasible(std::string("delivery-time block: ") + e.what(), e.lower, e.upper);
  }

  // beams; accept only if the extracted iterate does not lose ground
  double cur = surrogate_at(cfg, heff, st.beams, st.t, st.aux);
  try {
    const LiftedBeam lb = solve_beamforming(ch, st.phases, st.t, st.aux,
                                            LiftedBeam::from_beams(st.beams), cfg, copts);
    BeamformerSet cand{lb.w};
    const double val = surrogate_at(cfg, heff, cand, st.t, st.aux);
    if (val >= cur) {
      st.beams = std::move(cand);
      cur = val;
    }
  } catch (const SubproblemInfeasible& e) {
    throw SubproblemInfeasible(std::string("beamforming block: ") + e.what(), e.lower, e.upper);
  }

  // phases
  try {
    const LiftedPhase lp =
        solve_phase(ch, st.phases, LiftedBeam::from_beams(st.beams), st.t, st.aux,
                    LiftedPhase::from_phases(st.phases.theta_coh), cfg, copts);
    HybridPhaseConfig cand = st.phases;
    cand.theta_coh = extract_phases(lp);
    const CMat heff_cand = effective_channels(ch, cand);
    const double val = surrogate_at(cfg, heff_cand, st.beams, st.t, st.aux);
    if (val >= cur) {
      st.phases = std::move(cand);
      heff = heff_cand;
      cur = val;
    }
  } catch (const SubproblemInfeasible& e) {
    throw SubproblemInfeasible(std::string("phase block: ") + e.what(), e.lower, e.upper);
  } catch (const ExtractionDegenerate&) {
    // keep previous phases; the safeguard already covers this iterate
  }

  st.surrogate = cur;
  return st;
}

std::pair<Solution, SolveTrace> solve(const SystemConfig& cfg, const ChannelRealization& ch,
                                      const SolverOptions& opts) {
  using clock = std::chrono::steady_clock;
  const auto start = clock::now();
  auto elapsed_ms = [&] {
    return std::chrono::duration<double, std::milli>(clock::now() - start).count();
  };

  AoState st = initialize(cfg, ch, opts);
  SolveTrace trace;
  trace.rows.push_back(make_row(cfg, ch, st, 0, elapsed_ms()));

  for (int it = 1; it <= opts.max_outer_iters; ++it) {
    const double prev = st.surrogate;
    st = step(st, cfg, ch, opts);
    trace.rows.push_back(make_row(cfg, ch, st, it, elapsed_ms()));
    if (std::abs(st.surrogate - prev) / std::max(std::abs(st.surrogate), 1e-12) < opts.rel_tol) {
      trace.converged = true;
      trace.message = "converged";
      break;
    }
  }
  if (!trace.converged) trace.message = "max-iters";
  return {make_solution(cfg, ch, st), trace};
}

} // namespace risopt
