#include "risopt/core_model.hpp"

#include <cmath>

namespace risopt {

void SystemConfig::validate() const {
  if (M < 1) throw ConfigError("M must be >= 1");
  if (K < 1) throw ConfigError("K must be >= 1");
  if (N_coh < 0 || N_fix < 0) throw ConfigError("element counts must be >= 0");
  if (b < 1) throw ConfigError("b must be >= 1");
  if (R_F <= 0) throw ConfigError("R_F must be positive");
  if (T <= 0) throw ConfigError("T must be positive");
  if (p <= 0) throw ConfigError("p must be positive");
  if (E_max <= 0) throw ConfigError("E_max must be positive");
  if (R_min.size() != K) throw ConfigError("R_min must have K entries");
  if (delta2.size() != K) throw ConfigError("delta2 must have K entries");
  for (int k = 0; k < K; ++k) {
    if (R_min[k] < 0) throw ConfigError("R_min must be nonnegative");
    if (delta2[k] <= 0) throw ConfigError("delta2 must be positive");
  }
  if (min_delivery_time() >= T)
    throw ConfigError("b*N_coh/R_F >= T: no transmission time can remain");
}

void ChannelRealization::validate(const SystemConfig& cfg) const {
  auto finite = [](const CMat& m) { return m.allFinite(); };
  if (H_coh.rows() != cfg.N_coh || (cfg.N_coh > 0 && H_coh.cols() != cfg.M))
    throw ConfigError("H_coh dimension mismatch");
  if (H_fix.rows() != cfg.N_fix || (cfg.N_fix > 0 && H_fix.cols() != cfg.M))
    throw ConfigError("H_fix dimension mismatch");
  if (users() != cfg.K || static_cast<int>(h_r_fix.size()) != cfg.K)
    throw ConfigError("per-user channel count mismatch");
  for (int k = 0; k < cfg.K; ++k) {
    if (h_r_coh[k].size() != cfg.N_coh) throw ConfigError("h_r_coh dimension mismatch");
    if (h_r_fix[k].size() != cfg.N_fix) throw ConfigError("h_r_fix dimension mismatch");
    if (!h_r_coh[k].allFinite() || !h_r_fix[k].allFinite())
      throw ConfigError("non-finite channel entry");
  }
  if (!finite(H_coh) || !finite(H_fix)) throw ConfigError("non-finite channel entry");
}

static CVec unit_phases(const Vec& theta) {
  CVec v(theta.size());
  for (Eigen::Index n = 0; n < theta.size(); ++n)
    v[n] = std::polar(1.0, theta[n]);
  return v;
}

CVec HybridPhaseConfig::coh_unit() const { return unit_phases(theta_coh); }
CVec HybridPhaseConfig::fix_unit() const { return unit_phases(theta_fix); }

CRow effective_channel(const ChannelRealization& ch, const HybridPhaseConfig& ph, int k) {
  if (k < 0 || k >= ch.users()) throw ConfigError("user index out of range");
  if (ph.theta_coh.size() != ch.H_coh.rows() || ph.theta_fix.size() != ch.H_fix.rows())
    throw ConfigError("phase/channel dimension mismatch");
  const Eigen::Index M = ch.H_coh.rows() > 0 ? ch.H_coh.cols() : ch.H_fix.cols();
  CRow h = CRow::Zero(M);
  if (ch.H_coh.rows() > 0) {
    CVec phi = ph.coh_unit();
    h += (ch.h_r_coh[k].conjugate().cwiseProduct(phi)).transpose() * ch.H_coh;
  }
  if (ch.H_fix.rows() > 0) {
    CVec phi = ph.fix_unit();
    h += (ch.h_r_fix[k].conjugate().cwiseProduct(phi)).transpose() * ch.H_fix;
  }
  return h;
}

CMat effective_channels(const ChannelRealization& ch, const HybridPhaseConfig& ph) {
  const int K = ch.users();
  const Eigen::Index M = ch.H_coh.rows() > 0 ? ch.H_coh.cols() : ch.H_fix.cols();
  CMat heff(K, M);
  for (int k = 0; k < K; ++k) heff.row(k) = effective_channel(ch, ph, k);
  return heff;
}

Vec sinr(const CMat& heff, const BeamformerSet& beams, const Vec& delta2) {
  const int K = static_cast<int>(heff.rows());
  if (static_cast<int>(beams.w.size()) != K || delta2.size() != K)
    throw ConfigError("sinr: size mismatch");
  Vec gamma(K);
  for (int k = 0; k < K; ++k) {
    if (delta2[k] <= 0) throw ConfigError("sinr: noise power must be positive");
    double sig = 0, intf = 0;
    for (int i = 0; i < K; ++i) {
      double pw = std::norm((heff.row(k) * beams.w[i])(0));
      if (i == k) sig = pw; else intf += pw;
    }
    gamma[k] = sig / (intf + delta2[k]);
  }
  return gamma;
}

Vec throughput(const Vec& gamma, double T, double t) {
  if (t < 0 || t > T) throw DomainError("throughput: t outside [0, T]");
  return (T - t) * (gamma.array() + 1.0).log2().matrix();
}

double energy_used(double t, double p, const BeamformerSet& beams, double T) {
  if (t < 0 || t > T) throw DomainError("energy_used: t outside [0, T]");
  return p * t + (T - t) * beams.sum_power();
}

FeasibilityReport check_feasibility(const Solution& sol, const SystemConfig& cfg,
                                    const ChannelRealization& ch, double tol) {
  FeasibilityReport rep;
  rep.tol = tol;

  const CMat heff = effective_channels(ch, sol.phases);
  const Vec gamma = sinr(heff, sol.beams, cfg.delta2);
  const double t = std::clamp(sol.t, 0.0, cfg.T);
  const Vec rate = throughput(gamma, cfg.T, t);

  rep.c1_slack = cfg.E_max - energy_used(t, cfg.p, sol.beams, cfg.T);
  rep.c2_slack = rate - cfg.R_min;

  rep.c3_max_dev = 0;
  for (const CVec& u : {sol.phases.coh_unit(), sol.phases.fix_unit()})
    for (Eigen::Index n = 0; n < u.size(); ++n)
      rep.c3_max_dev = std::max(rep.c3_max_dev, std::abs(std::abs(u[n]) - 1.0));

  rep.c4_slack = sol.t * cfg.R_F - static_cast<double>(cfg.b) * cfg.N_coh;

  auto ok = [tol](double slack, double scale) { return slack >= -tol * std::max(1.0, std::abs(scale)); };
  rep.feasible = ok(rep.c1_slack, cfg.E_max) && ok(rep.c4_slack, cfg.b * cfg.N_coh) &&
                 rep.c3_max_dev <= tol && sol.t >= -tol && sol.t <= cfg.T + tol;
  for (int k = 0; k < cfg.K; ++k)
    rep.feasible = rep.feasible && ok(rep.c2_slack[k], cfg.R_min[k]);
  return rep;
}

} // namespace risopt
