#include "risopt/subproblems.hpp"

#include <Eigen/QR>
#include <cmath>
#include <limits>
#include <numbers>

#include "risopt/barrier.hpp"
#include "risopt/core_model.hpp"

namespace risopt {

namespace {

constexpr double kLn2 = std::numbers::ln2_v<double>;

struct VarAlloc {
  int n = 0;
  int scalar() { return n++; }
};

/// Hermitian matrix variable; entries with index -1 are fixed constants.
struct HermVar {
  int size = 0;
  Eigen::MatrixXi re, im;
  CMat fixed;

  void alloc(int sz, VarAlloc& va, bool fix_last_diag = false) {
    size = sz;
    re = Eigen::MatrixXi::Constant(sz, sz, -1);
    im = Eigen::MatrixXi::Constant(sz, sz, -1);
    fixed = CMat::Zero(sz, sz);
    for (int i = 0; i < sz; ++i) {
      if (!(fix_last_diag && i == sz - 1)) re(i, i) = va.scalar();
      for (int j = i + 1; j < sz; ++j) {
        re(i, j) = va.scalar();
        im(i, j) = va.scalar();
      }
    }
    if (fix_last_diag) fixed(sz - 1, sz - 1) = 1.0;
  }

  // a += coeff * grad_x Tr(A X); A Hermitian.
  void add_trace(Vec& a, const CMat& A, double coeff) const {
    for (int i = 0; i < size; ++i) {
      if (re(i, i) >= 0) a[re(i, i)] += coeff * std::real(A(i, i));
      for (int j = i + 1; j < size; ++j) {
        a[re(i, j)] += coeff * 2.0 * std::real(A(i, j));
        a[im(i, j)] += coeff * 2.0 * std::imag(A(i, j));
      }
    }
  }

  double trace_fixed(const CMat& A) const {
    double s = 0;
    for (int i = 0; i < size; ++i)
      if (re(i, i) < 0) s += std::real(A(i, i) * fixed(i, i));
    return s;
  }

  CMat value(const Vec& x) const {
    CMat X = fixed;
    for (int i = 0; i < size; ++i) {
      if (re(i, i) >= 0) X(i, i) = x[re(i, i)];
      for (int j = i + 1; j < size; ++j) {
        X(i, j) = cplx(x[re(i, j)], x[im(i, j)]);
        X(j, i) = std::conj(X(i, j));
      }
    }
    return X;
  }

  void set(Vec& x, const CMat& X) const {
    for (int i = 0; i < size; ++i) {
      if (re(i, i) >= 0) x[re(i, i)] = std::real(X(i, i));
      for (int j = i + 1; j < size; ++j) {
        x[re(i, j)] = std::real(X(i, j));
        x[im(i, j)] = std::imag(X(i, j));
      }
    }
  }

  void append_entries(std::vector<barrier::PsdEntry>& out, int off) const {
    for (int i = 0; i < size; ++i)
      for (int j = i; j < size; ++j)
        out.push_back({off + i, off + j, re(i, j), im(i, j), -1,
                       re(i, j) < 0 ? fixed(i, j) : cplx(0, 0)});
  }
};

struct CVecVar {
  int size = 0;
  Eigen::VectorXi re, im;

  void alloc(int sz, VarAlloc& va) {
    size = sz;
    re.resize(sz);
    im.resize(sz);
    for (int i = 0; i < sz; ++i) {
      re[i] = va.scalar();
      im[i] = va.scalar();
    }
  }

  // a += coeff * grad_x Re(c^H v)
  void add_inner(Vec& a, const CVec& c, double coeff) const {
    for (int i = 0; i < size; ++i) {
      a[re[i]] += coeff * std::real(c[i]);
      a[im[i]] += coeff * std::imag(c[i]);
    }
  }

  CVec value(const Vec& x) const {
    CVec v(size);
    for (int i = 0; i < size; ++i) v[i] = cplx(x[re[i]], x[im[i]]);
    return v;
  }

  void set(Vec& x, const CVec& v) const {
    for (int i = 0; i < size; ++i) {
      x[re[i]] = std::real(v[i]);
      x[im[i]] = std::imag(v[i]);
    }
  }
};

double pow2m1(double e) { return std::exp2(e) - 1.0; }

} // namespace

LiftedBeam LiftedBeam::from_beams(const BeamformerSet& beams) {
  LiftedBeam lb;
  lb.w = beams.w;
  lb.W.reserve(beams.w.size());
  for (const auto& wk : beams.w) lb.W.push_back(wk * wk.adjoint());
  return lb;
}

LiftedPhase LiftedPhase::from_phases(const Vec& theta_coh) {
  LiftedPhase lp;
  const int n = static_cast<int>(theta_coh.size());
  lp.o.resize(n + 1);
  for (int i = 0; i < n; ++i) lp.o[i] = std::polar(1.0, -theta_coh[i]);
  lp.o[n] = 1.0;
  lp.O = lp.o * lp.o.adjoint();
  return lp;
}

double solve_delivery_time(const SystemConfig& cfg, const Vec& gamma, double sum_beam_power) {
  const double P = sum_beam_power;
  double lower = std::max(0.0, cfg.min_delivery_time());
  double upper = cfg.T;

  if (cfg.p == P) {
    // C1 degenerates to T*P <= E_max; no bound on t.
    if (cfg.T * P > cfg.E_max)
      throw SubproblemInfeasible("delivery time: energy constraint unsatisfiable at p == sum power",
                                 lower, upper);
  } else {
    const double tb = (cfg.E_max - cfg.T * P) / (cfg.p - P);
    if (cfg.p > P) upper = std::min(upper, tb);
    else lower = std::max(lower, tb);
  }

  for (int k = 0; k < cfg.K; ++k) {
    if (cfg.R_min[k] <= 0) continue;
    if (gamma[k] <= 0)
      throw SubproblemInfeasible("delivery time: zero SINR with positive rate floor", lower, upper);
    upper = std::min(upper, cfg.T - cfg.R_min[k] / std::log2(1.0 + gamma[k]));
  }

  // Rank-one extraction can nick the rate floor by rounding noise, leaving a
  // hairline-empty interval at the incumbent t; treat that as feasible.
  if (lower > upper + 1e-7 * cfg.T)
    throw SubproblemInfeasible("delivery time: empty feasible interval", lower, upper);
  return lower;
}

double linearize_trace(const CVec& x_prev, const CVec& x) {
  if (x_prev.size() != x.size()) throw ConfigError("linearize_trace: shape mismatch");
  return -x_prev.squaredNorm() + 2.0 * std::real(x_prev.dot(x)); // dot conjugates x_prev
}

CMat build_H1(const ChannelRealization& ch, const HybridPhaseConfig& ph, int k) {
  if (k < 0 || k >= ch.users()) throw ConfigError("build_H1: user index out of range");
  const Eigen::Index M = ch.H_coh.rows() > 0 ? ch.H_coh.cols() : ch.H_fix.cols();
  const Eigen::Index Nc = ch.H_coh.rows();
  CMat H1 = CMat::Zero(Nc + 1, M);
  if (Nc > 0) H1.topRows(Nc) = ch.h_r_coh[k].conjugate().asDiagonal() * ch.H_coh;
  if (ch.H_fix.rows() > 0) {
    CVec phi = ph.fix_unit();
    H1.row(Nc) = (ch.h_r_fix[k].conjugate().cwiseProduct(phi)).transpose() * ch.H_fix;
  }
  return H1;
}

double lifted_beam_objective(const CMat& heff, const LiftedBeam& lb, double t,
                             const FpAuxiliaries& aux, const SystemConfig& cfg) {
  double s = 0;
  for (int k = 0; k < cfg.K; ++k) {
    const CVec hk = heff.row(k).adjoint(); // h_k column
    double tot = cfg.delta2[k], sig = 0;
    for (int i = 0; i < cfg.K; ++i) {
      const double tr = std::real(hk.dot(lb.W[i] * hk)); // Tr(h h^H W) = h^H W h
      if (i == k) sig = std::max(tr, 0.0);
      tot += tr;
    }
    const double fk = 2.0 * aux.eta[k] * std::sqrt((1.0 + aux.rho[k]) * sig) -
                      aux.eta[k] * aux.eta[k] * tot;
    s += std::log1p(aux.rho[k]) - aux.rho[k] + fk;
  }
  return (cfg.T - t) * s / kLn2;
}

double lifted_phase_objective(const std::vector<CMat>& H1, const LiftedPhase& lp,
                              const LiftedBeam& beams, double t, const FpAuxiliaries& aux,
                              const SystemConfig& cfg) {
  double s = 0;
  for (int k = 0; k < cfg.K; ++k) {
    double tot = cfg.delta2[k], sig = 0;
    for (int i = 0; i < cfg.K; ++i) {
      const CMat A = H1[k] * beams.W[i] * H1[k].adjoint();
      const double tr = std::real((lp.O * A).trace());
      if (i == k) sig = std::max(tr, 0.0);
      tot += tr;
    }
    const double fk = 2.0 * aux.eta[k] * std::sqrt((1.0 + aux.rho[k]) * sig) -
                      aux.eta[k] * aux.eta[k] * tot;
    s += std::log1p(aux.rho[k]) - aux.rho[k] + fk;
  }
  return (cfg.T - t) * s / kLn2;
}

LiftedBeam solve_beamforming(const ChannelRealization& ch, const HybridPhaseConfig& ph,
                             double t, const FpAuxiliaries& aux, const LiftedBeam& prev,
                             const SystemConfig& cfg, const ConicOptions& copts) {
  const double Tt = cfg.T - t;
  if (Tt <= 0) throw SubproblemInfeasible("beamforming: no transmission time", t, cfg.T);
  const int K = cfg.K, M = cfg.M;
  const CMat heff = effective_channels(ch, ph);

  // Noise-normalized channel columns; eta rescaled to match.
  std::vector<CVec> hs(K);
  Vec eta_s(K);
  for (int k = 0; k < K; ++k) {
    hs[k] = heff.row(k).adjoint() / std::sqrt(cfg.delta2[k]);
    eta_s[k] = aux.eta[k] * std::sqrt(cfg.delta2[k]);
  }

  // Optimal beams live in span{h_k}; reduce to an orthonormal basis when
  // that shrinks the problem.
  const int r = std::min(M, K);
  CMat Q;
  if (r < M) {
    CMat Hst(M, K);
    for (int k = 0; k < K; ++k) Hst.col(k) = hs[k];
    Eigen::HouseholderQR<CMat> qr(Hst);
    Q = qr.householderQ() * CMat::Identity(M, r);
  } else {
    Q = CMat::Identity(M, M);
  }
  std::vector<CVec> q(K), wl(K);
  for (int k = 0; k < K; ++k) {
    q[k] = Q.adjoint() * hs[k];
    wl[k] = Q.adjoint() * prev.w[k];
  }

  const double P_bud = (cfg.E_max - cfg.p * t) / Tt;
  if (P_bud <= 0)
    throw SubproblemInfeasible("beamforming: energy budget exhausted by delivery", t, cfg.T);

  VarAlloc va;
  std::vector<HermVar> Wv(K);
  std::vector<CVecVar> wv(K);
  std::vector<int> sv(K);
  for (int k = 0; k < K; ++k) {
    Wv[k].alloc(r, va);
    wv[k].alloc(r, va);
    sv[k] = va.scalar();
  }

  barrier::Problem pb;
  pb.n = va.n;

  for (int k = 0; k < K; ++k) {
    barrier::PsdBlock blk;
    blk.size = r + 1;
    Wv[k].append_entries(blk.entries, 0);
    for (int i = 0; i < r; ++i)
      blk.entries.push_back({i, r, wv[k].re[i], wv[k].im[i], -1, cplx(0, 0)});
    blk.entries.push_back({r, r, -1, -1, -1, cplx(1, 0)});
    pb.psd.push_back(std::move(blk));
  }

  std::vector<CMat> Hq(K);
  for (int k = 0; k < K; ++k) {
    Hq[k] = q[k] * q[k].adjoint();
    barrier::Hyperbolic hy;
    hy.s = sv[k];
    hy.a = Vec::Zero(pb.n);
    Wv[k].add_trace(hy.a, Hq[k], 1.0);
    pb.hyp.push_back(std::move(hy));
  }

  { // energy
    barrier::LinearIneq li;
    li.a = Vec::Zero(pb.n);
    for (int k = 0; k < K; ++k) Wv[k].add_trace(li.a, CMat::Identity(r, r), 1.0);
    li.b = P_bud;
    pb.lin.push_back(std::move(li));
  }
  for (int k = 0; k < K; ++k) { // per-user rate floor
    if (cfg.R_min[k] <= 0) continue;
    const double tau = pow2m1(cfg.R_min[k] / Tt);
    barrier::LinearIneq li;
    li.a = Vec::Zero(pb.n);
    Wv[k].add_trace(li.a, Hq[k], -1.0);
    for (int i = 0; i < K; ++i)
      if (i != k) Wv[i].add_trace(li.a, Hq[k], tau);
    li.b = -tau; // noise normalized to 1
    pb.lin.push_back(std::move(li));
  }

  // Objective pieces that do not depend on the penalty weight.
  Vec c_base = Vec::Zero(pb.n);
  for (int k = 0; k < K; ++k) {
    c_base[sv[k]] -= 2.0 * eta_s[k] * std::sqrt(1.0 + aux.rho[k]);
    for (int i = 0; i < K; ++i)
      Wv[i].add_trace(c_base, Hq[k], eta_s[k] * eta_s[k]);
  }

  double coeff_scale = 1.0;
  for (int k = 0; k < K; ++k)
    coeff_scale = std::max(coeff_scale,
                           eta_s[k] * std::sqrt(1.0 + aux.rho[k]) * q[k].norm());

  // Warm start near the (projected) previous iterate. The identity blend and
  // the power shrink both cost rate-floor slack, so back off until the start
  // point is strictly interior.
  Vec x0 = Vec::Zero(pb.n);
  {
    double tr0 = 0;
    for (int k = 0; k < K; ++k) tr0 += wl[k].squaredNorm();
    for (double f = 0.1; f >= 1e-13; f *= 0.1) {
      const double cap = (1.0 - f) * P_bud;
      const double shrink = tr0 > cap ? cap / std::max(tr0, 1e-300) : 1.0;
      const double eps = f * std::max(P_bud, 1e-12) / (10.0 * K * r);
      for (int k = 0; k < K; ++k) {
        const CVec w0 = std::sqrt(shrink) * wl[k];
        const CMat W0 = w0 * w0.adjoint() + eps * CMat::Identity(r, r);
        Wv[k].set(x0, W0);
        wv[k].set(x0, w0);
        x0[sv[k]] = 0.9 * std::sqrt(std::max(std::real(q[k].dot(W0 * q[k])), 0.0));
      }
      if (barrier::strictly_feasible(pb, x0, 1e-13)) break;
    }
  }

  barrier::Options bo;
  bo.tol_gap = copts.tol;

  // Principal rank-one component of W, with the phase canonicalized so that
  // q^H w is real nonnegative; returns the relative rank residual.
  const auto principal = [](const CMat& W, const CVec& qk, CVec& w) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(W);
    const int top = static_cast<int>(W.rows()) - 1;
    const double l1 = std::max(eig.eigenvalues()[top], 0.0);
    w = eig.eigenvectors().col(top) * std::sqrt(l1);
    const cplx inner = qk.dot(w);
    if (std::abs(inner) > 0) w *= std::conj(inner) / std::abs(inner);
    const double tr = std::max(std::real(W.trace()), 1e-300);
    return (tr - l1) / tr;
  };

  // Stage 1 is the plain relaxation, which is typically already rank-one for
  // this constraint structure; anchored penalty rounds only run on a gap.
  barrier::Result best;
  double best_obj = -std::numeric_limits<double>::infinity();
  std::vector<CVec> best_w = wl;
  double lambda = 0.0, prev_resid = std::numeric_limits<double>::infinity();
  int escalations = 0;
  for (int round = 0; round < 12; ++round) {
    barrier::Problem pbr = pb;
    pbr.c = c_base;
    if (lambda > 0) {
      for (int k = 0; k < K; ++k) {
        Wv[k].add_trace(pbr.c, CMat::Identity(r, r), lambda);
        wv[k].add_inner(pbr.c, wl[k], -2.0 * lambda);
      }
    }
    barrier::Result res = barrier::solve(pbr, x0, bo);
    if (!res.ok) {
      if (res.message == "infeasible")
        throw SubproblemInfeasible("beamforming: conic subproblem infeasible", t, cfg.T);
      throw std::runtime_error("beamforming: interior-point failure: " + res.message);
    }
    double resid = 0;
    for (int k = 0; k < K; ++k)
      resid = std::max(resid, principal(Wv[k].value(res.x), q[k], wl[k]));
    const double obj = -c_base.dot(res.x);
    if (obj > best_obj || best.x.size() == 0) {
      best = res;
      best_obj = obj;
      best_w = wl;
    }
    if (resid <= copts.rank_tol) break;
    if (lambda == 0.0) {
      lambda = copts.rank_penalty * coeff_scale;
    } else if (resid > 0.7 * prev_resid) {
      if (++escalations >= copts.penalty_rounds) break;
      lambda *= 10.0;
    }
    prev_resid = resid;
    x0 = res.x;
    for (int k = 0; k < K; ++k) wv[k].set(x0, 0.9 * wl[k]);
  }

  LiftedBeam out;
  out.W.resize(K);
  out.w.resize(K);
  for (int k = 0; k < K; ++k) {
    CMat W = Q * Wv[k].value(best.x) * Q.adjoint();
    out.W[k] = 0.5 * (W + W.adjoint()); // scrub rounding asymmetry
    out.w[k] = Q * best_w[k];
  }

  const double before = lifted_beam_objective(heff, prev, t, aux, cfg);
  const double after = lifted_beam_objective(heff, out, t, aux, cfg);
  if (after < before - 1e-6 * std::max(1.0, std::abs(before)))
    throw InternalConsistencyError("beamforming: lifted objective decreased");
  return out;
}

LiftedPhase solve_phase(const ChannelRealization& ch, const HybridPhaseConfig& ph,
                        const LiftedBeam& beams, double t, const FpAuxiliaries& aux,
                        const LiftedPhase& prev, const SystemConfig& cfg,
                        const ConicOptions& copts) {
  const double Tt = cfg.T - t;
  if (Tt <= 0) throw SubproblemInfeasible("phase: no transmission time", t, cfg.T);
  const int K = cfg.K, Nc = cfg.N_coh;
  if (Nc == 0) {
    LiftedPhase lp;
    lp.o = CVec::Ones(1);
    lp.O = CMat::Ones(1, 1);
    return lp;
  }
  const int d = Nc + 1;

  std::vector<CMat> H1(K), H1s(K);
  for (int k = 0; k < K; ++k) {
    H1[k] = build_H1(ch, ph, k);
    H1s[k] = H1[k] / std::sqrt(cfg.delta2[k]);
  }
  Vec eta_s(K);
  for (int k = 0; k < K; ++k) eta_s[k] = aux.eta[k] * std::sqrt(cfg.delta2[k]);

  // A[k][i] = H1s_k W_i H1s_k^H (noise-normalized trace forms).
  std::vector<std::vector<CMat>> A(K, std::vector<CMat>(K));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) {
      CMat Aki = H1s[k] * beams.W[i] * H1s[k].adjoint();
      A[k][i] = 0.5 * (Aki + Aki.adjoint());
    }

  VarAlloc va;
  HermVar Ov;
  CVecVar ov;
  Ov.alloc(d, va, /*fix_last_diag=*/true);
  ov.alloc(d, va);
  std::vector<int> sv(K);
  for (int k = 0; k < K; ++k) sv[k] = va.scalar();

  barrier::Problem pb;
  pb.n = va.n;

  { // Schur block [[O, o],[o^H, 1]]
    barrier::PsdBlock blk;
    blk.size = d + 1;
    Ov.append_entries(blk.entries, 0);
    for (int i = 0; i < d; ++i)
      blk.entries.push_back({i, d, ov.re[i], ov.im[i], -1, cplx(0, 0)});
    blk.entries.push_back({d, d, -1, -1, -1, cplx(1, 0)});
    pb.psd.push_back(std::move(blk));
  }

  for (int n = 0; n < Nc; ++n) { // diag(O) <= 1 (corner fixed at 1)
    barrier::LinearIneq li;
    li.a = Vec::Zero(pb.n);
    li.a[Ov.re(n, n)] = 1.0;
    li.b = 1.0;
    pb.lin.push_back(std::move(li));
  }

  for (int k = 0; k < K; ++k) {
    barrier::Hyperbolic hy;
    hy.s = sv[k];
    hy.a = Vec::Zero(pb.n);
    Ov.add_trace(hy.a, A[k][k], 1.0);
    hy.b = Ov.trace_fixed(A[k][k]);
    pb.hyp.push_back(std::move(hy));
  }

  for (int k = 0; k < K; ++k) { // rate floor
    if (cfg.R_min[k] <= 0) continue;
    const double tau = pow2m1(cfg.R_min[k] / Tt);
    barrier::LinearIneq li;
    li.a = Vec::Zero(pb.n);
    double b = 0;
    Ov.add_trace(li.a, A[k][k], -1.0);
    b += Ov.trace_fixed(A[k][k]);
    for (int i = 0; i < K; ++i)
      if (i != k) {
        Ov.add_trace(li.a, A[k][i], tau);
        b -= tau * Ov.trace_fixed(A[k][i]);
      }
    li.b = b - tau;
    pb.lin.push_back(std::move(li));
  }

  Vec c_base = Vec::Zero(pb.n);
  for (int k = 0; k < K; ++k) {
    c_base[sv[k]] -= 2.0 * eta_s[k] * std::sqrt(1.0 + aux.rho[k]);
    for (int i = 0; i < K; ++i)
      Ov.add_trace(c_base, A[k][i], eta_s[k] * eta_s[k]);
  }

  double coeff_scale = 1.0;
  for (int k = 0; k < K; ++k)
    coeff_scale = std::max(coeff_scale, eta_s[k] * std::sqrt((1.0 + aux.rho[k]) *
                                          std::max(A[k][k].trace().real(), 0.0) / d));
  // The identity blend costs rate-floor slack via the cross traces, so back
  // off epsilon until the start point is strictly interior.
  Vec x0 = Vec::Zero(pb.n);
  for (double eps = 1e-2; eps >= 1e-13; eps *= 0.1) {
    CVec o0 = (1.0 - 2.0 * eps) * prev.o;
    CMat O0 = o0 * o0.adjoint() + eps * CMat::Identity(d, d);
    Ov.set(x0, O0);
    ov.set(x0, o0);
    for (int k = 0; k < K; ++k) {
      const double u = std::max(std::real((O0 * A[k][k]).trace()), 0.0);
      x0[sv[k]] = 0.9 * std::sqrt(u);
    }
    if (barrier::strictly_feasible(pb, x0, 1e-13)) break;
  }

  barrier::Options bo;
  bo.tol_gap = copts.tol;

  // Principal rank-one component of O, phase-canonicalized so the reference
  // (last) entry is real nonnegative; returns the relative rank residual.
  const auto principal = [d](const CMat& O, CVec& o) {
    Eigen::SelfAdjointEigenSolver<CMat> eig(O);
    const double l1 = std::max(eig.eigenvalues()[d - 1], 0.0);
    o = eig.eigenvectors().col(d - 1) * std::sqrt(l1);
    const cplx pivot = o[d - 1];
    if (std::abs(pivot) > 0) o *= std::conj(pivot) / std::abs(pivot);
    const double tr = std::max(std::real(O.trace()), 1e-300);
    return (tr - l1) / tr;
  };

  // Unit-modulus projection: the genuine feasible point each round delivers.
  const auto project = [d](const CVec& o) {
    CVec u(d);
    for (int n = 0; n < d; ++n)
      u[n] = std::abs(o[n]) > 1e-12 ? o[n] / std::abs(o[n]) : cplx(1.0, 0.0);
    return u;
  };

  const auto floors_ok = [&](const CMat& O) {
    for (int k = 0; k < K; ++k) {
      if (cfg.R_min[k] <= 0) continue;
      const double tau = pow2m1(cfg.R_min[k] / Tt);
      const double sig = std::real((A[k][k] * O).trace());
      double intf = 0;
      for (int i = 0; i < K; ++i)
        if (i != k) intf += std::real((A[k][i] * O).trace());
      if (sig < tau * (intf + 1.0) * (1.0 - 1e-9)) return false;
    }
    return true;
  };

  // Stage 1 is the plain relaxation; anchored penalty rounds close any
  // remaining rank gap (same scheme as the beamforming block). Rounds are
  // scored by the true surrogate value of their unit-modulus projection.
  const double before = lifted_phase_objective(H1, prev, beams, t, aux, cfg);
  LiftedPhase out = prev;
  double best_obj = before;
  CVec o_anchor = prev.o;
  double mu_pen = 0.0, prev_resid = std::numeric_limits<double>::infinity();
  int escalations = 0;
  for (int round = 0; round < 12; ++round) {
    barrier::Problem pbr = pb;
    pbr.c = c_base;
    if (mu_pen > 0) {
      Ov.add_trace(pbr.c, CMat::Identity(d, d), mu_pen);
      ov.add_inner(pbr.c, o_anchor, -2.0 * mu_pen);
    }
    barrier::Result res = barrier::solve(pbr, x0, bo);
    if (!res.ok) {
      if (res.message == "infeasible")
        throw SubproblemInfeasible("phase: conic subproblem infeasible", t, cfg.T);
      throw std::runtime_error("phase: interior-point failure: " + res.message);
    }
    const double resid = principal(Ov.value(res.x), o_anchor);
    LiftedPhase cand;
    cand.o = project(o_anchor);
    cand.O = cand.o * cand.o.adjoint();
    const double cand_obj = lifted_phase_objective(H1, cand, beams, t, aux, cfg);
    if (cand_obj > best_obj && floors_ok(cand.O)) {
      best_obj = cand_obj;
      out = cand;
    }
    if (resid <= copts.rank_tol) break;
    if (mu_pen == 0.0) {
      mu_pen = copts.rank_penalty * coeff_scale;
    } else if (resid > 0.7 * prev_resid) {
      if (++escalations >= copts.penalty_rounds) break;
      mu_pen *= 10.0;
    }
    prev_resid = resid;
    x0 = res.x;
    ov.set(x0, 0.9 * o_anchor);
  }
  return out;
}

Vec extract_phases(const LiftedPhase& lp) {
  const int Nc = static_cast<int>(lp.o.size()) - 1;
  const cplx pivot = lp.o[Nc];
  if (std::abs(pivot) < 1e-9)
    throw ExtractionDegenerate("extract_phases: reference entry has near-zero magnitude");
  Vec theta(Nc);
  for (int n = 0; n < Nc; ++n) {
    const cplx v = lp.o[n] / pivot;
    // o carries conj(v); recover theta with the sign that preserves
    // o^H H1 w = h^H w when re-applied.
    double th = std::abs(v) < 1e-9 ? 0.0 : -std::arg(v);
    if (th < 0) th += 2.0 * M_PI;
    if (th >= 2.0 * M_PI) th -= 2.0 * M_PI;
    theta[n] = th;
  }
  return theta;
}

} // namespace risopt
