#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numbers>

#include "risopt/channel.hpp"
#include "risopt/core_model.hpp"
#include "risopt/fp.hpp"
#include "risopt/subproblems.hpp"

using namespace risopt;

namespace {

SystemConfig tiny_cfg(int M, int K, int N_coh, int N_fix) {
  SystemConfig cfg;
  cfg.M = M;
  cfg.K = K;
  cfg.N_coh = N_coh;
  cfg.N_fix = N_fix;
  cfg.b = 1;
  cfg.R_F = 10;
  cfg.T = 1;
  cfg.p = 0.1;
  cfg.E_max = 1;
  cfg.R_min = Vec::Zero(K);
  cfg.delta2 = Vec::Ones(K);
  cfg.validate();
  return cfg;
}

CVec random_cvec(int n, std::mt19937_64& rng) {
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = cplx(standard_normal(rng), standard_normal(rng));
  return v;
}

CMat random_cmat(int r, int c, std::mt19937_64& rng) {
  CMat m(r, c);
  for (int i = 0; i < r; ++i)
    for (int j = 0; j < c; ++j) m(i, j) = cplx(standard_normal(rng), standard_normal(rng));
  return m;
}

ChannelRealization random_channel(const SystemConfig& cfg, std::mt19937_64& rng) {
  ChannelRealization ch;
  ch.H_coh = random_cmat(cfg.N_coh, cfg.M, rng);
  ch.H_fix = random_cmat(cfg.N_fix, cfg.M, rng);
  for (int k = 0; k < cfg.K; ++k) {
    ch.h_r_coh.push_back(random_cvec(cfg.N_coh, rng));
    ch.h_r_fix.push_back(random_cvec(cfg.N_fix, rng));
  }
  ch.validate(cfg);
  return ch;
}

HybridPhaseConfig random_phases(const SystemConfig& cfg, std::mt19937_64& rng) {
  HybridPhaseConfig ph;
  ph.theta_coh = Vec(cfg.N_coh);
  ph.theta_fix = Vec(cfg.N_fix);
  for (int n = 0; n < cfg.N_coh; ++n) ph.theta_coh[n] = 2 * std::numbers::pi * uniform01(rng);
  for (int n = 0; n < cfg.N_fix; ++n) ph.theta_fix[n] = 2 * std::numbers::pi * uniform01(rng);
  return ph;
}

FpAuxiliaries aux_at(const CMat& heff, const BeamformerSet& beams, const Vec& delta2) {
  FpAuxiliaries aux;
  aux.rho = update_rho(sinr(heff, beams, delta2));
  aux.eta = update_eta(heff, beams, aux.rho, delta2);
  return aux;
}

double power_budget(const SystemConfig& cfg, double t) {
  return (cfg.E_max - cfg.p * t) / (cfg.T - t);
}

} // namespace

TEST_CASE("solve_delivery_time: C4 binding") {
  SystemConfig cfg = tiny_cfg(2, 1, 8, 0);
  Vec gamma = Vec::Constant(1, 1e6);
  CHECK(solve_delivery_time(cfg, gamma, 0.5) == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("solve_delivery_time: no coherent elements gives t = 0") {
  SystemConfig cfg = tiny_cfg(2, 1, 0, 4);
  Vec gamma = Vec::Constant(1, 10.0);
  CHECK(solve_delivery_time(cfg, gamma, 0.5) == doctest::Approx(0.0));
}

TEST_CASE("solve_delivery_time: energy lower bound binds when p < sum power") {
  SystemConfig cfg = tiny_cfg(2, 1, 2, 0);
  cfg.E_max = 0.5;
  // t (p - P) <= E - T P with p = 0.1, P = 1: t >= 0.5/0.9
  CHECK(solve_delivery_time(cfg, Vec::Constant(1, 1e9), 1.0) ==
        doctest::Approx(0.5 / 0.9).epsilon(1e-12));
}

TEST_CASE("solve_delivery_time: energy upper bound binds when p > sum power") {
  SystemConfig cfg = tiny_cfg(2, 1, 2, 0);
  cfg.p = 2.0;
  cfg.E_max = 1.0;
  // t <= (E - T P)/(p - P) = (1 - 0.5)/1.5 = 1/3 >= t_min = 0.2, so t = 0.2
  CHECK(solve_delivery_time(cfg, Vec::Constant(1, 1e9), 0.5) == doctest::Approx(0.2));
  // shrink the budget until the interval empties
  cfg.E_max = 0.7;
  CHECK_THROWS_AS(solve_delivery_time(cfg, Vec::Constant(1, 1e9), 0.5), SubproblemInfeasible);
}

TEST_CASE("solve_delivery_time: rate ceiling vs delivery floor infeasibility") {
  SystemConfig cfg = tiny_cfg(2, 1, 2, 0);
  cfg.R_min = Vec::Ones(1); // needs (1-t) log2(2) >= 1 -> t <= 0 < 0.2
  try {
    solve_delivery_time(cfg, Vec::Ones(1), 0.5);
    FAIL("expected SubproblemInfeasible");
  } catch (const SubproblemInfeasible& ex) {
    CHECK(ex.lower == doctest::Approx(0.2));
    CHECK(ex.upper == doctest::Approx(0.0));
  }
}

TEST_CASE("linearize_trace touches at the expansion point and minorizes elsewhere") {
  auto rng = make_rng(7);
  CVec x = random_cvec(5, rng);
  CHECK(linearize_trace(x, x) == doctest::Approx(x.squaredNorm()).epsilon(1e-12));
  CHECK(linearize_trace(CVec::Zero(5), x) == doctest::Approx(0.0));
  for (int trial = 0; trial < 10000; ++trial) {
    CVec a = random_cvec(3, rng), b = random_cvec(3, rng);
    CHECK(linearize_trace(a, b) <= b.squaredNorm() + 1e-12);
  }
}

TEST_CASE("build_H1 reproduces the effective channel") {
  SystemConfig cfg = tiny_cfg(3, 2, 4, 2);
  auto rng = make_rng(11);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  CVec o(cfg.N_coh + 1);
  o.head(cfg.N_coh) = ph.coh_unit().conjugate();
  o[cfg.N_coh] = 1.0;
  for (int k = 0; k < cfg.K; ++k) {
    CMat H1 = build_H1(ch, ph, k);
    REQUIRE(H1.rows() == cfg.N_coh + 1);
    REQUIRE(H1.cols() == cfg.M);
    CRow recon = o.adjoint() * H1;
    CHECK((recon - heff.row(k)).norm() < 1e-12 * std::max(1.0, heff.row(k).norm()));
  }
}

TEST_CASE("build_H1 with no fixed elements has a zero last row") {
  SystemConfig cfg = tiny_cfg(2, 1, 3, 0);
  auto rng = make_rng(13);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat H1 = build_H1(ch, ph, 0);
  CHECK(H1.row(cfg.N_coh).norm() == doctest::Approx(0.0));
}

TEST_CASE("build_H1 single coherent element matches the hand-stacked rows") {
  SystemConfig cfg = tiny_cfg(2, 1, 1, 1);
  auto rng = make_rng(17);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat H1 = build_H1(ch, ph, 0);
  CRow top = std::conj(ch.h_r_coh[0][0]) * ch.H_coh.row(0);
  CRow bot = (ch.h_r_fix[0].conjugate().array() * ph.fix_unit().array()).matrix().transpose() *
             ch.H_fix;
  CHECK((H1.row(0) - top).norm() < 1e-14);
  CHECK((H1.row(1) - bot).norm() < 1e-14);
}

TEST_CASE("lifted objectives agree with the vector surrogate at rank-one points") {
  SystemConfig cfg = tiny_cfg(3, 2, 2, 2);
  auto rng = make_rng(19);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  BeamformerSet beams;
  for (int k = 0; k < cfg.K; ++k) beams.w.push_back(0.5 * random_cvec(cfg.M, rng));
  auto aux = aux_at(heff, beams, cfg.delta2);
  double t = 0.2;
  Vec f = surrogate_f(heff, beams, aux.rho, aux.eta, cfg.delta2);
  double vec_obj = surrogate_objective(aux.rho, f, cfg.T, t);

  auto lb = LiftedBeam::from_beams(beams);
  CHECK(lifted_beam_objective(heff, lb, t, aux, cfg) == doctest::Approx(vec_obj).epsilon(1e-10));

  auto lp = LiftedPhase::from_phases(ph.theta_coh);
  std::vector<CMat> H1;
  for (int k = 0; k < cfg.K; ++k) H1.push_back(build_H1(ch, ph, k));
  CHECK(lifted_phase_objective(H1, lp, lb, t, aux, cfg) ==
        doctest::Approx(vec_obj).epsilon(1e-10));
}

TEST_CASE("solve_beamforming: single-user single-antenna hits the energy boundary") {
  SystemConfig cfg = tiny_cfg(1, 1, 0, 2);
  auto rng = make_rng(23);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  double t = 0.0;
  double P_bud = power_budget(cfg, t);

  BeamformerSet beams;
  beams.w.push_back(CVec::Constant(1, cplx(0.05, 0.0)));
  auto aux = aux_at(heff, beams, cfg.delta2);
  auto prev = LiftedBeam::from_beams(beams);
  auto out = solve_beamforming(ch, ph, t, aux, prev, cfg);

  // f_k is increasing in |h w| up to sqrt(1+rho)/eta; with eta at a small
  // starting beam the unconstrained peak lies far beyond the budget.
  CHECK(std::sqrt(1 + aux.rho[0]) / aux.eta[0] >
        std::abs(heff(0, 0)) * std::sqrt(P_bud) * (1 + 1e-9));
  CHECK(out.W[0].real().trace() == doctest::Approx(P_bud).epsilon(1e-4));
  CHECK(out.w[0].squaredNorm() == doctest::Approx(P_bud).epsilon(1e-3));
  // optimal w is aligned with the channel: h w real positive
  cplx hw = (heff.row(0) * out.w[0])(0);
  CHECK(std::abs(std::arg(hw)) < 1e-4);
}

TEST_CASE("solve_beamforming dominates random feasible candidates") {
  SystemConfig cfg = tiny_cfg(2, 2, 0, 3);
  auto rng = make_rng(29);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  double t = 0.0;
  double P_bud = power_budget(cfg, t);

  BeamformerSet beams;
  for (int k = 0; k < cfg.K; ++k) beams.w.push_back(0.2 * random_cvec(cfg.M, rng));
  auto aux = aux_at(heff, beams, cfg.delta2);
  auto prev = LiftedBeam::from_beams(beams);
  auto out = solve_beamforming(ch, ph, t, aux, prev, cfg);
  double sol_obj = lifted_beam_objective(heff, out, t, aux, cfg);

  double best = -1e300;
  for (int trial = 0; trial < 4000; ++trial) {
    BeamformerSet cand;
    for (int k = 0; k < cfg.K; ++k) cand.w.push_back(random_cvec(cfg.M, rng));
    double s = cand.sum_power();
    double scale = std::sqrt(uniform01(rng) * P_bud / s);
    for (auto& wk : cand.w) wk *= scale;
    best = std::max(best, lifted_beam_objective(heff, LiftedBeam::from_beams(cand), t, aux, cfg));
  }
  CHECK(sol_obj >= best - 1e-3 * std::abs(best));
  // returned lift is near rank one
  for (int k = 0; k < cfg.K; ++k) {
    double tr = out.W[k].real().trace();
    CHECK(tr - out.w[k].squaredNorm() <= 1e-4 * std::max(1.0, tr));
  }
}

TEST_CASE("solve_beamforming is a near fixed point at its own output") {
  SystemConfig cfg = tiny_cfg(2, 2, 0, 3);
  auto rng = make_rng(31);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  double t = 0.0;
  BeamformerSet beams;
  for (int k = 0; k < cfg.K; ++k) beams.w.push_back(0.2 * random_cvec(cfg.M, rng));
  auto aux = aux_at(heff, beams, cfg.delta2);
  auto first = solve_beamforming(ch, ph, t, aux, LiftedBeam::from_beams(beams), cfg);
  double obj1 = lifted_beam_objective(heff, first, t, aux, cfg);
  auto second = solve_beamforming(ch, ph, t, aux, first, cfg);
  double obj2 = lifted_beam_objective(heff, second, t, aux, cfg);
  CHECK(obj2 >= obj1 - 1e-6 * std::abs(obj1));
  CHECK(obj2 - obj1 <= 1e-4 * std::max(1.0, std::abs(obj1)));
}

TEST_CASE("solve_beamforming reports an unreachable rate floor") {
  SystemConfig cfg = tiny_cfg(1, 1, 0, 2);
  cfg.R_min = Vec::Constant(1, 50.0); // needs gamma ~ 2^50 at t = 0
  auto rng = make_rng(37);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  CMat heff = effective_channels(ch, ph);
  BeamformerSet beams;
  beams.w.push_back(CVec::Constant(1, cplx(0.3, 0.0)));
  auto aux = aux_at(heff, beams, cfg.delta2);
  CHECK_THROWS_AS(solve_beamforming(ch, ph, 0.0, aux, LiftedBeam::from_beams(beams), cfg),
                  SubproblemInfeasible);
}

TEST_CASE("solve_phase: single user aligns the coherent elements") {
  SystemConfig cfg = tiny_cfg(1, 1, 2, 0);
  auto rng = make_rng(41);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  double t = 0.2;
  BeamformerSet beams;
  beams.w.push_back(CVec::Constant(1, cplx(0.8, 0.0)));
  auto lbeam = LiftedBeam::from_beams(beams);

  // best achievable |h^H w|: align both per-element contributions
  double amax = 0;
  for (int n = 0; n < cfg.N_coh; ++n)
    amax += std::abs(std::conj(ch.h_r_coh[0][n]) * (ch.H_coh.row(n) * beams.w[0])(0));
  double gamma_max = amax * amax / cfg.delta2[0];

  HybridPhaseConfig cur = ph;
  for (int sweep = 0; sweep < 6; ++sweep) {
    CMat heff = effective_channels(ch, cur);
    auto aux = aux_at(heff, beams, cfg.delta2);
    auto out = solve_phase(ch, cur, lbeam, t, aux, LiftedPhase::from_phases(cur.theta_coh), cfg);
    cur.theta_coh = extract_phases(out);
  }
  CMat heff = effective_channels(ch, cur);
  double gamma = sinr(heff, beams, cfg.delta2)[0];
  CHECK(gamma >= gamma_max * (1 - 1e-4));
  CHECK(gamma <= gamma_max * (1 + 1e-9));
}

TEST_CASE("solve_phase output satisfies the lifted constraints") {
  SystemConfig cfg = tiny_cfg(2, 2, 3, 2);
  auto rng = make_rng(43);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  double t = 0.3;
  BeamformerSet beams;
  for (int k = 0; k < cfg.K; ++k) beams.w.push_back(0.4 * random_cvec(cfg.M, rng));
  auto lbeam = LiftedBeam::from_beams(beams);
  CMat heff = effective_channels(ch, ph);
  auto aux = aux_at(heff, beams, cfg.delta2);
  auto out = solve_phase(ch, ph, lbeam, t, aux, LiftedPhase::from_phases(ph.theta_coh), cfg);

  int d = cfg.N_coh + 1;
  REQUIRE(out.O.rows() == d);
  REQUIRE(out.o.size() == d);
  CHECK(std::abs(out.O(d - 1, d - 1) - cplx(1, 0)) < 1e-8);
  for (int n = 0; n < cfg.N_coh; ++n) CHECK(out.O(n, n).real() <= 1.0 + 1e-6);
  Eigen::SelfAdjointEigenSolver<CMat> eig(out.O);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-8);
  double tr = out.O.real().trace();
  CHECK(tr - out.o.squaredNorm() <= 1e-4 * std::max(1.0, tr));
}

TEST_CASE("solve_phase never degrades the lifted surrogate") {
  SystemConfig cfg = tiny_cfg(2, 2, 3, 1);
  auto rng = make_rng(47);
  auto ch = random_channel(cfg, rng);
  auto ph = random_phases(cfg, rng);
  double t = 0.3;
  BeamformerSet beams;
  for (int k = 0; k < cfg.K; ++k) beams.w.push_back(0.4 * random_cvec(cfg.M, rng));
  auto lbeam = LiftedBeam::from_beams(beams);
  CMat heff = effective_channels(ch, ph);
  auto aux = aux_at(heff, beams, cfg.delta2);
  std::vector<CMat> H1;
  for (int k = 0; k < cfg.K; ++k) H1.push_back(build_H1(ch, ph, k));
  auto prev = LiftedPhase::from_phases(ph.theta_coh);
  double before = lifted_phase_objective(H1, prev, lbeam, t, aux, cfg);
  auto out = solve_phase(ch, ph, lbeam, t, aux, prev, cfg);
  double after = lifted_phase_objective(H1, out, lbeam, t, aux, cfg);
  CHECK(after >= before - 1e-6 * std::max(1.0, std::abs(before)));
}

TEST_CASE("extract_phases convention and invariances") {
  using std::numbers::pi;
  LiftedPhase lp;
  lp.o = CVec(2);
  lp.o[0] = std::exp(cplx(0, -pi / 2));
  lp.o[1] = 1.0;
  lp.O = lp.o * lp.o.adjoint();
  Vec th = extract_phases(lp);
  REQUIRE(th.size() == 1);
  CHECK(th[0] == doctest::Approx(pi / 2).epsilon(1e-12));

  // invariant under a global phase of o
  LiftedPhase rot = lp;
  rot.o *= std::exp(cplx(0, 1.234));
  Vec th2 = extract_phases(rot);
  CHECK(th2[0] == doctest::Approx(th[0]).epsilon(1e-12));

  // angles normalized into [0, 2 pi)
  lp.o[0] = std::exp(cplx(0, 0.75));
  Vec th3 = extract_phases(lp);
  CHECK(th3[0] == doctest::Approx(2 * pi - 0.75).epsilon(1e-9));

  // degenerate pivot
  lp.o[1] = 0.0;
  CHECK_THROWS_AS(extract_phases(lp), ExtractionDegenerate);
}
