#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "risopt/channel.hpp"
#include "risopt/core_model.hpp"

using namespace risopt;

namespace {

SystemConfig small_cfg(int M, int K, int N_coh, int N_fix) {
  SystemConfig cfg;
  cfg.M = M;
  cfg.K = K;
  cfg.N_coh = N_coh;
  cfg.N_fix = N_fix;
  cfg.R_min = Vec::Zero(K);
  cfg.delta2 = Vec::Ones(K);
  return cfg;
}

ChannelRealization random_channel(const SystemConfig& cfg, std::uint64_t seed) {
  auto rng = make_rng(seed);
  ChannelRealization ch;
  auto crand = [&rng](int r, int c) {
    CMat m(r, c);
    for (int i = 0; i < r; ++i)
      for (int j = 0; j < c; ++j) m(i, j) = cplx(standard_normal(rng), standard_normal(rng));
    return m;
  };
  ch.H_coh = crand(cfg.N_coh, cfg.M);
  ch.H_fix = crand(cfg.N_fix, cfg.M);
  for (int k = 0; k < cfg.K; ++k) {
    ch.h_r_coh.push_back(crand(cfg.N_coh, 1));
    ch.h_r_fix.push_back(crand(cfg.N_fix, 1));
  }
  return ch;
}

HybridPhaseConfig random_phases(const SystemConfig& cfg, std::uint64_t seed) {
  auto rng = make_rng(seed);
  HybridPhaseConfig ph;
  ph.theta_coh = Vec(cfg.N_coh);
  ph.theta_fix = Vec(cfg.N_fix);
  for (int n = 0; n < cfg.N_coh; ++n) ph.theta_coh[n] = 2 * M_PI * uniform01(rng);
  for (int n = 0; n < cfg.N_fix; ++n) ph.theta_fix[n] = 2 * M_PI * uniform01(rng);
  return ph;
}

} // namespace

TEST_CASE("effective_channel: unit channels, identity phases") {
  SystemConfig cfg = small_cfg(1, 1, 2, 0);
  ChannelRealization ch;
  ch.H_coh = CMat::Ones(2, 1);
  ch.H_fix = CMat::Zero(0, 1);
  ch.h_r_coh = {CVec::Ones(2)};
  ch.h_r_fix = {CVec::Zero(0)};
  HybridPhaseConfig ph{Vec::Zero(2), Vec::Zero(0)};
  CRow h = effective_channel(ch, ph, 0);
  CHECK(h.size() == 1);
  CHECK(std::abs(h(0) - cplx(2, 0)) < 1e-15);
}

TEST_CASE("effective_channel: single fixed element sign flip") {
  ChannelRealization ch;
  ch.H_coh = CMat::Zero(0, 1);
  ch.H_fix = CMat::Ones(1, 1);
  ch.h_r_coh = {CVec::Zero(0)};
  ch.h_r_fix = {CVec::Ones(1)};
  HybridPhaseConfig ph{Vec::Zero(0), Vec::Constant(1, M_PI)};
  CRow h = effective_channel(ch, ph, 0);
  CHECK(std::abs(h(0) - cplx(-1, 0)) < 1e-12);
}

TEST_CASE("effective_channel: matches elementwise summation oracle") {
  SystemConfig cfg = small_cfg(5, 3, 4, 3);
  ChannelRealization ch = random_channel(cfg, 11);
  HybridPhaseConfig ph = random_phases(cfg, 12);
  for (int k = 0; k < cfg.K; ++k) {
    CRow h = effective_channel(ch, ph, k);
    CRow oracle = CRow::Zero(cfg.M);
    for (int n = 0; n < cfg.N_coh; ++n)
      oracle += std::conj(ch.h_r_coh[k][n]) * std::polar(1.0, ph.theta_coh[n]) * ch.H_coh.row(n);
    for (int n = 0; n < cfg.N_fix; ++n)
      oracle += std::conj(ch.h_r_fix[k][n]) * std::polar(1.0, ph.theta_fix[n]) * ch.H_fix.row(n);
    CHECK((h - oracle).norm() < 1e-12);
  }
}

TEST_CASE("effective_channel: linear in each channel block") {
  SystemConfig cfg = small_cfg(4, 2, 3, 2);
  ChannelRealization ch = random_channel(cfg, 21);
  HybridPhaseConfig ph = random_phases(cfg, 22);
  ChannelRealization ch2 = ch;
  ch2.H_coh *= 2.0;
  ChannelRealization chz = ch;
  chz.H_fix.setZero();
  ChannelRealization ch2z = ch2;
  ch2z.H_fix.setZero();
  CRow coh1 = effective_channel(chz, ph, 0);
  CRow coh2 = effective_channel(ch2z, ph, 0);
  CHECK((coh2 - 2.0 * coh1).norm() < 1e-12 * coh1.norm());
}

TEST_CASE("effective_channel: dimension mismatch throws") {
  SystemConfig cfg = small_cfg(3, 1, 2, 1);
  ChannelRealization ch = random_channel(cfg, 31);
  HybridPhaseConfig ph = random_phases(cfg, 32);
  ph.theta_coh = Vec::Zero(5);
  CHECK_THROWS_AS(effective_channel(ch, ph, 0), ConfigError);
}

TEST_CASE("sinr: no interference") {
  CMat heff(1, 1);
  heff(0, 0) = 2.0;
  BeamformerSet beams{{CVec::Ones(1)}};
  Vec gamma = sinr(heff, beams, Vec::Ones(1));
  CHECK(gamma[0] == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("sinr: symmetric users agree") {
  CMat heff(2, 3);
  heff.row(0) << cplx(1, 1), cplx(0, 2), cplx(-1, 0.5);
  heff.row(1) = heff.row(0);
  CVec w0(3), w1(3);
  w0 << 1.0, 0.5, cplx(0, 1);
  w1 = w0;
  BeamformerSet beams{{w0, w1}};
  Vec gamma = sinr(heff, beams, Vec::Constant(2, 0.3));
  CHECK(gamma[0] == doctest::Approx(gamma[1]).epsilon(1e-14));
}

TEST_CASE("sinr: matches direct-formula oracle, K=4 M=8") {
  SystemConfig cfg = small_cfg(8, 4, 6, 2);
  cfg.delta2 = Vec::Constant(4, 0.7);
  ChannelRealization ch = random_channel(cfg, 41);
  HybridPhaseConfig ph = random_phases(cfg, 42);
  CMat heff = effective_channels(ch, ph);
  auto rng = make_rng(43);
  BeamformerSet beams;
  for (int k = 0; k < 4; ++k) {
    CVec w(8);
    for (int m = 0; m < 8; ++m) w[m] = cplx(standard_normal(rng), standard_normal(rng));
    beams.w.push_back(w);
  }
  Vec gamma = sinr(heff, beams, cfg.delta2);
  for (int k = 0; k < 4; ++k) {
    double num = std::norm((heff.row(k) * beams.w[k])(0));
    double den = cfg.delta2[k];
    for (int i = 0; i < 4; ++i)
      if (i != k) den += std::norm((heff.row(k) * beams.w[i])(0));
    CHECK(gamma[k] == doctest::Approx(num / den).epsilon(1e-12));
  }
}

TEST_CASE("sinr: invariant to common phase rotation of one beam") {
  SystemConfig cfg = small_cfg(4, 2, 3, 1);
  ChannelRealization ch = random_channel(cfg, 51);
  HybridPhaseConfig ph = random_phases(cfg, 52);
  CMat heff = effective_channels(ch, ph);
  auto rng = make_rng(53);
  BeamformerSet beams;
  for (int k = 0; k < 2; ++k) {
    CVec w(4);
    for (int m = 0; m < 4; ++m) w[m] = cplx(standard_normal(rng), standard_normal(rng));
    beams.w.push_back(w);
  }
  Vec g1 = sinr(heff, beams, Vec::Ones(2));
  beams.w[1] *= std::polar(1.0, 1.3);
  Vec g2 = sinr(heff, beams, Vec::Ones(2));
  CHECK((g1 - g2).cwiseAbs().maxCoeff() < 1e-12 * g1.maxCoeff());
}

TEST_CASE("sinr: nonpositive noise throws") {
  CMat heff = CMat::Ones(1, 1);
  BeamformerSet beams{{CVec::Ones(1)}};
  CHECK_THROWS_AS(sinr(heff, beams, Vec::Zero(1)), ConfigError);
}

TEST_CASE("throughput: closed-form points and domain") {
  CHECK(throughput(Vec::Ones(1), 1.0, 0.0)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(throughput(Vec::Constant(1, 3.0), 1.0, 0.5)[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(throughput(Vec::Constant(1, 5.0), 1.0, 1.0)[0] == 0.0);
  CHECK_THROWS_AS(throughput(Vec::Ones(1), 1.0, -0.1), DomainError);
  CHECK_THROWS_AS(throughput(Vec::Ones(1), 1.0, 1.1), DomainError);
}

TEST_CASE("throughput: Table I point matches scalar oracle") {
  double gamma = 37.4, T = 1.0, t = 0.8;
  Vec R = throughput(Vec::Constant(1, gamma), T, t);
  CHECK(R[0] == doctest::Approx((T - t) * std::log2(1 + gamma)).epsilon(1e-12));
}

TEST_CASE("throughput: monotone in t and gamma") {
  CHECK(throughput(Vec::Ones(1), 1.0, 0.2)[0] > throughput(Vec::Ones(1), 1.0, 0.3)[0]);
  CHECK(throughput(Vec::Constant(1, 2.0), 1.0, 0.2)[0] > throughput(Vec::Ones(1), 1.0, 0.2)[0]);
}

TEST_CASE("energy_used: closed-form points") {
  BeamformerSet none{{CVec::Zero(2)}};
  CHECK(energy_used(1.0, 0.1, none, 1.0) == doctest::Approx(0.1).epsilon(1e-14));
  CVec w(2);
  w << std::sqrt(0.05), std::sqrt(0.05);
  BeamformerSet beams{{w}};
  CHECK(energy_used(0.0, 0.1, beams, 1.0) == doctest::Approx(0.1).epsilon(1e-12));
  CVec w2(1);
  w2 << std::sqrt(0.5);
  CHECK(energy_used(0.8, 0.1, BeamformerSet{{w2}}, 1.0) == doctest::Approx(0.18).epsilon(1e-12));
}

TEST_CASE("check_feasibility: C4 boundary and violation") {
  SystemConfig cfg = small_cfg(2, 1, 4, 0);
  cfg.R_F = 10;
  cfg.b = 1;
  ChannelRealization ch = random_channel(cfg, 61);
  HybridPhaseConfig ph = random_phases(cfg, 62);
  Solution sol;
  sol.phases = ph;
  sol.beams.w = {CVec::Zero(2)};
  sol.t = 0.4; // = b*N_coh/R_F
  CMat heff = effective_channels(ch, ph);
  sol.per_user_rate = throughput(sinr(heff, sol.beams, cfg.delta2), cfg.T, sol.t);
  sol.objective = sol.per_user_rate.sum();
  auto rep = check_feasibility(sol, cfg, ch);
  CHECK(rep.c4_slack == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rep.feasible);

  sol.t = 0.39;
  sol.per_user_rate = throughput(sinr(heff, sol.beams, cfg.delta2), cfg.T, sol.t);
  auto rep2 = check_feasibility(sol, cfg, ch);
  CHECK(rep2.c4_slack < 0);
  CHECK_FALSE(rep2.feasible);
}

TEST_CASE("config validation") {
  SystemConfig cfg = small_cfg(2, 1, 4, 0);
  cfg.R_F = 1; // t_min = 4 > T
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  SystemConfig ok = small_cfg(2, 1, 4, 0);
  ok.R_F = 10;
  CHECK_NOTHROW(ok.validate());
}
