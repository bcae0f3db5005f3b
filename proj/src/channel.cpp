#include "risopt/channel.hpp"

#include <cmath>

namespace risopt {

void Geometry::validate() const {
  if (user_circle_radius < 0) throw ConfigError("user circle radius must be >= 0");
  if ((bs_pos - ris_pos).norm() <= 0) throw ConfigError("BS and RIS positions must differ");
}

void FadingParams::validate() const {
  if (alpha_br <= 0 || alpha_ru <= 0) throw ConfigError("path-loss exponents must be positive");
  if (rician_K < 0) throw ConfigError("Rician factor must be >= 0");
}

std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index) decorrelates adjacent streams.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  auto mix = [](std::uint64_t v) {
    v = (v ^ (v >> 30)) * 0xbf58476d1ce4e5b9ULL;
    v = (v ^ (v >> 27)) * 0x94d049bb133111ebULL;
    return v ^ (v >> 31);
  };
  return std::mt19937_64(mix(mix(z)));
}

double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  // Box-Muller; one value per pair of uniforms keeps the stream layout simple.
  double u1 = uniform01(rng);
  while (u1 <= 0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double path_loss(double d, double alpha, double PL0_dB) {
  if (d <= 0) throw DomainError("path_loss: distance must be positive");
  return db_to_linear(PL0_dB) * std::pow(d, -alpha);
}

CMat rician_sample(int rows, int cols, double rician_K, std::mt19937_64& rng) {
  if (rician_K < 0) throw ConfigError("rician_sample: K must be >= 0");
  const double los = std::sqrt(rician_K / (1.0 + rician_K));
  const double nlos = std::sqrt(1.0 / (1.0 + rician_K));
  CMat m(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      const double re = standard_normal(rng);
      const double im = standard_normal(rng);
      m(r, c) = los + nlos * cplx(re, im) * M_SQRT1_2;
    }
  return m;
}

ChannelRealization generate(const Geometry& geom, const FadingParams& fading,
                            const SystemConfig& cfg, std::mt19937_64& rng) {
  geom.validate();
  fading.validate();
  const int N = cfg.N();

  // User positions first so the position stream does not depend on (N, M).
  std::vector<Eigen::Vector2d> users(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    const double r = geom.user_circle_radius * std::sqrt(uniform01(rng));
    const double phi = 2.0 * M_PI * uniform01(rng);
    users[k] = geom.user_circle_center + r * Eigen::Vector2d(std::cos(phi), std::sin(phi));
  }

  const double d_br = (geom.bs_pos - geom.ris_pos).norm();
  const double g_br = path_loss(d_br, fading.alpha_br, fading.PL0_dB);
  CMat H = std::sqrt(g_br) * rician_sample(N, cfg.M, fading.rician_K, rng);

  ChannelRealization ch;
  ch.H_coh = H.topRows(cfg.N_coh);
  ch.H_fix = H.bottomRows(cfg.N_fix);
  ch.h_r_coh.resize(cfg.K);
  ch.h_r_fix.resize(cfg.K);
  for (int k = 0; k < cfg.K; ++k) {
    const double d_ru = (geom.ris_pos - users[k]).norm();
    const double g_ru = path_loss(d_ru, fading.alpha_ru, fading.PL0_dB);
    CVec h = std::sqrt(g_ru) * rician_sample(N, 1, fading.rician_K, rng).col(0);
    ch.h_r_coh[k] = h.head(cfg.N_coh);
    ch.h_r_fix[k] = h.tail(cfg.N_fix);
  }
  return ch;
}

} // namespace risopt
