#pragma once

#include <cstdint>
#include <random>

#include "risopt/types.hpp"

namespace risopt {

/// 2-D deployment geometry (meters).
struct Geometry {
  Eigen::Vector2d bs_pos{0, 0};
  Eigen::Vector2d ris_pos{50, 10};
  Eigen::Vector2d user_circle_center{50, 0};
  double user_circle_radius = 5;

  void validate() const;
};

struct FadingParams {
  double alpha_br = 2.2;  // BS -> RIS path-loss exponent
  double alpha_ru = 2.2;  // RIS -> user
  double rician_K = 3;    // linear
  double PL0_dB = -27;    // reference path loss at 1 m

  void validate() const;
};

/// Deterministic RNG stream for (master seed, realization index).
std::mt19937_64 make_rng(std::uint64_t seed, std::uint64_t index = 0);

/// Portable uniform double in [0, 1) from the engine's raw output.
double uniform01(std::mt19937_64& rng);

/// Portable standard normal via Box-Muller (no stdlib distribution,
/// so streams are bit-identical across platforms).
double standard_normal(std::mt19937_64& rng);

/// Linear power gain 10^(PL0_dB/10) * d^(-alpha).
double path_loss(double d, double alpha, double PL0_dB);

/// Rician-faded matrix with all-ones LOS: sqrt(K/(1+K)) + sqrt(1/(1+K)) * CN(0,1).
/// Per-entry second moment is 1 for any K.
CMat rician_sample(int rows, int cols, double rician_K, std::mt19937_64& rng);

/// One realization per the simulation setup: users uniform in the circle,
/// each block scaled by sqrt(path_loss) of its link distance, rows split
/// into coherent/fixed sub-surfaces by cfg.
ChannelRealization generate(const Geometry& geom, const FadingParams& fading,
                            const SystemConfig& cfg, std::mt19937_64& rng);

} // namespace risopt
