#pragma once

#include <Eigen/Dense>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace risopt {

using Vec = Eigen::VectorXd;
using CVec = Eigen::VectorXcd;
using CMat = Eigen::MatrixXcd;
using CRow = Eigen::RowVectorXcd;
using cplx = std::complex<double>;

/// Invalid or inconsistent configuration (dimension mismatches, bad parameters).
struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Argument outside the mathematical domain of an operation.
struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

/// Scalar parameters of the throughput-maximization problem.
///
/// Rates are bits/s on a 1 Hz normalized bandwidth, so bits/s/Hz x seconds
/// gives bits directly. All powers are watts; dBm is converted at ingestion.
struct SystemConfig {
  int M = 8;        // BS antennas
  int K = 4;        // users
  int N_coh = 8;    // elements with delivered, optimized phases
  int N_fix = 4;    // elements with frozen random phases
  int b = 1;        // quantization bits per coherent phase
  double R_F = 10;  // control-link delivery rate, bits/s
  double T = 1;     // frame duration, s
  double p = 0.1;   // delivery power, W
  double E_max = 1; // energy budget, J
  Vec R_min;        // per-user minimum throughput, bits (size K)
  Vec delta2;       // per-user noise power, W (size K)

  int N() const { return N_coh + N_fix; }
  /// Smallest t satisfying the delivery-bit constraint C4.
  double min_delivery_time() const {
    return N_coh > 0 ? static_cast<double>(b) * N_coh / R_F : 0.0;
  }
  void validate() const; // throws ConfigError
};

inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

/// One channel draw, partitioned into the coherent and fixed sub-surfaces.
struct ChannelRealization {
  CMat H_coh; // N_coh x M, BS -> coherent sub-surface
  CMat H_fix; // N_fix x M
  std::vector<CVec> h_r_coh; // per user, length N_coh, sub-surface -> user
  std::vector<CVec> h_r_fix; // per user, length N_fix

  int users() const { return static_cast<int>(h_r_coh.size()); }
  void validate(const SystemConfig& cfg) const; // throws ConfigError
};

/// Unit-modulus phase configuration; angles in [0, 2*pi).
struct HybridPhaseConfig {
  Vec theta_coh;
  Vec theta_fix;

  CVec coh_unit() const; // e^{j theta_coh}
  CVec fix_unit() const;
};

struct BeamformerSet {
  std::vector<CVec> w; // per user, length M

  double sum_power() const {
    double s = 0;
    for (const auto& wk : w) s += wk.squaredNorm();
    return s;
  }
};

struct Solution {
  HybridPhaseConfig phases;
  BeamformerSet beams;
  double t = 0; // delivery time, s
  Vec per_user_rate;
  double objective = 0; // sum throughput, bits
};

/// Signed slacks of C1-C4; nonnegative means satisfied.
struct FeasibilityReport {
  double c1_slack = 0;   // E_max - energy used
  Vec c2_slack;          // R_k - R_min_k
  double c3_max_dev = 0; // max | |e^{j theta}| - 1 |
  double c4_slack = 0;   // t*R_F - b*N_coh
  bool feasible = false;
  double tol = 1e-6;
};

} // namespace risopt
