#include "risopt/fp.hpp"

#include <cmath>
#include <numbers>

namespace risopt {

Vec update_rho(const Vec& gamma) {
  for (Eigen::Index k = 0; k < gamma.size(); ++k)
    if (gamma[k] < 0) throw DomainError("update_rho: gamma must be nonnegative");
  return gamma;
}

namespace {

// a_k = |h_k^H w_k|, D_k = sum_i |h_k^H w_i|^2 + delta2_k
void signal_terms(const CMat& heff, const BeamformerSet& beams, const Vec& delta2,
                  Vec& a, Vec& D) {
  const int K = static_cast<int>(heff.rows());
  a.resize(K);
  D.resize(K);
  for (int k = 0; k < K; ++k) {
    double tot = delta2[k];
    for (int i = 0; i < K; ++i) {
      const double pw = std::norm((heff.row(k) * beams.w[i])(0));
      if (i == k) a[k] = std::sqrt(pw);
      tot += pw;
    }
    D[k] = tot;
  }
}

} // namespace

Vec update_eta(const CMat& heff, const BeamformerSet& beams, const Vec& rho, const Vec& delta2) {
  Vec a, D;
  signal_terms(heff, beams, delta2, a, D);
  Vec eta(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k)
    eta[k] = std::sqrt((1.0 + rho[k]) * a[k] * a[k]) / D[k];
  return eta;
}

Vec surrogate_f(const CMat& heff, const BeamformerSet& beams, const Vec& rho, const Vec& eta,
                const Vec& delta2) {
  Vec a, D;
  signal_terms(heff, beams, delta2, a, D);
  Vec f(a.size());
  for (Eigen::Index k = 0; k < a.size(); ++k)
    f[k] = 2.0 * eta[k] * std::sqrt((1.0 + rho[k]) * a[k] * a[k]) - eta[k] * eta[k] * D[k];
  return f;
}

double surrogate_objective(const Vec& rho, const Vec& f, double T, double t) {
  if (t < 0 || t > T) throw DomainError("surrogate_objective: t outside [0, T]");
  double s = 0;
  for (Eigen::Index k = 0; k < rho.size(); ++k)
    s += std::log1p(rho[k]) - rho[k] + f[k];
  return (T - t) * s / std::numbers::ln2_v<double>;
}

} // namespace risopt
