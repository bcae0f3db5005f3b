#include "risopt/analysis.hpp"

#include <cmath>
#include <functional>
#include <numbers>

namespace risopt {

namespace {
constexpr double kLn2 = std::numbers::ln2_v<double>;
constexpr double kE = std::numbers::e_v<double>;
} // namespace

void SimpleScenario::validate() const {
  if (!(p_t > 0 && p > 0 && T > 0 && E_max > 0 && R_F > 0) || b < 1)
    throw ConfigError("SimpleScenario: parameters must be positive");
  if (!(p_t > p)) throw ConfigError("SimpleScenario: requires p_t > p");
  if (!(C > 0) || !(p_bar > 0)) throw ConfigError("SimpleScenario: C and p_bar must be positive");
  if (R_min < 0) throw ConfigError("SimpleScenario: R_min must be nonnegative");
}

double lambert_w0(double x) {
  const double xmin = -1.0 / kE;
  if (x < xmin - 1e-12) throw DomainError("lambert_w0: x below -1/e");
  if (x < xmin) x = xmin;
  if (x == 0) return 0;

  double w;
  if (x > kE) w = std::log(x) - std::log(std::log(x));
  else if (x > -0.3) w = x * (1.0 - x) / (1.0 + x * x); // crude, Halley fixes it
  else w = -1.0 + std::sqrt(2.0 * (kE * x + 1.0));

  for (int it = 0; it < 50; ++it) {
    const double ew = std::exp(w);
    const double f = w * ew - x;
    if (std::abs(f) <= 1e-13 * std::max(1.0, std::abs(x))) break;
    const double denom = ew * (w + 1.0) - (w + 2.0) * f / (2.0 * (w + 1.0));
    w -= f / denom;
    if (w < -1.0) w = -1.0;
  }
  return w;
}

double t_star(const SimpleScenario& s, double N_coh) {
  s.validate();
  if (N_coh < 0) throw DomainError("t_star: negative element count");
  double t = s.b * N_coh / s.R_F;
  const double te = (s.E_max - s.T * s.p_t) / (s.p - s.p_t);
  if (te > 0) t = std::max(t, te);
  if (t >= s.T) throw ScenarioInfeasible("t_star: delivery time reaches the frame length");
  return t;
}

double snr_lower_bound(const SimpleScenario& s, double N_coh) {
  if (N_coh < 0) throw DomainError("snr_lower_bound: negative element count");
  return s.p_bar * s.C * N_coh * N_coh;
}

double n_star_case1(const SimpleScenario& s) {
  s.validate();
  if (s.p_bar * s.C < 1e4)
    throw DomainError("n_star_case1: outside the large-SNR regime (p_bar*C < 1e4)");
  const double z = kE * s.T * s.R_F * std::sqrt(s.p_bar * s.C) / s.b;
  return s.T * s.R_F / (s.b * lambert_w0(z));
}

double n_star_case2(const SimpleScenario& s) {
  s.validate();
  if (!(s.E_max < s.T * s.p_t))
    throw CaseInapplicable("n_star_case2: energy bound inactive (E_max >= T p_t)");
  if (!(s.T * s.p < s.E_max))
    throw CaseInapplicable("n_star_case2: delivery alone exceeds the budget (T p >= E_max)");
  return (s.E_max - s.T * s.p_t) * s.R_F / ((s.p - s.p_t) * s.b);
}

FeasibilityCase1 feasible_case1(const SimpleScenario& s, double n_star) {
  FeasibilityCase1 r;
  r.energy_residual = n_star - (s.E_max - s.T * s.p_t) * s.R_F / ((s.p - s.p_t) * s.b);
  const double larg = std::log(std::sqrt(s.p_bar * s.C) * n_star);
  if (larg <= 0) {
    r.undefined = true;
    return r;
  }
  r.rate_residual =
      2.0 * (s.T * s.R_F - s.b * n_star) / (s.R_F * kLn2) - s.R_min / larg;
  r.feasible = r.energy_residual > 0 && r.rate_residual >= 0;
  return r;
}

FeasibilityCase2 feasible_case2(const SimpleScenario& s, double n_star) {
  if (s.T * s.p == s.E_max)
    throw DomainError("feasible_case2: T p equals E_max");
  FeasibilityCase2 r;
  const double rhs =
      std::sqrt(std::exp2(s.R_min * (s.p - s.p_t) / (s.T * s.p - s.E_max)) / (s.p_bar * s.C));
  r.residual = n_star - rhs;
  r.feasible = r.residual >= 0;
  return r;
}

namespace {

double golden_max(const std::function<double(double)>& f, double lo, double hi) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - invphi * (b - a), d = a + invphi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 300 && (b - a) > 1e-13 * std::max(1.0, hi); ++it) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - invphi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + invphi * (b - a);
      fd = f(d);
    }
  }
  double x = 0.5 * (a + b), fx = f(x);
  // endpoints win when the function is monotone on the interval
  if (f(lo) > fx) {
    x = lo;
    fx = f(lo);
  }
  if (f(hi) > fx) x = hi;
  return x;
}

} // namespace

BruteForceResult brute_force_n(const SimpleScenario& s, TimeRule rule, double n_lo,
                               double n_hi) {
  s.validate();
  const double n_cap = s.T * s.R_F / s.b;
  if (!(n_lo > 0) || !(n_hi > n_lo) || n_hi >= n_cap)
    throw DomainError("brute_force_n: range must satisfy 0 < n_lo < n_hi < T R_F / b");

  auto t_of = [&](double n) {
    if (rule == TimeRule::case1) return s.b * n / s.R_F;
    return (s.E_max - s.T * s.p_t) / (s.p - s.p_t);
  };
  auto exact = [&](double n) {
    return (s.T - t_of(n)) * std::log2(1.0 + s.p_bar * s.C * n * n);
  };
  auto leading = [&](double n) {
    return (s.T - t_of(n)) * std::log2(s.p_bar * s.C * n * n);
  };

  BruteForceResult r;
  r.argmax_exact = golden_max(exact, n_lo, n_hi);
  r.argmax_leading = golden_max(leading, n_lo, n_hi);

  const int fl = std::max(1, static_cast<int>(std::floor(r.argmax_exact)));
  const int ce = fl + 1;
  r.best_integer = exact(fl) >= exact(ce) ? fl : ce;
  return r;
}

} // namespace risopt
