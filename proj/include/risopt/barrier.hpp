#pragma once

#include <functional>
#include <string>
#include <vector>

#include "risopt/types.hpp"

namespace risopt::barrier {

/// a . x <= b
struct LinearIneq {
  Vec a;
  double b = 0;
};

/// x[s]^2 <= a . x + b  (rotated-cone style epigraph coupling)
struct Hyperbolic {
  int s = -1;
  Vec a;
  double b = 0;
};

/// One Hermitian entry of a PSD block: value = c + x[re] + i * x[im]
/// (i == j entries are real; im must be -1 there). re2 is an optional
/// second real variable added on top, used by the phase-1 slack.
struct PsdEntry {
  int i = 0, j = 0;
  int re = -1, im = -1, re2 = -1;
  cplx c{0, 0};
};

/// S(x) >= 0 where S is Hermitian with the given upper-triangular entries.
struct PsdBlock {
  int size = 0;
  std::vector<PsdEntry> entries;
};

/// minimize c . x subject to the listed constraints.
struct Problem {
  int n = 0;
  Vec c;
  std::vector<LinearIneq> lin;
  std::vector<Hyperbolic> hyp;
  std::vector<PsdBlock> psd;

  /// Total barrier degree (controls the duality-gap bound degree/t).
  double degree() const;
};

struct Options {
  double tol_gap = 1e-8; // relative duality-gap target
  double t0 = 1.0;       // initial path parameter
  double mu = 30.0;      // path multiplier
  int max_newton = 600;
  double newton_tol = 1e-10; // squared Newton decrement threshold
  std::function<bool(const Vec&)> early_stop; // optional, checked per step
};

struct Result {
  Vec x;
  double obj = 0;
  bool ok = false;
  int newton_steps = 0;
  double gap = 0;
  std::string message;
};

/// Strict feasibility of x (margin in absolute slack / eigenvalue units).
bool strictly_feasible(const Problem& pb, const Vec& x, double margin = 0);

/// Path-following barrier method from a strictly feasible x0.
Result minimize(const Problem& pb, const Vec& x0, const Options& opts = {});

/// Phase-1 + minimize: x0 may sit on (or slightly outside) the boundary.
/// Returns ok=false with message "infeasible" when no interior point exists.
Result solve(const Problem& pb, const Vec& x0, const Options& opts = {});

} // namespace risopt::barrier
