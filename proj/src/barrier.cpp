#include "risopt/barrier.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>

namespace risopt::barrier {

double Problem::degree() const {
  double d = static_cast<double>(lin.size()) + 2.0 * hyp.size();
  for (const auto& blk : psd) d += blk.size;
  return d;
}

namespace {

// A variable's coefficient matrix inside a block, decomposed into
// single-entry atoms alpha * e_p e_q^T (at most two).
struct Atom {
  cplx alpha;
  int p, q;
};

struct Term {
  int var;
  int n_atoms;
  Atom atoms[2];
};

struct BlockWork {
  const PsdBlock* blk;
  std::vector<Term> terms;
  CMat S;   // current value
  CMat P;   // inverse
  double logdet = 0;
};

void build_terms(const PsdBlock& blk, std::vector<Term>& out) {
  out.clear();
  for (const auto& e : blk.entries) {
    if (e.i == e.j) {
      for (int v : {e.re, e.re2})
        if (v >= 0) out.push_back({v, 1, {{cplx(1, 0), e.i, e.i}, {}}});
    } else {
      if (e.re >= 0)
        out.push_back({e.re, 2, {{cplx(1, 0), e.i, e.j}, {cplx(1, 0), e.j, e.i}}});
      if (e.im >= 0)
        out.push_back({e.im, 2, {{cplx(0, 1), e.i, e.j}, {cplx(0, -1), e.j, e.i}}});
      if (e.re2 >= 0)
        out.push_back({e.re2, 2, {{cplx(1, 0), e.i, e.j}, {cplx(1, 0), e.j, e.i}}});
    }
  }
}

void block_value(const PsdBlock& blk, const Vec& x, CMat& S) {
  S.setZero(blk.size, blk.size);
  for (const auto& e : blk.entries) {
    cplx v = e.c;
    if (e.re >= 0) v += x[e.re];
    if (e.re2 >= 0) v += x[e.re2];
    if (e.im >= 0) v += cplx(0, 1) * x[e.im];
    S(e.i, e.j) = v;
    if (e.i != e.j) S(e.j, e.i) = std::conj(v);
  }
}

struct Evaluator {
  const Problem& pb;
  std::vector<BlockWork> blocks;

  explicit Evaluator(const Problem& p) : pb(p) {
    blocks.resize(pb.psd.size());
    for (size_t m = 0; m < pb.psd.size(); ++m) {
      blocks[m].blk = &pb.psd[m];
      build_terms(pb.psd[m], blocks[m].terms);
    }
  }

  // Returns false when x is on/outside the boundary. When computing barrier
  // value, fills *phi with the barrier part (no objective term).
  bool eval(const Vec& x, double* phi, bool want_inverse) {
    double total = 0;
    for (const auto& li : pb.lin) {
      const double s = li.b - li.a.dot(x);
      if (s <= 0) return false;
      total -= std::log(s);
    }
    for (const auto& hy : pb.hyp) {
      const double s = hy.a.dot(x) + hy.b - x[hy.s] * x[hy.s];
      if (s <= 0) return false;
      total -= std::log(s);
    }
    for (auto& bw : blocks) {
      block_value(*bw.blk, x, bw.S);
      Eigen::LLT<CMat> llt(bw.S);
      if (llt.info() != Eigen::Success) return false;
      double ld = 0;
      for (int i = 0; i < bw.blk->size; ++i) {
        const double d = std::real(llt.matrixL()(i, i));
        if (!(d > 0)) return false;
        ld += 2.0 * std::log(d);
      }
      bw.logdet = ld;
      total -= ld;
      if (want_inverse)
        bw.P = llt.solve(CMat::Identity(bw.blk->size, bw.blk->size));
    }
    if (phi) *phi = total;
    return true;
  }

  // Gradient and Hessian of the barrier at the point of the last eval(x, want_inverse=true).
  void derivatives(const Vec& x, Vec& g, Eigen::MatrixXd& H) {
    const int n = pb.n;
    g.setZero(n);
    H.setZero(n, n);

    for (const auto& li : pb.lin) {
      const double s = li.b - li.a.dot(x);
      g += li.a / s;
      H.selfadjointView<Eigen::Lower>().rankUpdate(li.a, 1.0 / (s * s));
    }
    for (const auto& hy : pb.hyp) {
      const double s = hy.a.dot(x) + hy.b - x[hy.s] * x[hy.s];
      Vec dg = hy.a;
      dg[hy.s] -= 2.0 * x[hy.s];
      g -= dg / s;
      H.selfadjointView<Eigen::Lower>().rankUpdate(dg, 1.0 / (s * s));
      H(hy.s, hy.s) += 2.0 / s;
    }
    for (const auto& bw : blocks) {
      const CMat& P = bw.P;
      const auto& terms = bw.terms;
      const int nt = static_cast<int>(terms.size());
      for (int a = 0; a < nt; ++a) {
        const Term& ta = terms[a];
        cplx gv = 0;
        for (int u = 0; u < ta.n_atoms; ++u)
          gv += ta.atoms[u].alpha * P(ta.atoms[u].q, ta.atoms[u].p);
        g[ta.var] -= std::real(gv);
        for (int b = 0; b <= a; ++b) {
          const Term& tb = terms[b];
          cplx hv = 0;
          for (int u = 0; u < ta.n_atoms; ++u)
            for (int v = 0; v < tb.n_atoms; ++v)
              hv += ta.atoms[u].alpha * tb.atoms[v].alpha *
                    P(ta.atoms[u].q, tb.atoms[v].p) * P(tb.atoms[v].q, ta.atoms[u].p);
          const double val = std::real(hv);
          const int va = ta.var, vb = tb.var;
          if (va >= vb) H(va, vb) += val; else H(vb, va) += val;
        }
      }
    }
  }
};

} // namespace

bool strictly_feasible(const Problem& pb, const Vec& x, double margin) {
  for (const auto& li : pb.lin)
    if (li.b - li.a.dot(x) <= margin) return false;
  for (const auto& hy : pb.hyp)
    if (hy.a.dot(x) + hy.b - x[hy.s] * x[hy.s] <= margin) return false;
  CMat S;
  for (const auto& blk : pb.psd) {
    block_value(blk, x, S);
    if (margin > 0) S -= margin * CMat::Identity(blk.size, blk.size);
    Eigen::LLT<CMat> llt(S);
    if (llt.info() != Eigen::Success) return false;
    for (int i = 0; i < blk.size; ++i)
      if (!(std::real(llt.matrixL()(i, i)) > 0)) return false;
  }
  return true;
}

Result minimize(const Problem& pb, const Vec& x0, const Options& opts) {
  Result res;
  res.x = x0;
  Evaluator ev(pb);

  double phi_b = 0;
  if (!ev.eval(x0, &phi_b, false)) {
    res.message = "start point not strictly feasible";
    return res;
  }

  const double degree = std::max(pb.degree(), 1.0);
  double t = opts.t0;
  Vec x = x0, g(pb.n), gb(pb.n), dx(pb.n);
  Eigen::MatrixXd H(pb.n, pb.n);
  int steps = 0;
  // Centering needs only a modest decrement for the gap certificate; a hard
  // per-t cap guards the numerically degenerate endgame.
  const int max_center = 80;

  while (true) {
    // Center for the current t.
    int center_steps = 0;
    for (;;) {
      if (steps >= opts.max_newton) {
        res.x = x;
        res.obj = pb.c.dot(x);
        res.gap = degree / t;
        res.ok = res.gap <= opts.tol_gap * std::max(1.0, std::abs(res.obj));
        res.message = "newton step budget exhausted";
        res.newton_steps = steps;
        return res;
      }
      if (center_steps >= max_center) break;
      if (!ev.eval(x, &phi_b, true)) {
        res.message = "lost feasibility";
        res.newton_steps = steps;
        return res;
      }
      ev.derivatives(x, gb, H);
      g = t * pb.c + gb;

      double ridge = 0;
      for (;;) {
        Eigen::MatrixXd Hr = H;
        if (ridge > 0) Hr.diagonal().array() += ridge;
        Eigen::LDLT<Eigen::MatrixXd> ldlt(Hr.selfadjointView<Eigen::Lower>());
        dx = ldlt.solve(-g);
        if (ldlt.info() == Eigen::Success && g.dot(dx) < 0) break;
        ridge = ridge == 0 ? 1e-10 * (1.0 + H.diagonal().cwiseAbs().maxCoeff()) : ridge * 100;
        if (ridge > 1e12) {
          res.x = x;
          res.obj = pb.c.dot(x);
          res.gap = degree / t;
          res.message = "singular Newton system";
          res.newton_steps = steps;
          return res;
        }
      }

      const double lambda2 = -g.dot(dx);
      // Relative to the t-scaled objective magnitude: an absolute decrement
      // target is unattainable in doubles once t is large.
      const double scale = std::max(1.0, std::abs(t * pb.c.dot(x)) + std::abs(phi_b));
      if (lambda2 / 2.0 < opts.newton_tol * scale) break;

      const double phi0 = t * pb.c.dot(x) + phi_b;
      const double slope = g.dot(dx);
      double alpha = 1.0, phi_trial;
      Vec xt;
      for (;;) {
        xt = x + alpha * dx;
        if (ev.eval(xt, &phi_trial, false) &&
            t * pb.c.dot(xt) + phi_trial <= phi0 + 0.25 * alpha * slope)
          break;
        alpha *= 0.5;
        if (alpha < 1e-14) break;
      }
      if (alpha < 1e-14) break; // stalled; treat as centered
      x = xt;
      ++steps;
      ++center_steps;
      if (opts.early_stop && opts.early_stop(x)) {
        res.x = x;
        res.obj = pb.c.dot(x);
        res.ok = true;
        res.gap = degree / t;
        res.newton_steps = steps;
        res.message = "early stop";
        return res;
      }
    }

    const double gap = degree / t;
    if (gap <= opts.tol_gap * std::max(1.0, std::abs(pb.c.dot(x)))) {
      res.x = x;
      res.obj = pb.c.dot(x);
      res.ok = true;
      res.gap = gap;
      res.newton_steps = steps;
      return res;
    }
    t *= opts.mu;
  }
}

Result solve(const Problem& pb, const Vec& x0, const Options& opts) {
  if (strictly_feasible(pb, x0, 0) ) {
    // Require a sliver of interior so the first Newton evals are stable.
    if (strictly_feasible(pb, x0, 1e-13))
      return minimize(pb, x0, opts);
  }

  // Phase 1: minimize sigma with every constraint relaxed by sigma.
  Problem aug;
  const int n = pb.n;
  aug.n = n + 1;
  const int sv = n;
  aug.c = Vec::Zero(aug.n);
  aug.c[sv] = 1.0;
  for (const auto& li : pb.lin) {
    LinearIneq li2;
    li2.a = Vec::Zero(aug.n);
    li2.a.head(n) = li.a;
    li2.a[sv] = -1.0;
    li2.b = li.b;
    aug.lin.push_back(std::move(li2));
  }
  for (const auto& hy : pb.hyp) {
    Hyperbolic h2;
    h2.s = hy.s;
    h2.a = Vec::Zero(aug.n);
    h2.a.head(n) = hy.a;
    h2.a[sv] = 1.0;
    h2.b = hy.b;
    aug.hyp.push_back(std::move(h2));
  }
  for (const auto& blk : pb.psd) {
    PsdBlock b2 = blk;
    std::vector<bool> has_diag(blk.size, false);
    for (auto& e : b2.entries)
      if (e.i == e.j) {
        has_diag[e.i] = true;
        e.re2 = sv;
      }
    for (int i = 0; i < blk.size; ++i)
      if (!has_diag[i]) b2.entries.push_back({i, i, -1, -1, sv, cplx(0, 0)});
    aug.psd.push_back(std::move(b2));
  }

  // Initial slack: largest violation across all constraints, with headroom.
  double viol = 0;
  for (const auto& li : pb.lin) viol = std::max(viol, li.a.dot(x0) - li.b);
  for (const auto& hy : pb.hyp)
    viol = std::max(viol, x0[hy.s] * x0[hy.s] - hy.a.dot(x0) - hy.b);
  CMat S;
  for (const auto& blk : pb.psd) {
    block_value(blk, x0, S);
    Eigen::SelfAdjointEigenSolver<CMat> es(S, Eigen::EigenvaluesOnly);
    viol = std::max(viol, -es.eigenvalues().minCoeff());
  }
  const double sigma0 = viol + 0.1 * (1.0 + viol);

  LinearIneq cap;
  cap.a = Vec::Zero(aug.n);
  cap.a[sv] = 1.0;
  cap.b = sigma0 + 1.0;
  aug.lin.push_back(std::move(cap));

  Vec xa = Vec::Zero(aug.n);
  xa.head(n) = x0;
  xa[sv] = sigma0;

  Options o1 = opts;
  o1.tol_gap = 1e-10;
  o1.t0 = 1.0 / std::max(sigma0, 1e-6);
  const double target = -1e-7 * std::max(1.0, sigma0);
  o1.early_stop = [sv, target](const Vec& xc) { return xc[sv] < target; };
  Result r1 = minimize(aug, xa, o1);

  Result res;
  if (r1.x.size() != aug.n || r1.x[sv] >= -1e-13) {
    res.message = "infeasible";
    res.newton_steps = r1.newton_steps;
    return res;
  }
  Vec xf = r1.x.head(n);
  if (!strictly_feasible(pb, xf, 0)) {
    res.message = "infeasible";
    res.newton_steps = r1.newton_steps;
    return res;
  }
  Result r2 = minimize(pb, xf, opts);
  r2.newton_steps += r1.newton_steps;
  return r2;
}

} // namespace risopt::barrier
