#include "releq/reduction.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace releq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double fd_step(double x) { return 6.0554544523933395e-6 * (1.0 + std::abs(x)); }
double fd_step2(double x) { return 1.2207031e-4 * (1.0 + std::abs(x)); }

}  // namespace

// ---------------------------------------------------------------------------
// Derivative accessors with finite-difference fallbacks
// ---------------------------------------------------------------------------

Vec3 grad_mu(const ReducedSystem& sys, const Vec3& mu, const VecX& s) {
  if (sys.d_mu) return sys.d_mu(mu, s);
  Vec3 g;
  for (int i = 0; i < 3; ++i) {
    Vec3 p = mu, q = mu;
    const double h = fd_step(mu[i]);
    p[i] += h;
    q[i] -= h;
    g[i] = (sys.value(p, s) - sys.value(q, s)) / (2 * h);
  }
  return g;
}

VecX grad_s(const ReducedSystem& sys, const Vec3& mu, const VecX& s) {
  if (sys.d_s) return sys.d_s(mu, s);
  VecX g(s.size());
  for (int i = 0; i < s.size(); ++i) {
    VecX p = s, q = s;
    const double h = fd_step(s[i]);
    p[i] += h;
    q[i] -= h;
    g[i] = (sys.value(mu, p) - sys.value(mu, q)) / (2 * h);
  }
  return g;
}

Mat3 hess_mumu(const ReducedSystem& sys, const Vec3& mu, const VecX& s) {
  if (sys.d2_mumu) return sys.d2_mumu(mu, s);
  Mat3 H;
  if (sys.d_mu) {
    for (int i = 0; i < 3; ++i) {
      Vec3 p = mu, q = mu;
      const double h = fd_step(mu[i]);
      p[i] += h;
      q[i] -= h;
      H.col(i) = (sys.d_mu(p, s) - sys.d_mu(q, s)) / (2 * h);
    }
  } else {
    for (int i = 0; i < 3; ++i)
      for (int jx = 0; jx < 3; ++jx) {
        const double hi = fd_step2(mu[i]), hj = fd_step2(mu[jx]);
        Vec3 pp = mu, pm = mu, mp = mu, mm = mu;
        pp[i] += hi; pp[jx] += hj;
        pm[i] += hi; pm[jx] -= hj;
        mp[i] -= hi; mp[jx] += hj;
        mm[i] -= hi; mm[jx] -= hj;
        H(i, jx) = (sys.value(pp, s) - sys.value(pm, s) - sys.value(mp, s) +
                    sys.value(mm, s)) /
                   (4 * hi * hj);
      }
  }
  return 0.5 * (H + H.transpose());
}

MatX hess_smu(const ReducedSystem& sys, const Vec3& mu, const VecX& s) {
  if (sys.d2_smu) return sys.d2_smu(mu, s);
  MatX H(s.size(), 3);
  for (int jx = 0; jx < 3; ++jx) {
    Vec3 p = mu, q = mu;
    const double h = sys.d_s ? fd_step(mu[jx]) : fd_step2(mu[jx]);
    p[jx] += h;
    q[jx] -= h;
    H.col(jx) = (grad_s(sys, p, s) - grad_s(sys, q, s)) / (2 * h);
  }
  return H;
}

MatX hess_ss(const ReducedSystem& sys, const Vec3& mu, const VecX& s) {
  if (sys.d2_ss) return sys.d2_ss(mu, s);
  const int n = static_cast<int>(s.size());
  MatX H(n, n);
  for (int i = 0; i < n; ++i) {
    VecX p = s, q = s;
    const double h = sys.d_s ? fd_step(s[i]) : fd_step2(s[i]);
    p[i] += h;
    q[i] -= h;
    H.col(i) = (grad_s(sys, mu, p) - grad_s(sys, mu, q)) / (2 * h);
  }
  return 0.5 * (H + H.transpose());
}

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

ReducedSystem from_universal(const QuadraticModel& m,
                             const UnfoldingParam& alpha) {
  ReducedSystem sys;
  sys.shape_pairs = 0;
  sys.value = [m, alpha](const Vec3& mu, const VecX&) {
    return family_value(m, alpha, mu);
  };
  sys.d_mu = [m, alpha](const Vec3& mu, const VecX&) {
    return family_gradient(m, alpha, mu);
  };
  sys.d_s = [](const Vec3&, const VecX&) { return VecX(0); };
  sys.d2_mumu = [m](const Vec3&, const VecX&) -> Mat3 {
    return family_hessian(m);
  };
  sys.d2_smu = [](const Vec3&, const VecX&) { return MatX(0, 3); };
  sys.d2_ss = [](const Vec3&, const VecX&) { return MatX(0, 0); };
  return sys;
}

ReducedSystem from_reduced_hamiltonian(std::function<double(const Vec3&)> h,
                                       std::function<Vec3(const Vec3&)> grad,
                                       std::function<Mat3(const Vec3&)> hess) {
  ReducedSystem sys;
  sys.shape_pairs = 0;
  sys.value = [h](const Vec3& mu, const VecX&) { return h(mu); };
  if (grad) sys.d_mu = [grad](const Vec3& mu, const VecX&) { return grad(mu); };
  if (hess)
    sys.d2_mumu = [hess](const Vec3& mu, const VecX&) { return hess(mu); };
  sys.d_s = [](const Vec3&, const VecX&) { return VecX(0); };
  sys.d2_smu = [](const Vec3&, const VecX&) { return MatX(0, 3); };
  sys.d2_ss = [](const Vec3&, const VecX&) { return MatX(0, 0); };
  return sys;
}

namespace {

double int_pow(double x, int e) {
  double r = 1.0;
  for (int k = 0; k < e; ++k) r *= x;
  return r;
}

struct PolyEval {
  int ns;
  std::vector<PolyTerm> terms;

  double value(const Vec3& mu, const VecX& s) const {
    double v = 0.0;
    for (const auto& t : terms) {
      double term = t.coef;
      for (int i = 0; i < 3; ++i) term *= int_pow(mu[i], t.mu_exp[i]);
      for (int i = 0; i < ns; ++i) term *= int_pow(s[i], t.s_exp[i]);
      v += term;
    }
    return v;
  }
  // derivative of one term with respect to mu axis (da >= 0 times) and/or
  // shape coordinate; assembled per use below.
};

PolyTerm d_mu_term(const PolyTerm& t, int axis) {
  PolyTerm d = t;
  if (t.mu_exp[axis] == 0) {
    d.coef = 0.0;
    d.mu_exp = {0, 0, 0};
    d.s_exp.assign(t.s_exp.size(), 0);
    return d;
  }
  d.coef *= t.mu_exp[axis];
  d.mu_exp[axis] -= 1;
  return d;
}

PolyTerm d_s_term(const PolyTerm& t, int k) {
  PolyTerm d = t;
  if (t.s_exp.empty() || t.s_exp[k] == 0) {
    d.coef = 0.0;
    d.mu_exp = {0, 0, 0};
    d.s_exp.assign(t.s_exp.size(), 0);
    return d;
  }
  d.coef *= t.s_exp[k];
  d.s_exp[k] -= 1;
  return d;
}

}  // namespace

ReducedSystem from_polynomial(int shape_pairs,
                              const std::vector<PolyTerm>& terms) {
  const int ns = 2 * shape_pairs;
  for (const auto& t : terms) {
    if (static_cast<int>(t.s_exp.size()) != ns)
      throw ConfigError("polynomial term has wrong shape-exponent count");
    for (int e : t.s_exp)
      if (e < 0) throw ConfigError("negative exponent");
    for (int e : t.mu_exp)
      if (e < 0) throw ConfigError("negative exponent");
  }
  auto pe = std::make_shared<PolyEval>();
  pe->ns = ns;
  pe->terms = terms;

  ReducedSystem sys;
  sys.shape_pairs = shape_pairs;
  sys.value = [pe](const Vec3& mu, const VecX& s) { return pe->value(mu, s); };
  sys.d_mu = [pe](const Vec3& mu, const VecX& s) {
    Vec3 g = Vec3::Zero();
    for (const auto& t : pe->terms)
      for (int a = 0; a < 3; ++a) {
        const PolyTerm d = d_mu_term(t, a);
        if (d.coef == 0.0) continue;
        double v = d.coef;
        for (int i = 0; i < 3; ++i) v *= int_pow(mu[i], d.mu_exp[i]);
        for (int i = 0; i < pe->ns; ++i) v *= int_pow(s[i], d.s_exp[i]);
        g[a] += v;
      }
    return g;
  };
  sys.d_s = [pe](const Vec3& mu, const VecX& s) {
    VecX g = VecX::Zero(pe->ns);
    for (const auto& t : pe->terms)
      for (int k = 0; k < pe->ns; ++k) {
        const PolyTerm d = d_s_term(t, k);
        if (d.coef == 0.0) continue;
        double v = d.coef;
        for (int i = 0; i < 3; ++i) v *= int_pow(mu[i], d.mu_exp[i]);
        for (int i = 0; i < pe->ns; ++i) v *= int_pow(s[i], d.s_exp[i]);
        g[k] += v;
      }
    return g;
  };
  sys.d2_mumu = [pe](const Vec3& mu, const VecX& s) {
    Mat3 H = Mat3::Zero();
    for (const auto& t : pe->terms)
      for (int a = 0; a < 3; ++a) {
        const PolyTerm d1 = d_mu_term(t, a);
        if (d1.coef == 0.0) continue;
        for (int b = 0; b < 3; ++b) {
          const PolyTerm d2 = d_mu_term(d1, b);
          if (d2.coef == 0.0) continue;
          double v = d2.coef;
          for (int i = 0; i < 3; ++i) v *= int_pow(mu[i], d2.mu_exp[i]);
          for (int i = 0; i < pe->ns; ++i) v *= int_pow(s[i], d2.s_exp[i]);
          H(a, b) += v;
        }
      }
    return H;
  };
  sys.d2_smu = [pe](const Vec3& mu, const VecX& s) {
    MatX H = MatX::Zero(pe->ns, 3);
    for (const auto& t : pe->terms)
      for (int k = 0; k < pe->ns; ++k) {
        const PolyTerm d1 = d_s_term(t, k);
        if (d1.coef == 0.0) continue;
        for (int b = 0; b < 3; ++b) {
          const PolyTerm d2 = d_mu_term(d1, b);
          if (d2.coef == 0.0) continue;
          double v = d2.coef;
          for (int i = 0; i < 3; ++i) v *= int_pow(mu[i], d2.mu_exp[i]);
          for (int i = 0; i < pe->ns; ++i) v *= int_pow(s[i], d2.s_exp[i]);
          H(k, b) += v;
        }
      }
    return H;
  };
  sys.d2_ss = [pe](const Vec3& mu, const VecX& s) {
    MatX H = MatX::Zero(pe->ns, pe->ns);
    for (const auto& t : pe->terms)
      for (int k = 0; k < pe->ns; ++k) {
        const PolyTerm d1 = d_s_term(t, k);
        if (d1.coef == 0.0) continue;
        for (int l = 0; l < pe->ns; ++l) {
          const PolyTerm d2 = d_s_term(d1, l);
          if (d2.coef == 0.0) continue;
          double v = d2.coef;
          for (int i = 0; i < 3; ++i) v *= int_pow(mu[i], d2.mu_exp[i]);
          for (int i = 0; i < pe->ns; ++i) v *= int_pow(s[i], d2.s_exp[i]);
          H(k, l) += v;
        }
      }
    return H;
  };
  return sys;
}

ReducedSystem system_from_json_text(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const std::exception& e) {
    throw ConfigError(std::string("invalid system JSON: ") + e.what());
  }
  if (!doc.contains("n") || !doc["n"].is_number_integer())
    throw ConfigError("system description needs integer field 'n'");
  const int n = doc["n"].get<int>();
  if (n < 0) throw ConfigError("'n' must be >= 0");
  if (!doc.contains("terms") || !doc["terms"].is_array())
    throw ConfigError("system description needs array field 'terms'");
  std::vector<PolyTerm> terms;
  for (const auto& jt : doc["terms"]) {
    PolyTerm t;
    if (!jt.contains("c") || !jt.contains("mu"))
      throw ConfigError("each term needs 'c' and 'mu'");
    t.coef = jt["c"].get<double>();
    const auto& me = jt["mu"];
    if (!me.is_array() || me.size() != 3)
      throw ConfigError("'mu' must be a 3-array of exponents");
    for (int i = 0; i < 3; ++i) t.mu_exp[i] = me[i].get<int>();
    if (jt.contains("s")) {
      for (const auto& e : jt["s"]) t.s_exp.push_back(e.get<int>());
    }
    if (static_cast<int>(t.s_exp.size()) != 2 * n)
      throw ConfigError("'s' exponent list must have length 2n");
    terms.push_back(std::move(t));
  }
  return from_polynomial(n, terms);
}

// ---------------------------------------------------------------------------
// Shape slices
// ---------------------------------------------------------------------------

SlicePoint solve_slice(const ReducedSystem& sys, const Vec3& mu,
                       const VecX& s_guess, const SliceOptions& opts) {
  SlicePoint out;
  if (sys.dim_s() == 0) {
    out.s = VecX(0);
    out.residual = 0.0;
    out.iterations = 0;
    return out;
  }
  VecX s = s_guess.size() == sys.dim_s() ? s_guess : sys.base_shape();
  VecX g = grad_s(sys, mu, s);
  const auto scale = [&](const VecX& sv) {
    return 1.0 + mu.norm() + sv.norm();
  };
  for (int it = 0; it < opts.max_iter; ++it) {
    if (g.norm() <= opts.tol * scale(s)) {
      out.s = s;
      out.residual = g.norm();
      out.iterations = it;
      return out;
    }
    const MatX H = hess_ss(sys, mu, s);
    Eigen::JacobiSVD<MatX> svd(H, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(svd.singularValues().size() - 1);
    if (!(smin > 0.0) || smax / smin > opts.cond_limit)
      throw SingularHessian("shape Hessian is singular along the slice");
    const VecX step = -svd.solve(g);
    double tau = 1.0;
    VecX s_next = s + step;
    VecX g_next = grad_s(sys, mu, s_next);
    int bt = 0;
    while (g_next.norm() > (1.0 - 1e-4 * tau) * g.norm() && bt++ < 30) {
      tau *= 0.5;
      s_next = s + tau * step;
      g_next = grad_s(sys, mu, s_next);
    }
    if (bt > 30) break;
    s = s_next;
    g = g_next;
  }
  if (g.norm() <= opts.tol * 100 * scale(s)) {
    out.s = s;
    out.residual = g.norm();
    out.iterations = opts.max_iter;
    return out;
  }
  throw NoConvergence("shape slice Newton did not converge");
}

double reduced_h(const ReducedSystem& sys, const Vec3& mu) {
  VecX s = sys.base_shape();
  return reduced_h(sys, mu, s);
}

double reduced_h(const ReducedSystem& sys, const Vec3& mu, VecX& s_inout) {
  const SlicePoint sp = solve_slice(sys, mu, s_inout);
  s_inout = sp.s;
  return sys.value(mu, sp.s);
}

SliceTracker::SliceTracker(const ReducedSystem& sys, const SliceOptions& opts)
    : sys_(&sys), opts_(opts), s_(sys.base_shape()) {}

void SliceTracker::reset(const VecX& s) {
  s_ = s;
  have_ = false;
}

const VecX& SliceTracker::shape_at(const Vec3& mu) {
  if (sys_->dim_s() == 0) return s_;
  if (have_ && (mu - last_mu_).norm() == 0.0) return s_;
  const SlicePoint sp = solve_slice(*sys_, mu, s_, opts_);
  s_ = sp.s;
  last_mu_ = mu;
  have_ = true;
  return s_;
}

double SliceTracker::value_h(const Vec3& mu) {
  const VecX& s = shape_at(mu);
  return sys_->value(mu, s);
}

Vec3 SliceTracker::grad_h(const Vec3& mu) {
  const VecX& s = shape_at(mu);
  return grad_mu(*sys_, mu, s);  // envelope: slice term drops out
}

Mat3 SliceTracker::hess_h(const Vec3& mu) {
  const VecX& s = shape_at(mu);
  const Mat3 Hmm = hess_mumu(*sys_, mu, s);
  if (sys_->dim_s() == 0) return Hmm;
  const MatX Hsm = hess_smu(*sys_, mu, s);
  const MatX Hss = hess_ss(*sys_, mu, s);
  Eigen::LDLT<MatX> ldlt(Hss);
  if (ldlt.info() != Eigen::Success)
    throw SingularHessian("shape Hessian not factorizable");
  const MatX correction = Hsm.transpose() * ldlt.solve(Hsm);
  return Hmm - correction;
}

double multiplier_at(const Vec3& grad_h, const Vec3& mu) {
  const double n2 = mu.squaredNorm();
  return n2 > 0.0 ? grad_h.dot(mu) / n2 : kInf;
}

// ---------------------------------------------------------------------------
// Continuation
// ---------------------------------------------------------------------------

namespace {

struct Field {
  SliceTracker tracker;
  explicit Field(const ReducedSystem& sys) : tracker(sys) {}

  Vec3 m(const Vec3& mu) { return tracker.grad_h(mu).cross(mu); }
  Mat3 Dm(const Vec3& mu) {
    const Vec3 g = tracker.grad_h(mu);
    const Mat3 H = tracker.hess_h(mu);
    return -hat<double>(mu) * H + hat<double>(g);
  }
  double res_scale(const Vec3& mu) {
    return (1.0 + tracker.grad_h(mu).norm()) * (1.0 + mu.norm());
  }
};

Vec3 smallest_right_singular(const Mat3& A, double* sigma_min = nullptr,
                             double* sigma_mid = nullptr) {
  Eigen::JacobiSVD<Mat3> svd(A, Eigen::ComputeFullV);
  if (sigma_min) *sigma_min = svd.singularValues()(2);
  if (sigma_mid) *sigma_mid = svd.singularValues()(1);
  return svd.matrixV().col(2);
}

// Corrector: Newton least squares on [m(mu); constraint row].
bool correct(Field& f, Vec3& mu, const Vec3& plane_normal,
             const Vec3& plane_point, const ContinuationOptions& opts,
             int* iters_out = nullptr) {
  for (int it = 0; it < opts.max_corrector_iter; ++it) {
    const Vec3 mv = f.m(mu);
    const double cons = plane_normal.dot(mu - plane_point);
    const double res = std::sqrt(mv.squaredNorm() + cons * cons);
    if (res <= opts.corrector_tol * f.res_scale(mu)) {
      if (iters_out) *iters_out = it;
      return true;
    }
    Eigen::Matrix<double, 4, 3> J;
    J.topRows<3>() = f.Dm(mu);
    J.bottomRows<1>() = plane_normal.transpose();
    Eigen::Vector4d r;
    r << mv, cons;
    const Vec3 step =
        J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-r);
    if (!all_finite(step)) return false;
    mu += step;
    if (!all_finite(mu)) return false;
  }
  return false;
}

// Newton seed onto { m = 0, j = j0 }.
bool seed_solve(Field& f, Vec3& mu, double j0,
                const ContinuationOptions& opts) {
  for (int it = 0; it < 40; ++it) {
    const Vec3 mv = f.m(mu);
    const double cons = casimir(mu) - j0;
    const double res = std::sqrt(mv.squaredNorm() + cons * cons);
    if (res <= opts.seed_tol * f.res_scale(mu) * (1.0 + j0)) return true;
    Eigen::Matrix<double, 4, 3> J;
    J.topRows<3>() = f.Dm(mu);
    J.bottomRows<1>() = mu.transpose();
    Eigen::Vector4d r;
    r << mv, cons;
    Vec3 step =
        J.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(-r);
    if (!all_finite(step)) return false;
    // Guarded step: never move more than one radius at a time.
    const double maxmove = 0.5 * (1.0 + mu.norm());
    if (step.norm() > maxmove) step *= maxmove / step.norm();
    mu += step;
    if (!all_finite(mu)) return false;
  }
  return false;
}

// Branch-point test function: determinant of the projected augmented
// Jacobian with frame (U, t) frozen over one segment. Sign changes at
// simple transversal crossings of the equilibrium set.
double branch_test(Field& f, const Vec3& mu, const Eigen::Matrix<double, 3, 2>& U,
                   const Vec3& t) {
  const Mat3 Dm = f.Dm(mu);
  Mat3 A;
  A.row(0) = (U.col(0).transpose() * Dm);
  A.row(1) = (U.col(1).transpose() * Dm);
  A.row(2) = t.transpose();
  return A.determinant();
}

struct RawBranch {
  std::vector<Vec3> pts;
  std::vector<Vec3> branch_points;  // located transversal crossings
  bool closed_loop = false;
};

double dist_to_polyline(const Vec3& p, const std::vector<Vec3>& poly) {
  double best = kInf;
  for (size_t i = 0; i + 1 < poly.size(); ++i) {
    const Vec3 a = poly[i], b = poly[i + 1];
    const Vec3 ab = b - a;
    const double len2 = ab.squaredNorm();
    double tt = len2 > 0 ? (p - a).dot(ab) / len2 : 0.0;
    tt = std::clamp(tt, 0.0, 1.0);
    best = std::min(best, (p - (a + tt * ab)).norm());
  }
  if (poly.size() == 1) best = std::min(best, (p - poly[0]).norm());
  return best;
}

// Trace one direction from a confirmed point on the set.
void trace_direction(Field& f, const Vec3& start, Vec3 t, double window,
                     const ContinuationOptions& opts, double max_step,
                     std::vector<Vec3>& out, std::vector<Vec3>& branch_pts,
                     bool* closed, const Vec3& loop_probe) {
  Vec3 mu = start;
  double step = 0.25 * max_step;
  int since_start = 0;
  *closed = false;

  Eigen::Matrix<double, 3, 2> U;
  {
    // frame orthogonal to the tangent, frozen per segment
    const Vec3 aux = std::abs(t[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
    U.col(0) = (aux - aux.dot(t) * t).normalized();
    U.col(1) = t.cross(U.col(0));
  }
  double tau_prev = branch_test(f, mu, U, t);

  for (int k = 0; k < opts.max_steps; ++k) {
    // tangent at current point, oriented along travel
    double smin, smid;
    Vec3 t_new = smallest_right_singular(f.Dm(mu), &smin, &smid);
    if (t_new.dot(t) < 0) t_new = -t_new;
    // At a near-rank-1 point the two smallest singular vectors mix; keep
    // the previous direction to step across cleanly.
    if (smid > 1e-8 * (1.0 + smin)) t = t_new;

    Vec3 pred = mu + step * t;
    Vec3 nxt = pred;
    int iters = 0;
    bool ok = false;
    try {
      ok = correct(f, nxt, t, pred, opts, &iters);
    } catch (const Error&) {
      ok = false;
    }
    if (ok && (nxt - mu).norm() > 3.0 * step) ok = false;  // jumped branches
    if (!ok) {
      step *= 0.5;
      if (step < opts.min_step) break;
      continue;
    }

    // Frozen-frame branch-point test across the accepted segment.
    {
      const Vec3 aux = std::abs(t[0]) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
      Eigen::Matrix<double, 3, 2> Useg;
      Useg.col(0) = (aux - aux.dot(t) * t).normalized();
      Useg.col(1) = t.cross(Useg.col(0));
      const double tau_a = branch_test(f, mu, Useg, t);
      const double tau_b = branch_test(f, nxt, Useg, t);
      if (tau_a * tau_b < 0.0) {
        // Bisect along the segment chord, re-correcting each midpoint.
        Vec3 lo = mu, hi = nxt;
        double flo = tau_a;
        for (int bi = 0; bi < 60; ++bi) {
          Vec3 mid_pred = 0.5 * (lo + hi);
          Vec3 mid = mid_pred;
          if (!correct(f, mid, t, mid_pred, opts)) break;
          const double fm = branch_test(f, mid, Useg, t);
          if (flo * fm <= 0.0)
            hi = mid;
          else {
            lo = mid;
            flo = fm;
          }
          if ((hi - lo).norm() < 1e-11 * (1.0 + mu.norm())) break;
        }
        // The frozen frame can rotate past the Jacobian's left null space
        // and flip the sign without any rank drop; accept the point only if
        // the second singular value genuinely collapses there.
        const Vec3 cand = 0.5 * (lo + hi);
        Eigen::JacobiSVD<Mat3> svd(f.Dm(cand));
        const double s0 = svd.singularValues()(0);
        const double s1 = svd.singularValues()(1);
        if (s1 <= 1e-4 * (s0 + f.res_scale(cand)))
          branch_pts.push_back(cand);
      }
      tau_prev = tau_b;
      (void)tau_prev;
    }

    if (nxt.norm() > window) {
      // land on the window boundary
      double lo = 0.0, hi_t = 1.0;
      Vec3 inside = mu, final_pt = nxt;
      for (int bi = 0; bi < 60; ++bi) {
        const double mid = 0.5 * (lo + hi_t);
        Vec3 cand_pred = mu + mid * (nxt - mu);
        Vec3 cand = cand_pred;
        if (!correct(f, cand, t, cand_pred, opts)) break;
        if (cand.norm() > window) {
          hi_t = mid;
          final_pt = cand;
        } else {
          lo = mid;
          inside = cand;
        }
      }
      (void)inside;
      out.push_back(final_pt);
      return;
    }

    out.push_back(nxt);
    mu = nxt;
    ++since_start;
    if (iters <= 3) step = std::min(step * 1.4, max_step);

    if (since_start > 12 && (mu - loop_probe).norm() < 0.9 * step) {
      *closed = true;
      return;
    }
  }
}

}  // namespace

std::vector<REBranch> re_set_general(const ReducedSystem& sys,
                                     double window_radius,
                                     const ContinuationOptions& opts_in) {
  if (!(window_radius > 0.0))
    throw ConfigError("window radius must be positive");
  ContinuationOptions opts = opts_in;
  const double R = window_radius;
  const double max_step = opts.max_step > 0 ? opts.max_step : R / 200.0;

  Field f(sys);
  std::vector<RawBranch> raw;
  std::vector<Vec3> pending_switch_points;

  auto on_existing = [&](const Vec3& p, double tol) {
    for (const auto& rb : raw)
      if (dist_to_polyline(p, rb.pts) < tol) return true;
    return false;
  };

  auto trace_from = [&](const Vec3& p0, const Vec3& t0) {
    RawBranch rb;
    std::vector<Vec3> fwd, bwd;
    bool closed_f = false, closed_b = false;
    trace_direction(f, p0, t0, R, opts, max_step, fwd, rb.branch_points,
                    &closed_f, p0);
    if (!closed_f)
      trace_direction(f, p0, -t0, R, opts, max_step, bwd, rb.branch_points,
                      &closed_b, p0);
    rb.pts.reserve(bwd.size() + fwd.size() + 1);
    for (auto it = bwd.rbegin(); it != bwd.rend(); ++it) rb.pts.push_back(*it);
    rb.pts.push_back(p0);
    for (const auto& p : fwd) rb.pts.push_back(p);
    rb.closed_loop = closed_f || closed_b;
    return rb;
  };

  auto adopt = [&](RawBranch&& rb) {
    if (rb.pts.size() < 3) return false;
    // Discard if it retraces an existing branch.
    int overlap = 0;
    for (const auto& p : rb.pts)
      if (on_existing(p, 0.35 * max_step)) ++overlap;
    if (overlap > static_cast<int>(0.8 * rb.pts.size())) return false;
    for (const auto& bp : rb.branch_points) pending_switch_points.push_back(bp);
    raw.push_back(std::move(rb));
    return true;
  };

  // --- seed at the origin (always a relative equilibrium) ---
  try {
    const Vec3 xi = f.tracker.grad_h(Vec3::Zero());
    if (xi.norm() > 1e-10) {
      adopt(trace_from(Vec3::Zero(), xi.normalized()));
    } else {
      // organizing centre: the quadratic part rules; seed along its axes
      const Mat3 H = f.tracker.hess_h(Vec3::Zero());
      Eigen::SelfAdjointEigenSolver<Mat3> es(H);
      for (int k = 0; k < 3; ++k) {
        const Vec3 dir = es.eigenvectors().col(k);
        for (const double frac : {0.2, 0.5, 0.8}) {
          for (const double sgn : {1.0, -1.0}) {
            Vec3 p = sgn * frac * R * dir;
            if (on_existing(p, 0.35 * max_step)) continue;
            if (!seed_solve(f, p, casimir(p), opts)) continue;
            if (p.norm() > R || on_existing(p, 0.35 * max_step)) continue;
            const Vec3 t0 = smallest_right_singular(f.Dm(p));
            adopt(trace_from(p, t0));
          }
        }
      }
    }
  } catch (const Error&) {
    // fall through to the directional seeds
  }

  // --- directional sphere seeds ---
  std::vector<Vec3> dirs;
  for (int i = 0; i < 3; ++i) {
    dirs.push_back(Vec3::Unit(i));
    dirs.push_back(-Vec3::Unit(i));
  }
  if (opts.sphere_seeds > 6) {
    for (int sx : {-1, 1})
      for (int sy : {-1, 1}) {
        dirs.push_back(Vec3(sx, sy, 0).normalized());
        dirs.push_back(Vec3(sx, 0, sy).normalized());
        dirs.push_back(Vec3(0, sx, sy).normalized());
      }
    for (int sx : {-1, 1})
      for (int sy : {-1, 1})
        for (int sz : {-1, 1})
          dirs.push_back(Vec3(sx, sy, sz).normalized());
  }
  // The outermost shell sits on the window sphere itself: every branch that
  // reaches into the window crosses it, so grazing arcs whose closest
  // approach lies between the inner shells and the boundary are still found.
  for (const double frac : {0.15, 0.35, 0.55, 0.75, 0.95, 1.0}) {
    for (const auto& d : dirs) {
      Vec3 p = frac * R * d;
      const double j0 = casimir(p);
      try {
        f.tracker.reset(sys.base_shape());
        if (!seed_solve(f, p, j0, opts)) continue;
      } catch (const Error&) {
        continue;
      }
      if (p.norm() > R * (1.0 + 1e-9) || on_existing(p, 0.35 * max_step))
        continue;
      double smin, smid;
      const Vec3 t0 = smallest_right_singular(f.Dm(p), &smin, &smid);
      if (smid < 1e-9 * (1.0 + smin)) continue;  // seeded onto a crossing
      adopt(trace_from(p, t0));
    }
  }

  // --- branch switching at located crossings ---
  if (opts.switch_branches) {
    std::vector<Vec3> todo = std::move(pending_switch_points);
    pending_switch_points.clear();
    for (size_t qi = 0; qi < todo.size() && qi < 64; ++qi) {
      const Vec3 bp = todo[qi];
      Eigen::JacobiSVD<Mat3> svd(f.Dm(bp), Eigen::ComputeFullV);
      // Near-null plane: the two smallest right singular directions.
      const Vec3 v2 = svd.matrixV().col(1);
      const Vec3 v3 = svd.matrixV().col(2);
      for (const Vec3& w : {v2, v3}) {
        for (const double sgn : {1.0, -1.0}) {
          Vec3 p = bp + sgn * 2.0 * max_step * w;
          f.tracker.reset(sys.base_shape());
          bool ok = false;
          try {
            ok = correct(f, p, w, p, opts);
          } catch (const Error&) {
            ok = false;
          }
          if (!ok) continue;
          if (p.norm() > R) continue;
          if (on_existing(p, 0.35 * max_step)) continue;
          double smin, smid;
          const Vec3 t0 = smallest_right_singular(f.Dm(p), &smin, &smid);
          if (smid < 1e-9 * (1.0 + smin)) continue;
          RawBranch rb = trace_from(p, t0);
          if (adopt(std::move(rb))) {
            for (const auto& nbp : raw.back().branch_points)
              if (qi + 1 < 64) todo.push_back(nbp);
          }
        }
      }
    }
    pending_switch_points = std::move(todo);
  }

  // --- package ---
  std::vector<Vec3> all_branch_pts;
  for (const auto& rb : raw)
    for (const auto& bp : rb.branch_points) {
      bool dup = false;
      for (const auto& q : all_branch_pts)
        if ((q - bp).norm() < 1e-6 * (1.0 + R)) dup = true;
      if (!dup) all_branch_pts.push_back(bp);
    }
  const auto near_branch_point = [&](const Vec3& p, double tol) -> const Vec3* {
    for (const auto& q : all_branch_pts)
      if ((q - p).norm() < tol) return &q;
    return nullptr;
  };

  std::vector<REBranch> branches;
  for (auto& rb : raw) {
    REBranch br;
    br.kind = BranchKind::Curve;
    SliceTracker tr(sys);
    for (const auto& p : rb.pts) {
      BranchSample s;
      s.mu = p;
      s.j = casimir(p);
      s.h = tr.value_h(p);
      const Vec3 g = tr.grad_h(p);
      s.lambda = p.squaredNorm() > 1e-24 ? multiplier_at(g, p) : kInf;
      if (p.norm() < 1e-9 * R) br.contains_origin = true;
      br.samples.push_back(s);
    }
    if (!br.samples.empty()) {
      br.lambda_begin = br.samples.front().lambda;
      br.lambda_end = br.samples.back().lambda;
    }
    // Every located transversal crossing the branch passes through gets a
    // pitchfork marker, including branches reached by switching.
    for (const auto& bp : all_branch_pts) {
      if (dist_to_polyline(bp, rb.pts) > 0.35 * max_step) continue;
      bool dup = false;
      for (const auto& mk : br.markers)
        if ((mk.mu - bp).norm() < 1e-6 * (1.0 + R)) dup = true;
      if (dup) continue;
      SliceTracker tr2(sys);
      const double lam = multiplier_at(tr2.grad_h(bp), bp);
      br.markers.push_back({BifurcationKind::Pitchfork, lam, bp, casimir(bp)});
    }
    // Interior j-minima are fold (saddle-centre) candidates unless they sit
    // on a crossing.
    for (size_t i = 1; i + 1 < br.samples.size(); ++i) {
      const double j0 = br.samples[i].j;
      if (j0 < br.samples[i - 1].j && j0 < br.samples[i + 1].j &&
          br.samples[i].mu.norm() > 1e-9 * R &&
          !near_branch_point(br.samples[i].mu, 0.35 * max_step))
        br.markers.push_back({BifurcationKind::SaddleCentre,
                              br.samples[i].lambda, br.samples[i].mu, j0});
    }
    if (br.contains_origin)
      br.markers.push_back(
          {BifurcationKind::ZeroMomentum, kInf, Vec3::Zero(), 0.0});
    branches.push_back(std::move(br));
  }

  std::sort(branches.begin(), branches.end(),
            [](const REBranch& a, const REBranch& b) {
              if (a.contains_origin != b.contains_origin)
                return a.contains_origin;
              const double ja = a.min_j(), jb = b.min_j();
              if (ja != jb) return ja < jb;
              if (a.samples.empty() || b.samples.empty())
                return a.samples.size() > b.samples.size();
              const Vec3& pa = a.samples.front().mu;
              const Vec3& pb = b.samples.front().mu;
              for (int i = 0; i < 3; ++i)
                if (pa[i] != pb[i]) return pa[i] < pb[i];
              return false;
            });
  for (size_t i = 0; i < branches.size(); ++i)
    branches[i].id = static_cast<int>(i);
  return branches;
}

}  // namespace releq
