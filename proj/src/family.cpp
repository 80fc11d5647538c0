#include "releq/family.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace releq {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

int sign_with_tol(double v, double tol) {
  if (std::abs(v) <= tol) return 0;
  return v > 0 ? 1 : -1;
}

}  // namespace

Stratum classify_stratum(const UnfoldingParam& alpha, double zero_tol) {
  if (!all_finite(alpha))
    throw ConfigError("unfolding parameter must be finite");
  Stratum s;
  for (int i = 0; i < 3; ++i) s.sign[i] = sign_with_tol(alpha[i], zero_tol);
  switch (s.zero_count()) {
    case 3: s.tag = StratumTag::Delta0; break;
    case 2: s.tag = StratumTag::Delta1; break;
    case 1: s.tag = StratumTag::Delta2; break;
    default: s.tag = StratumTag::Generic; break;
  }
  return s;
}

namespace detail {

double sphere_radius_profile(const QuadraticModel& m,
                             const UnfoldingParam& alpha, double lambda) {
  return casimir(point_from_multiplier(m, alpha, lambda));
}

// d/dlambda of the profile: -sum alpha_i^2 / (lambda - 2 m_i)^3.
static double profile_derivative(const QuadraticModel& m,
                                 const UnfoldingParam& alpha, double lambda) {
  double d = 0.0;
  const Vec3 coef = m.coeffs();
  for (int i = 0; i < 3; ++i) {
    if (alpha[i] == 0.0) continue;
    const double den = lambda - 2 * coef[i];
    d -= alpha[i] * alpha[i] / (den * den * den);
  }
  return d;
}

static double profile_second_derivative(const QuadraticModel& m,
                                        const UnfoldingParam& alpha,
                                        double lambda) {
  double d = 0.0;
  const Vec3 coef = m.coeffs();
  for (int i = 0; i < 3; ++i) {
    if (alpha[i] == 0.0) continue;
    const double den = lambda - 2 * coef[i];
    const double den2 = den * den;
    d += 3 * alpha[i] * alpha[i] / (den2 * den2);
  }
  return d;
}

double bounded_arc_j_minimizer(const QuadraticModel& m,
                               const UnfoldingParam& alpha, double lo,
                               double hi) {
  // The derivative runs from -inf at lo+ to +inf at hi- and is strictly
  // increasing, so the root is unique. Bracket, then safeguarded Newton.
  double delta = 0.25 * (hi - lo);
  double a = lo + delta, b = hi - delta;
  for (int k = 0; k < 200 && profile_derivative(m, alpha, a) >= 0.0; ++k) {
    delta *= 0.5;
    a = lo + delta;
  }
  delta = 0.25 * (hi - lo);
  for (int k = 0; k < 200 && profile_derivative(m, alpha, b) <= 0.0; ++k) {
    delta *= 0.5;
    b = hi - delta;
  }
  if (!(a < b)) throw NoConvergence("could not bracket arc minimum");

  double x = 0.5 * (a + b);
  for (int it = 0; it < 200; ++it) {
    const double f = profile_derivative(m, alpha, x);
    if (f > 0.0)
      b = x;
    else if (f < 0.0)
      a = x;
    else
      return x;
    const double fpp = profile_second_derivative(m, alpha, x);
    double x_next = x - f / fpp;
    if (!(x_next > a && x_next < b)) x_next = 0.5 * (a + b);
    if (std::abs(x_next - x) <= 1e-15 * std::max(1.0, std::abs(x))) {
      x = x_next;
      break;
    }
    x = x_next;
  }
  return x;
}

}  // namespace detail

std::vector<PitchforkPoint> pitchfork_points(const QuadraticModel& m,
                                             const UnfoldingParam& alpha,
                                             double zero_tol) {
  const Stratum st = classify_stratum(alpha, zero_tol);
  std::vector<PitchforkPoint> out;
  if (st.tag != StratumTag::Delta1 && st.tag != StratumTag::Delta2)
    return out;
  const Vec3 coef = m.coeffs();
  for (int i = 0; i < 3; ++i) {
    if (st.sign[i] != 0) continue;  // lines hang off vanishing components
    PitchforkPoint p;
    p.line_axis = i;
    p.lambda = 2 * coef[i];
    for (int jx = 0; jx < 3; ++jx)
      p.mu[jx] = (jx == i) ? 0.0
                           : alpha[jx] / (2 * coef[i] - 2 * coef[jx]);
    out.push_back(p);
  }
  return out;
}

std::vector<SaddleCentrePoint> saddle_centre_points(
    const QuadraticModel& m, const UnfoldingParam& alpha, double zero_tol) {
  const Stratum st = classify_stratum(alpha, zero_tol);
  if (st.tag != StratumTag::Generic)
    throw WrongStratum(
        "saddle-centre points require a generic unfolding parameter, got " +
        st.label());
  std::array<double, 3> poles = {2 * m.a, 2 * m.b, 2 * m.c};
  std::sort(poles.begin(), poles.end());
  std::vector<SaddleCentrePoint> out;
  for (int k = 0; k < 2; ++k) {
    const double lam =
        detail::bounded_arc_j_minimizer(m, alpha, poles[k], poles[k + 1]);
    SaddleCentrePoint sc;
    sc.lambda = lam;
    sc.mu = point_from_multiplier(m, alpha, lam);
    sc.j = casimir(sc.mu);
    out.push_back(sc);
  }
  return out;
}

std::optional<Vec3> family_equilibrium(const QuadraticModel& m,
                                       const UnfoldingParam& alpha) {
  const Vec3 coef = m.coeffs();
  if (coef[0] == 0.0 || coef[1] == 0.0 || coef[2] == 0.0) return std::nullopt;
  return Vec3(-alpha[0] / (2 * m.a), -alpha[1] / (2 * m.b),
              -alpha[2] / (2 * m.c));
}

int count_re_on_sphere(const QuadraticModel& m, const UnfoldingParam& alpha,
                       double j0, double zero_tol) {
  if (j0 < 0.0) return 0;
  if (j0 == 0.0) return 1;  // the zero-momentum equilibrium
  const Stratum st = classify_stratum(alpha, zero_tol);
  const Vec3 coef = m.coeffs();

  std::vector<double> poles;
  for (int i = 0; i < 3; ++i)
    if (st.sign[i] != 0) poles.push_back(2 * coef[i]);
  std::sort(poles.begin(), poles.end());

  int count = 0;
  if (!poles.empty()) count += 2;  // the arc through the origin
  for (size_t k = 0; k + 1 < poles.size(); ++k) {
    const double lam =
        detail::bounded_arc_j_minimizer(m, alpha, poles[k], poles[k + 1]);
    const double jmin = detail::sphere_radius_profile(m, alpha, lam);
    if (j0 > jmin)
      count += 2;
    else if (j0 == jmin)
      count += 1;
  }
  for (int i = 0; i < 3; ++i) {
    if (st.sign[i] != 0) continue;
    double rho2 = 0.0;
    for (int jx = 0; jx < 3; ++jx) {
      if (jx == i) continue;
      const double off = alpha[jx] / (2 * coef[i] - 2 * coef[jx]);
      rho2 += off * off;
    }
    const double jline = 0.5 * rho2;
    if (j0 > jline)
      count += 2;
    else if (j0 == jline)
      count += 1;
  }
  return count;
}

// ---------------------------------------------------------------------------
// Branch enumeration
// ---------------------------------------------------------------------------

namespace {

struct Special {
  double t;
  BifurcationKind kind;
  Vec3 mu;
  double lambda;
};

struct CurveFns {
  std::function<Vec3(double)> mu;
  std::function<Vec3(double)> dmu;
  std::function<Vec3(double)> d2mu;
  std::function<double(double)> lambda_of;
};

// Walk outward from t0 (exclusive) towards t_limit, appending samples to
// `out`, landing exactly on each special parameter and stopping at the
// window boundary |mu| = R (final sample bisected onto the boundary).
void walk_direction(const CurveFns& f, double t0, double t_limit, double dir,
                    double window, double ds, double sag_tol, int max_samples,
                    const std::vector<Special>& specials,
                    std::vector<BranchSample>& out,
                    std::vector<BifurcationMarker>* markers) {
  double t = t0;
  int produced = 0;
  while (produced++ < max_samples) {
    const Vec3 d1 = f.dmu(t);
    const Vec3 d2 = f.d2mu(t);
    double dt = ds / std::max(d1.norm(), 1e-12);
    const double curv = d2.norm();
    if (curv > 0.0) dt = std::min(dt, std::sqrt(8.0 * sag_tol / curv));
    if (std::isfinite(t_limit))
      dt = std::min(dt, 0.45 * std::abs(t_limit - t));
    dt = std::max(dt, 1e-13 * std::max(1.0, std::abs(t)));
    double t_next = t + dir * dt;

    // Land exactly on the first special point in the step, if any.
    const Special* hit = nullptr;
    for (const auto& sp : specials) {
      const double rel = dir * (sp.t - t);
      if (rel > 1e-14 * std::max(1.0, std::abs(t)) &&
          dir * (t_next - sp.t) >= 0.0) {
        if (!hit || dir * (sp.t - hit->t) < 0.0) hit = &sp;
      }
    }
    if (hit) t_next = hit->t;

    Vec3 mu_next = f.mu(t_next);
    if (mu_next.norm() > window) {
      // Bisect the window crossing for a clean endpoint on |mu| = R.
      double lo = t, hi = t_next;
      for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (f.mu(mid).norm() > window)
          hi = mid;
        else
          lo = mid;
        if (std::abs(hi - lo) <= 1e-15 * std::max(1.0, std::abs(hi))) break;
      }
      BranchSample s;
      s.lambda = f.lambda_of(hi);
      s.mu = f.mu(hi);
      s.j = casimir(s.mu);
      out.push_back(s);
      return;
    }

    BranchSample s;
    s.lambda = f.lambda_of(t_next);
    s.mu = mu_next;
    s.j = casimir(mu_next);
    if (hit) {
      s.mu = hit->mu;  // exact coordinates at the special point
      s.j = casimir(s.mu);
      s.lambda = std::isfinite(hit->lambda) ? hit->lambda : s.lambda;
      s.at_bifurcation = hit->kind != BifurcationKind::ZeroMomentum;
      if (markers)
        markers->push_back({hit->kind, hit->lambda, hit->mu, s.j});
    }
    out.push_back(s);
    t = t_next;
    if (std::isfinite(t_limit) &&
        std::abs(t_limit - t) <= 1e-14 * std::max(1.0, std::abs(t_limit)))
      return;  // arc end reached without leaving the window (defensive)
  }
}

// Assemble a full branch from an interior anchor: left walk (reversed) +
// anchor + right walk. h values are filled in afterwards.
std::vector<BranchSample> walk_both(const CurveFns& f, double t_anchor,
                                    double t_lo, double t_hi, double window,
                                    double ds, double sag_tol,
                                    int max_samples,
                                    std::vector<Special> specials,
                                    std::vector<BifurcationMarker>* markers) {
  std::sort(specials.begin(), specials.end(),
            [](const Special& a, const Special& b) { return a.t < b.t; });
  std::vector<BranchSample> left, right;
  walk_direction(f, t_anchor, t_lo, -1.0, window, ds, sag_tol, max_samples,
                 specials, left, markers);
  walk_direction(f, t_anchor, t_hi, +1.0, window, ds, sag_tol, max_samples,
                 specials, right, markers);

  std::vector<BranchSample> all;
  all.reserve(left.size() + right.size() + 1);
  for (auto it = left.rbegin(); it != left.rend(); ++it) all.push_back(*it);
  BranchSample anchor;
  anchor.lambda = f.lambda_of(t_anchor);
  anchor.mu = f.mu(t_anchor);
  anchor.j = casimir(anchor.mu);
  all.push_back(anchor);
  for (const auto& s : right) all.push_back(s);
  return all;
}

}  // namespace

std::vector<REBranch> enumerate_branches(const QuadraticModel& m,
                                         const UnfoldingParam& alpha,
                                         double window_radius,
                                         const BranchOptions& opts) {
  if (!(window_radius > 0.0) || !std::isfinite(window_radius))
    throw ConfigError("window radius must be positive and finite");
  const Stratum st = classify_stratum(alpha, opts.zero_tol);
  const Vec3 coef = m.coeffs();
  const double R = window_radius;
  const double ds =
      opts.target_spacing > 0 ? opts.target_spacing : R / 150.0;
  const double sag = opts.sag_tol > 0 ? opts.sag_tol : 2e-6 * R;
  const int cap = opts.max_samples_per_branch;

  // Work with the exactly-zeroed parameter so branch geometry is clean.
  UnfoldingParam al = alpha;
  for (int i = 0; i < 3; ++i)
    if (st.sign[i] == 0) al[i] = 0.0;

  std::vector<double> poles;  // genuine poles: nonzero numerator
  for (int i = 0; i < 3; ++i)
    if (st.sign[i] != 0) poles.push_back(2 * coef[i]);
  std::sort(poles.begin(), poles.end());

  const auto pitchforks = pitchfork_points(m, al, 0.0);

  std::vector<REBranch> branches;

  // --- arc through the origin (wraps lambda = infinity) ---
  if (!poles.empty()) {
    // Moebius chart w = 1/(ref - lambda) maps the arc to a w-interval
    // containing 0 (= the origin, lambda = infinity). ref must lie in the
    // complementary closed arc: the middle pole (or the single pole).
    const double ref =
        poles.size() == 3 ? poles[1]
                          : (poles.size() == 2 ? 0.5 * (poles[0] + poles[1])
                                               : poles[0]);
    Vec3 q;  // mu_i(w) = al_i w / (q_i w - 1)
    for (int i = 0; i < 3; ++i) q[i] = ref - 2 * coef[i];

    // Components with a vanishing numerator are identically zero; evaluating
    // the quotient there would hit 0/0 where q_i w = 1.
    CurveFns f;
    f.mu = [al, q](double w) {
      Vec3 mu;
      for (int i = 0; i < 3; ++i)
        mu[i] = al[i] == 0.0 ? 0.0 : al[i] * w / (q[i] * w - 1.0);
      return mu;
    };
    f.dmu = [al, q](double w) {
      Vec3 d;
      for (int i = 0; i < 3; ++i) {
        const double den = q[i] * w - 1.0;
        d[i] = al[i] == 0.0 ? 0.0 : -al[i] / (den * den);
      }
      return d;
    };
    f.d2mu = [al, q](double w) {
      Vec3 d;
      for (int i = 0; i < 3; ++i) {
        const double den = q[i] * w - 1.0;
        d[i] = al[i] == 0.0 ? 0.0 : 2.0 * al[i] * q[i] / (den * den * den);
      }
      return d;
    };
    f.lambda_of = [ref](double w) {
      return w == 0.0 ? kInf : ref - 1.0 / w;
    };

    const double pole_hi = poles.back(), pole_lo = poles.front();
    const double w_lo =
        (ref == pole_hi) ? -kInf : 1.0 / (ref - pole_hi);  // negative side
    const double w_hi = (ref == pole_lo) ? kInf : 1.0 / (ref - pole_lo);

    std::vector<Special> specials;
    specials.push_back({0.0, BifurcationKind::ZeroMomentum, Vec3::Zero(),
                        kInf});
    for (const auto& pf : pitchforks) {
      const double lam = pf.lambda;
      if (lam == ref) continue;  // not reachable in this chart
      const double w = 1.0 / (ref - lam);
      if (w > w_lo && w < w_hi && pf.mu.norm() <= R)
        specials.push_back({w, BifurcationKind::Pitchfork, pf.mu, lam});
    }

    REBranch br;
    br.kind = BranchKind::Curve;
    br.contains_origin = true;
    br.wraps_infinity = true;
    br.lambda_begin = pole_hi;
    br.lambda_end = pole_lo;
    br.samples = walk_both(f, 0.0, w_lo, w_hi, R, ds, sag, cap, specials,
                           &br.markers);
    // The anchor w = 0 is the zero-momentum point itself; the walkers only
    // land on specials strictly ahead of the anchor, so record it here.
    br.markers.push_back(
        {BifurcationKind::ZeroMomentum, kInf, Vec3::Zero(), 0.0});
    branches.push_back(std::move(br));
  }

  // --- bounded arcs between consecutive poles ---
  for (size_t k = 0; k + 1 < poles.size(); ++k) {
    const double lo = poles[k], hi = poles[k + 1];
    const double lam_min = detail::bounded_arc_j_minimizer(m, al, lo, hi);
    const Vec3 mu_min = point_from_multiplier(m, al, lam_min);
    if (mu_min.norm() > R) continue;  // arc entirely outside the window

    CurveFns f;
    const QuadraticModel mm = m;
    f.mu = [mm, al](double lam) { return point_from_multiplier(mm, al, lam); };
    f.dmu = [al, coef](double lam) {
      Vec3 d;
      for (int i = 0; i < 3; ++i) {
        const double den = lam - 2 * coef[i];
        d[i] = den == 0.0 ? 0.0 : -al[i] / (den * den);
      }
      return d;
    };
    f.d2mu = [al, coef](double lam) {
      Vec3 d;
      for (int i = 0; i < 3; ++i) {
        const double den = lam - 2 * coef[i];
        d[i] = den == 0.0 ? 0.0 : 2.0 * al[i] / (den * den * den);
      }
      return d;
    };
    f.lambda_of = [](double lam) { return lam; };

    std::vector<Special> specials;
    specials.push_back({lam_min, BifurcationKind::SaddleCentre, mu_min,
                        lam_min});
    for (const auto& pf : pitchforks)
      if (pf.lambda > lo && pf.lambda < hi && pf.mu.norm() <= R)
        specials.push_back({pf.lambda, BifurcationKind::Pitchfork, pf.mu,
                            pf.lambda});

    REBranch br;
    br.kind = BranchKind::Curve;
    br.lambda_begin = lo;
    br.lambda_end = hi;
    // Anchor slightly off the minimum so the walker lands on it as a
    // special point and records the marker.
    const double anchor = lam_min + 1e-3 * (hi - lam_min);
    br.samples = walk_both(f, anchor, lo, hi, R, ds, sag, cap, specials,
                           &br.markers);
    branches.push_back(std::move(br));
  }

  // --- axis-parallel lines at poles with vanishing numerator ---
  for (int i = 0; i < 3; ++i) {
    if (st.sign[i] != 0) continue;
    Vec3 rho = Vec3::Zero();
    for (int jx = 0; jx < 3; ++jx)
      if (jx != i) rho[jx] = al[jx] / (2 * coef[i] - 2 * coef[jx]);
    if (rho.norm() >= R) continue;  // line outside the window
    const double t_max = std::sqrt(R * R - rho.squaredNorm());
    const double lam = 2 * coef[i];

    REBranch br;
    br.kind = BranchKind::Line;
    br.line_axis = i;
    br.lambda_begin = br.lambda_end = lam;
    br.contains_origin = rho.norm() == 0.0;

    const int half = std::max(2, (int)std::ceil(t_max / ds));
    for (int k = -half; k <= half; ++k) {
      BranchSample s;
      const double t = t_max * (double)k / half;
      s.mu = rho;
      s.mu[i] = t;
      s.lambda = lam;
      s.j = casimir(s.mu);
      if (k == 0) {
        s.at_bifurcation = !br.contains_origin;
        br.markers.push_back({br.contains_origin
                                  ? BifurcationKind::ZeroMomentum
                                  : BifurcationKind::Pitchfork,
                              br.contains_origin ? kInf : lam, s.mu, s.j});
      }
      br.samples.push_back(s);
    }
    branches.push_back(std::move(br));
  }

  for (auto& br : branches) {
    for (auto& s : br.samples) s.h = family_value(m, al, s.mu);
    for (auto& mk : br.markers) {
      // markers store j of the exact point
      mk.j = casimir(mk.mu);
    }
  }
  for (size_t i = 0; i < branches.size(); ++i)
    branches[i].id = static_cast<int>(i);
  return branches;
}

std::vector<EMCurve> em_discriminant(const QuadraticModel& m,
                                     const UnfoldingParam& alpha,
                                     double window_radius,
                                     const BranchOptions& opts) {
  const auto branches = enumerate_branches(m, alpha, window_radius, opts);
  std::vector<EMCurve> curves;
  curves.reserve(branches.size());
  for (const auto& br : branches) {
    EMCurve c;
    c.branch_id = br.id;
    c.points.reserve(br.samples.size());
    for (const auto& s : br.samples)
      c.points.emplace_back(s.j, s.h);
    for (const auto& mk : br.markers) {
      const Eigen::Vector2d img(mk.j, family_value(m, alpha, mk.mu));
      if (mk.kind == BifurcationKind::SaddleCentre)
        c.folds.push_back(img);
      else if (mk.kind == BifurcationKind::Pitchfork)
        c.crossings.push_back(img);
    }
    curves.push_back(std::move(c));
  }
  return curves;
}

}  // namespace releq
