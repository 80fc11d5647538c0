// End-to-end acceptance checks for the relative-equilibrium toolkit.
// Each criterion prints exactly one PASS/FAIL line; the exit code is the
// number of failures.

#include "releq/family.hpp"
#include "releq/io.hpp"
#include "releq/reduction.hpp"
#include "releq/rotors.hpp"
#include "releq/stability.hpp"
#include "releq/versality.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace releq;

namespace {

// Pinned tolerances.
constexpr double kTolPitchfork = 1e-8;   // crossing coordinates
constexpr double kTolJump = 1e-8;        // staircase jump location
constexpr double kTolEigRel = 1e-6;      // free-body exponent, relative
constexpr double kTolDrift = 1e-8;       // fixed-point drift over T = 100
constexpr double kTolEnergy = 1e-8;      // energy conservation
constexpr double kTolCasimir = 1e-10;    // momentum-sphere conservation
constexpr double kGrowthRel = 0.05;      // measured vs predicted exponent
constexpr double kTolHausdorff = 1e-6;   // continuation vs closed form
constexpr double kTolSimultaneous = 1e-10;  // coefficient-gap equality

const QuadraticModel kModel{3.0, 2.0, 1.0};

std::mt19937 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937(seq);
}

double dist_to_polyline(const Vec3& p, const std::vector<BranchSample>& pts) {
  double best = 1e300;
  for (size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec3 a = pts[i].mu, d = pts[i + 1].mu - a;
    const double len2 = d.squaredNorm();
    double t = len2 > 0 ? (p - a).dot(d) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    best = std::min(best, (p - (a + t * d)).norm());
  }
  return best;
}

double one_sided_hausdorff(const std::vector<REBranch>& from,
                           const std::vector<REBranch>& to) {
  double worst = 0.0;
  for (const auto& bf : from)
    for (const auto& s : bf.samples) {
      double best = 1e300;
      for (const auto& bt : to)
        best = std::min(best, dist_to_polyline(s.mu, bt.samples));
      worst = std::max(worst, best);
    }
  return worst;
}

// ---------------------------------------------------------------------------
// 1. Crossing locations for the two single-parameter deformations.
// ---------------------------------------------------------------------------
bool criterion_pitchfork_locations(std::string& detail) {
  auto match = [](const std::vector<PitchforkPoint>& pts,
                  std::vector<Vec3> expect) {
    if (pts.size() != expect.size()) return false;
    for (const auto& p : pts) {
      bool hit = false;
      for (auto it = expect.begin(); it != expect.end(); ++it)
        if ((p.mu - *it).norm() <= kTolPitchfork) {
          expect.erase(it);
          hit = true;
          break;
        }
      if (!hit) return false;
    }
    return expect.empty();
  };

  const auto pf_z = pitchfork_points(kModel, Vec3(0, 0, 2));
  const bool z_ok =
      match(pf_z, {Vec3(0, 0, 1), Vec3(0, 0, 0.5)});

  const auto pf_y = pitchfork_points(kModel, Vec3(0, 2, 0));
  const bool y_ok = match(pf_y, {Vec3(0, -1, 0), Vec3(0, 1, 0)}) &&
                    pf_y.size() == 2 &&
                    pf_y[0].mu[1] * pf_y[1].mu[1] < 0.0;

  std::ostringstream ss;
  ss << "axis-3 crossings at z = 0.5, 1 and axis-2 crossings at y = -1, 1 "
     << (z_ok && y_ok ? "recovered" : "NOT recovered") << " within 1e-8";
  detail = ss.str();
  return z_ok && y_ok;
}

// ---------------------------------------------------------------------------
// 2. Branch topology for one representative of every stratum class.
// ---------------------------------------------------------------------------
bool criterion_branch_topology(std::string& detail) {
  std::ostringstream ss;
  bool ok = true;

  {  // Generic: three mutually disjoint branches, one through the origin.
    auto branches = enumerate_branches(kModel, Vec3(1, 2, 3), 4.0);
    ok = ok && branches.size() == 3;
    int through = 0;
    for (const auto& b : branches) through += b.contains_origin;
    ok = ok && through == 1;
    double min_gap = 1e300;
    for (size_t i = 0; i < branches.size(); ++i)
      for (size_t k = i + 1; k < branches.size(); ++k)
        for (const auto& s : branches[i].samples)
          min_gap =
              std::min(min_gap, dist_to_polyline(s.mu, branches[k].samples));
    ok = ok && min_gap > 1e-3;
    ss << "generic 3 branches (gap " << min_gap << ")";
  }

  {  // One vanishing component: a single crossing, for all three classes.
    for (const UnfoldingParam& alpha :
         {Vec3(0, 1, 2), Vec3(1, 0, 2), Vec3(1, 2, 0)}) {
      ok = ok && pitchfork_points(kModel, alpha).size() == 1;
      auto branches = enumerate_branches(kModel, alpha, 3.0);
      std::vector<Vec3> cross;
      for (const auto& b : branches)
        for (const auto& mk : b.markers)
          if (mk.kind == BifurcationKind::Pitchfork) {
            bool dup = false;
            for (const auto& c : cross) dup = dup || (c - mk.mu).norm() < 1e-6;
            if (!dup) cross.push_back(mk.mu);
          }
      ok = ok && cross.size() == 1;
    }
    ss << "; two-parameter strata: 1 crossing each";
  }

  {  // Two vanishing components: two crossings at distinct radii.
    const std::pair<QuadraticModel, Vec3> cases[] = {
        {kModel, Vec3(2, 0, 0)},
        {QuadraticModel(4, 2, 1), Vec3(0, 2, 0)},
        {kModel, Vec3(0, 0, 2)}};
    for (const auto& [m, alpha] : cases) {
      auto pf = pitchfork_points(m, alpha);
      ok = ok && pf.size() == 2;
      if (pf.size() == 2)
        ok = ok && std::abs(pf[0].mu.norm() - pf[1].mu.norm()) > 1e-9;
    }
    ss << "; one-parameter strata: 2 crossings, distinct radii";
  }

  {  // Organizing centre: the three coordinate axes.
    auto branches = enumerate_branches(kModel, Vec3(0, 0, 0), 2.0);
    ok = ok && branches.size() == 3;
    for (const auto& b : branches)
      ok = ok && b.kind == BranchKind::Line && b.contains_origin;
    ss << "; organizing centre: 3 axis lines";
  }

  detail = ss.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 3. Staircase of the per-sphere equilibrium count.
// ---------------------------------------------------------------------------
bool criterion_staircase(std::string& detail) {
  const UnfoldingParam alpha(1, 1, 1);
  auto sc = saddle_centre_points(kModel, alpha);
  if (sc.size() != 2) {
    detail = "expected two fold levels";
    return false;
  }
  double jlo = sc[0].j, jhi = sc[1].j;
  if (jlo > jhi) std::swap(jlo, jhi);

  const int below = count_re_on_sphere(kModel, alpha, jlo - kTolJump);
  const int mid = count_re_on_sphere(kModel, alpha, 0.5 * (jlo + jhi));
  const int above = count_re_on_sphere(kModel, alpha, jhi + kTolJump);

  std::ostringstream ss;
  ss << "counts " << below << " / " << mid << " / " << above
     << " around fold levels j = " << jlo << ", " << jhi
     << " (jumps located within 1e-8)";
  detail = ss.str();
  return below == 2 && mid == 4 && above == 6;
}

// ---------------------------------------------------------------------------
// 4. Momentum critical points on the equilibrium set: exactly three.
// ---------------------------------------------------------------------------
bool criterion_multiplicity_bound(std::string& detail) {
  auto rng = rng_for("acceptance-multiplicity");
  std::uniform_real_distribution<double> mag(0.25, 1.0);
  std::uniform_int_distribution<int> coin(0, 1);

  int worst = 0;
  for (int trial = 0; trial < 20; ++trial) {
    UnfoldingParam alpha;
    for (int i = 0; i < 3; ++i) alpha[i] = (coin(rng) ? 1 : -1) * mag(rng);
    auto sc = saddle_centre_points(kModel, alpha);
    if (sc.size() != 2) {
      detail = "fold inventory size " + std::to_string(sc.size());
      return false;
    }
    // Non-degeneracy: strict interior minima of the radius profile.
    for (const auto& p : sc) {
      const double d = 1e-5;
      const double lo = detail::sphere_radius_profile(kModel, alpha,
                                                      p.lambda - d);
      const double at = detail::sphere_radius_profile(kModel, alpha, p.lambda);
      const double hi = detail::sphere_radius_profile(kModel, alpha,
                                                      p.lambda + d);
      if (!(lo > at && hi > at)) {
        detail = "degenerate fold";
        return false;
      }
    }
    double R = 0.5;
    for (const auto& p : sc) R = std::max(R, std::sqrt(2.0 * p.j));
    R = 2.0 * R + 0.5;

    auto branches = enumerate_branches(kModel, alpha, R);
    int critical = 0;
    for (const auto& b : branches)
      for (const auto& mk : b.markers)
        critical += (mk.kind == BifurcationKind::SaddleCentre ||
                     mk.kind == BifurcationKind::ZeroMomentum);
    worst = std::max(worst, critical);
    if (critical != 3) {
      detail = "found " + std::to_string(critical) +
               " momentum-critical points on trial " + std::to_string(trial);
      return false;
    }
  }
  detail = "20 random generic deformations: 3 critical points each "
           "(bound 4 never exceeded)";
  return worst <= 4;
}

// ---------------------------------------------------------------------------
// 5. Stability pattern: classical free body plus the zero-momentum split.
// ---------------------------------------------------------------------------
bool criterion_stability_pattern(std::string& detail) {
  bool ok = true;
  std::ostringstream ss;

  ReducedSystem body = from_universal(kModel, UnfoldingParam::Zero());
  for (double m : {0.6, 1.0, 1.7}) {
    const StabilityInfo y = classify(body, Vec3(0, m, 0));
    const double expect =
        2.0 * m * std::sqrt((kModel.b - kModel.c) * (kModel.a - kModel.b));
    ok = ok && y.cls == StabilityClass::LinearlyUnstable;
    ok = ok && std::abs(y.max_real_part - expect) <= kTolEigRel * expect;
  }
  ok = ok && classify(body, Vec3(0.8, 0, 0)).cls ==
                 StabilityClass::LyapunovStable;
  ok = ok && classify(body, Vec3(0, 0, 0.8)).cls ==
                 StabilityClass::LyapunovStable;
  ss << "free body: middle axis unstable with exponent 2|mu|sqrt((b-c)(a-b)), "
        "extreme axes stable";

  // Zero-momentum split on a system with one shape pair and a generic
  // deformation: one class change, at the samples around mu = 0.
  ReducedSystem sys = from_polynomial(
      1, {{3.0, {2, 0, 0}, {0, 0}},
          {2.0, {0, 2, 0}, {0, 0}},
          {1.0, {0, 0, 2}, {0, 0}},
          {1.0, {1, 0, 0}, {0, 0}},
          {2.0, {0, 1, 0}, {0, 0}},
          {3.0, {0, 0, 1}, {0, 0}},
          {0.3, {1, 0, 0}, {1, 0}},
          {5.0, {0, 0, 0}, {2, 0}},
          {5.0, {0, 0, 0}, {0, 2}}});
  auto branches = re_set_general(sys, 0.5);
  const REBranch* through = nullptr;
  for (auto& b : branches)
    if (b.contains_origin) through = &b;
  if (through == nullptr || branches.size() != 1) {
    detail = "expected a single origin branch";
    return false;
  }
  REBranch annotated = *through;
  auto transitions = classify_branch(sys, annotated);
  ok = ok && transitions.size() == 1;
  if (transitions.size() == 1) {
    const int t = transitions[0];
    const double lo = annotated.samples[t].mu.norm();
    const double hi = annotated.samples[t + 1].mu.norm();
    ok = ok && std::min(lo, hi) <= 0.5 / 150.0;  // brackets the origin
  }
  ss << "; origin branch: " << transitions.size()
     << " class change at the zero-momentum pair";
  detail = ss.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 6. Direct integration: fixed points, conservation, growth rate.
// ---------------------------------------------------------------------------
bool criterion_dynamics(std::string& detail) {
  bool ok = true;
  std::ostringstream ss;

  struct Case {
    RotorBodySystem sys;
    QuadraticModel model;
    UnfoldingParam alpha;
    double radius;
  };
  const Case cases[] = {
      {RotorBodySystem::free_gyrostat(Vec3(0.5, 0.75, 7.0 / 6.0),
                                      Vec3(1.0 / 3.0, 0.5, 2.0 / 3.0),
                                      Vec3::Zero()),
       kModel, Vec3(0, 0, 0), 2.0},
      {RotorBodySystem::free_gyrostat(Vec3(0.25, 0.5, 1.0),
                                      Vec3(0.125, 0.25, 0.5),
                                      Vec3(0, 0, -3)),
       QuadraticModel(4, 2, 1), Vec3(0, 0, 6), 4.0}};

  double worst_drift = 0.0;
  int points = 0;
  for (const auto& c : cases) {
    BranchOptions opts;
    opts.target_spacing = c.radius / 60.0;
    auto branches = enumerate_branches(c.model, c.alpha, c.radius, opts);
    for (const auto& b : branches)
      for (const auto& s : b.samples) {
        const ReducedTrajectory traj =
            integrate_reduced(c.sys, s.mu, 100.0, 0.05, 3);
        worst_drift = std::max(worst_drift, traj.max_distance_from_start);
        ++points;
      }
  }
  ok = ok && worst_drift < kTolDrift;
  ss << points << " equilibrium points: max drift " << worst_drift
     << " over T = 100";

  // Conservation along a generic tumbling trajectory.
  const ReducedTrajectory tumble = integrate_reduced(
      cases[0].sys, Vec3(0.4, 0.7, -0.3), 100.0, 2e-4, 101);
  ok = ok && tumble.h_drift <= kTolEnergy && tumble.j_drift <= kTolCasimir;
  ss << "; tumbling drift h " << tumble.h_drift << ", j " << tumble.j_drift;

  // Measured exponential escape rate from the unstable middle axis.
  const ReducedTrajectory esc = integrate_reduced(
      cases[0].sys, Vec3(1e-8, 1.0, 0.0), 8.0, 1e-3, 2001);
  std::vector<double> ts, ys;
  for (size_t i = 0; i < esc.t.size(); ++i) {
    if (esc.t[i] < 1.5 || esc.t[i] > 5.0) continue;
    const double d = (esc.mu[i] - Vec3(0, 1, 0)).norm();
    if (d <= 0) continue;
    ts.push_back(esc.t[i]);
    ys.push_back(std::log(d));
  }
  double st = 0, sy = 0, stt = 0, sty = 0;
  for (size_t i = 0; i < ts.size(); ++i) {
    st += ts[i];
    sy += ys[i];
    stt += ts[i] * ts[i];
    sty += ts[i] * ys[i];
  }
  const double n = static_cast<double>(ts.size());
  const double slope = (n * sty - st * sy) / (n * stt - st * st);
  const double predicted = 2.0;  // 2 |mu| sqrt((a-b)(b-c)) at |mu| = 1
  ok = ok && std::abs(slope - predicted) <= kGrowthRel * predicted;
  ss << "; escape rate " << slope << " vs " << predicted;

  detail = ss.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 7. Continuation agrees with the closed-form parametrization.
// ---------------------------------------------------------------------------
bool criterion_oracle_equivalence(std::string& detail) {
  auto rng = rng_for("acceptance-equivalence");
  std::uniform_real_distribution<double> mag(0.4, 1.2);
  std::uniform_int_distribution<int> coin(0, 1);
  const double R = 1.0;

  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    UnfoldingParam alpha;
    for (int i = 0; i < 3; ++i) alpha[i] = (coin(rng) ? 1 : -1) * mag(rng);

    BranchOptions fine;
    fine.target_spacing = R / 2000.0;
    fine.sag_tol = 1e-9;
    auto closed = enumerate_branches(kModel, alpha, R, fine);

    ContinuationOptions copts;
    copts.max_step = R / 2000.0;
    copts.corrector_tol = 1e-13;
    copts.max_steps = 400000;
    auto traced = re_set_general(from_universal(kModel, alpha), R, copts);

    if (traced.size() != closed.size()) {
      detail = "branch count mismatch on trial " + std::to_string(trial);
      return false;
    }
    worst = std::max(worst, one_sided_hausdorff(traced, closed));
    worst = std::max(worst, one_sided_hausdorff(closed, traced));
    if (worst >= kTolHausdorff) break;
  }
  std::ostringstream ss;
  ss << "5 random generic deformations: two-sided sample distance " << worst;
  detail = ss.str();
  return worst < kTolHausdorff;
}

// ---------------------------------------------------------------------------
// 8. Versality and determinacy of the three-parameter family.
// ---------------------------------------------------------------------------
bool criterion_versality(std::string& detail) {
  bool ok = true;

  const Poly h = model_poly(kModel, 3);
  const CodimReport rep = codim_report(h, 1);
  ok = ok && rep.codim == 3 && rep.constant_row_complement;
  ok = ok && determinacy_check(h, 1);
  ok = ok && determinacy_check(h, 2);

  // Equal leading coefficients: both checks must fail.
  const int cap = 2;
  const Poly x = Poly::variable(0, cap);
  const Poly y = Poly::variable(1, cap);
  const Poly z = Poly::variable(2, cap);
  const Poly bad = Poly::constant(2.0, cap) * (x * x + y * y) + z * z;
  const VersalityReport vr =
      versality_check(bad, linear_family_directions(cap), 1);
  const bool bad_fails = !vr.versal && !determinacy_check(bad, 1);
  ok = ok && bad_fails;

  std::ostringstream ss;
  ss << "codim " << rep.codim << " with constant-first-row complement, "
     << "determined at degrees 1 and 2; degenerate coefficients rejected";
  detail = ss.str();
  return ok;
}

// ---------------------------------------------------------------------------
// 9. Rotor activation storylines.
// ---------------------------------------------------------------------------
bool criterion_rotor_scenarios(std::string& detail) {
  bool ok = true;
  std::ostringstream ss;

  auto gyrostat = [](const Vec3& sigma) {
    return RotorBodySystem::free_gyrostat(Vec3(0.5, 0.75, 7.0 / 6.0),
                                          Vec3(1.0 / 3.0, 0.5, 2.0 / 3.0),
                                          sigma);
  };

  {  // Smallest inertia (largest coefficient): lower-energy side first.
    ScenarioReport rep = scenario_report(gyrostat(Vec3(-1, 0, 0)), 6.0);
    ok = ok && rep.single_axis && rep.activated_model_axis == 0;
    ok = ok && rep.first_pitchfork_on_lower_energy_side;
    ok = ok && rep.restabilizes && !rep.simultaneous;
    ok = ok && rep.counts == std::vector<int>{2, 4, 6};
  }
  {  // Largest inertia (smallest coefficient): higher-energy side first.
    ScenarioReport rep = scenario_report(gyrostat(Vec3(0, 0, -1)), 1.0);
    ok = ok && rep.single_axis && rep.activated_model_axis == 2;
    ok = ok && !rep.first_pitchfork_on_lower_energy_side;
    ok = ok && rep.restabilizes && !rep.simultaneous;
  }
  {  // Middle axis with equal coefficient gaps: simultaneous crossings.
    ScenarioReport rep = scenario_report(gyrostat(Vec3(0, -1, 0)), 3.0);
    ok = ok && rep.activated_model_axis == 1 && rep.simultaneous;
    ok = ok && rep.counts == std::vector<int>{2, 6};
  }
  {  // Middle axis with unequal gaps: staged crossings.
    RotorBodySystem sys = RotorBodySystem::free_gyrostat(
        Vec3(0.25, 0.5, 1.0), Vec3(0.125, 0.25, 0.5), Vec3(0, -1, 0));
    ScenarioReport rep = scenario_report(sys, 3.0);
    ok = ok && rep.activated_model_axis == 1 && !rep.simultaneous;
    ok = ok && rep.counts == std::vector<int>{2, 4, 6};
  }
  {  // Gap difference below tolerance counts as equal.
    const double k1 = 1.0 / (6.0 + 2e-12);
    RotorBodySystem sys = RotorBodySystem::free_gyrostat(
        Vec3(2 * k1, 0.5, 1.0), Vec3(k1, 0.25, 0.5), Vec3(0, -1, 0));
    ScenarioReport rep = scenario_report(sys, 3.0);
    ok = ok && rep.simultaneous;
  }

  ss << "activation storylines per axis, simultaneity iff equal gaps "
        "(tolerance 1e-10)";
  detail = ss.str();
  return ok;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<bool(std::string&)> run;
  };
  const Criterion criteria[] = {
      {"pitchfork locations", criterion_pitchfork_locations},
      {"branch topology by stratum", criterion_branch_topology},
      {"sphere-count staircase", criterion_staircase},
      {"momentum multiplicity bound", criterion_multiplicity_bound},
      {"stability pattern", criterion_stability_pattern},
      {"dynamics oracle", criterion_dynamics},
      {"oracle equivalence", criterion_oracle_equivalence},
      {"versality and determinacy", criterion_versality},
      {"rotor scenarios", criterion_rotor_scenarios},
  };

  int failures = 0;
  int index = 0;
  for (const auto& c : criteria) {
    ++index;
    std::string detail;
    bool ok = false;
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::printf("%s criterion %d (%s): %s\n", ok ? "PASS" : "FAIL", index,
                c.name, detail.c_str());
    failures += !ok;
  }
  if (failures == 0)
    std::printf("all %d acceptance criteria passed\n", index);
  else
    std::printf("%d acceptance criteria FAILED\n", failures);
  return failures;
}
