#include "releq/rotors.hpp"

#include "releq/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace releq {

namespace {

Mat3 diag3(const Vec3& v) { return v.asDiagonal(); }

void require_diagonal(const Mat3& M, const char* what) {
  const double off = std::abs(M(0, 1)) + std::abs(M(0, 2)) +
                     std::abs(M(1, 0)) + std::abs(M(1, 2)) +
                     std::abs(M(2, 0)) + std::abs(M(2, 1));
  if (off > 1e-12 * (1.0 + M.norm()))
    throw DegenerateInertia(std::string(what) +
                            " must be diagonal in the principal axes");
}

}  // namespace

RotorBodySystem RotorBodySystem::free_gyrostat(const Vec3& inertia_diag,
                                               const Vec3& rotor_inertia_diag,
                                               const Vec3& sigma) {
  RotorBodySystem sys;
  sys.inertia_locked = diag3(inertia_diag);
  sys.inertia_rotors = diag3(rotor_inertia_diag);
  sys.mode = Mode::Free;
  sys.sigma = sigma;
  return sys;
}

RotorBodySystem RotorBodySystem::controlled(const Vec3& inertia_diag,
                                            const Vec3& rotor_inertia_diag,
                                            const Vec3& rates) {
  RotorBodySystem sys;
  sys.inertia_locked = diag3(inertia_diag);
  sys.inertia_rotors = diag3(rotor_inertia_diag);
  sys.mode = Mode::Controlled;
  sys.rotor_rate = rates;
  return sys;
}

RotorMomenta legendre(const Mat3& inertia_locked, const Mat3& inertia_rotors,
                      const Vec3& omega, const Vec3& thetadot) {
  RotorMomenta out;
  out.mu = inertia_locked * omega + inertia_rotors * thetadot;
  out.sigma = inertia_rotors * (omega + thetadot);
  return out;
}

double hamiltonian_free(const RotorBodySystem& sys, const Vec3& mu) {
  const Mat3 K = sys.inertia_locked - sys.inertia_rotors;
  Eigen::FullPivLU<Mat3> lu(K);
  if (!lu.isInvertible())
    throw DegenerateInertia("locked-minus-rotor inertia is singular");
  const Vec3 d = mu - sys.sigma;
  return 0.5 * d.dot(lu.solve(d));
}

double hamiltonian_controlled(const RotorBodySystem& sys, const Vec3& mu) {
  Eigen::FullPivLU<Mat3> lu(sys.inertia_locked);
  if (!lu.isInvertible())
    throw DegenerateInertia("locked inertia is singular");
  const Vec3 albar = sys.inertia_rotors * sys.rotor_rate;
  return 0.5 * mu.dot(lu.solve(mu)) - mu.dot(lu.solve(albar));
}

Vec3 hamiltonian_gradient(const RotorBodySystem& sys, const Vec3& mu) {
  if (sys.mode == RotorBodySystem::Mode::Free) {
    const Mat3 K = sys.inertia_locked - sys.inertia_rotors;
    Eigen::FullPivLU<Mat3> lu(K);
    if (!lu.isInvertible())
      throw DegenerateInertia("locked-minus-rotor inertia is singular");
    return lu.solve(mu - sys.sigma);
  }
  Eigen::FullPivLU<Mat3> lu(sys.inertia_locked);
  if (!lu.isInvertible())
    throw DegenerateInertia("locked inertia is singular");
  return lu.solve(mu - sys.inertia_rotors * sys.rotor_rate);
}

Vec3 UniversalMapping::to_model_frame(const Vec3& body) const {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[i] = body[axis_perm[i]];
  return out;
}

Vec3 UniversalMapping::to_body_frame(const Vec3& model) const {
  Vec3 out;
  for (int i = 0; i < 3; ++i) out[axis_perm[i]] = model[i];
  return out;
}

UniversalMapping to_universal(const RotorBodySystem& sys) {
  Mat3 K;
  Vec3 shift;  // linear term comes from -d_i * shift_i
  double constant = 0.0;
  if (sys.mode == RotorBodySystem::Mode::Free) {
    K = sys.inertia_locked - sys.inertia_rotors;
    shift = sys.sigma;
  } else {
    K = sys.inertia_locked;
    shift = sys.inertia_rotors * sys.rotor_rate;
  }
  require_diagonal(K, "effective inertia");
  Vec3 d;
  for (int i = 0; i < 3; ++i) {
    if (K(i, i) == 0.0)
      throw DegenerateInertia("effective inertia has a zero principal value");
    d[i] = 1.0 / K(i, i);
  }
  for (int i = 0; i < 3; ++i)
    for (int jx = i + 1; jx < 3; ++jx)
      if (std::abs(d[i] - d[jx]) <= 1e-12 * (1.0 + d.cwiseAbs().maxCoeff()))
        throw DegenerateInertia(
            "principal inertias must be distinct for the identification");

  std::array<int, 3> perm = {0, 1, 2};
  std::sort(perm.begin(), perm.end(),
            [&](int i, int jx) { return d[i] > d[jx]; });

  const Vec3 ds(d[perm[0]], d[perm[1]], d[perm[2]]);
  QuadraticModel model(0.5 * ds[0], 0.5 * ds[1], 0.5 * ds[2]);
  UnfoldingParam alpha;
  for (int i = 0; i < 3; ++i) alpha[i] = -ds[i] * shift[perm[i]];
  if (sys.mode == RotorBodySystem::Mode::Free)
    for (int i = 0; i < 3; ++i)
      constant += 0.5 * ds[i] * shift[perm[i]] * shift[perm[i]];

  UniversalMapping map{model, alpha, constant, perm};
  return map;
}

ReducedSystem reduced_system(const RotorBodySystem& sys) {
  ReducedSystem red;
  red.shape_pairs = 0;
  const RotorBodySystem s = sys;
  red.value = [s](const Vec3& mu, const VecX&) {
    return s.mode == RotorBodySystem::Mode::Free ? hamiltonian_free(s, mu)
                                                 : hamiltonian_controlled(s, mu);
  };
  red.d_mu = [s](const Vec3& mu, const VecX&) {
    return hamiltonian_gradient(s, mu);
  };
  red.d2_mumu = [s](const Vec3&, const VecX&) -> Mat3 {
    const Mat3 K = s.mode == RotorBodySystem::Mode::Free
                       ? Mat3(s.inertia_locked - s.inertia_rotors)
                       : s.inertia_locked;
    return K.inverse();
  };
  red.d_s = [](const Vec3&, const VecX&) { return VecX(0); };
  red.d2_smu = [](const Vec3&, const VecX&) { return MatX(0, 3); };
  red.d2_ss = [](const Vec3&, const VecX&) { return MatX(0, 0); };
  return red;
}

ReducedTrajectory integrate_reduced(const RotorBodySystem& sys,
                                    const Vec3& mu0, double t_final,
                                    double dt, int max_records) {
  if (!(dt > 0.0) || !(t_final > 0.0))
    throw ConfigError("integration needs positive dt and final time");
  const long nsteps = static_cast<long>(std::ceil(t_final / dt));
  const long stride = std::max<long>(1, nsteps / std::max(1, max_records - 1));

  auto field = [&](const Vec3& mu) {
    return mu.cross(hamiltonian_gradient(sys, mu));
  };
  auto energy = [&](const Vec3& mu) {
    return sys.mode == RotorBodySystem::Mode::Free
               ? hamiltonian_free(sys, mu)
               : hamiltonian_controlled(sys, mu);
  };

  ReducedTrajectory traj;
  Vec3 mu = mu0;
  const double h0 = energy(mu0);
  const double j0 = casimir(mu0);
  auto record = [&](double t) {
    traj.t.push_back(t);
    traj.mu.push_back(mu);
    traj.h.push_back(energy(mu));
    traj.j.push_back(casimir(mu));
  };
  record(0.0);

  for (long k = 0; k < nsteps; ++k) {
    const double step = std::min(dt, t_final - k * dt);
    const Vec3 k1 = field(mu);
    const Vec3 k2 = field(mu + 0.5 * step * k1);
    const Vec3 k3 = field(mu + 0.5 * step * k2);
    const Vec3 k4 = field(mu + step * k3);
    mu += (step / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);

    traj.h_drift = std::max(traj.h_drift, std::abs(energy(mu) - h0));
    traj.j_drift = std::max(traj.j_drift, std::abs(casimir(mu) - j0));
    traj.max_distance_from_start =
        std::max(traj.max_distance_from_start, (mu - mu0).norm());
    if ((k + 1) % stride == 0 || k + 1 == nsteps)
      record(std::min((k + 1) * dt, t_final));
  }
  return traj;
}

ScenarioReport scenario_report(const RotorBodySystem& sys, double j_max,
                               double zero_tol) {
  if (!(j_max > 0.0)) throw ConfigError("j_max must be positive");
  ScenarioReport rep{.mapping = to_universal(sys)};
  const QuadraticModel& model = rep.mapping.model;
  const UnfoldingParam& alpha = rep.mapping.alpha;
  const Stratum st = classify_stratum(alpha, zero_tol);
  rep.stratum = st.tag;

  const double R = std::sqrt(2.0 * j_max);
  BranchOptions bopts;
  bopts.zero_tol = zero_tol;
  rep.branches = enumerate_branches(model, alpha, R, bopts);
  const ReducedSystem red = from_universal(model, alpha);
  for (auto& br : rep.branches) classify_branch(red, br);

  // Bifurcation events inside the momentum window, sorted by j.
  for (const auto& br : rep.branches)
    for (const auto& mk : br.markers) {
      if (mk.kind == BifurcationKind::ZeroMomentum) continue;
      if (mk.j > j_max) continue;
      bool dup = false;
      for (const auto& ev : rep.events)
        if (ev.kind == mk.kind && (ev.mu_model - mk.mu).norm() <
                                      1e-9 * (1.0 + mk.mu.norm()))
          dup = true;
      if (dup) continue;
      ScenarioEvent ev;
      ev.kind = mk.kind;
      ev.j = mk.j;
      ev.mu_model = mk.mu;
      ev.mu_body = rep.mapping.to_body_frame(mk.mu);
      rep.events.push_back(ev);
    }
  std::sort(rep.events.begin(), rep.events.end(),
            [](const ScenarioEvent& a, const ScenarioEvent& b) {
              return a.j < b.j;
            });

  // Count census between consecutive events.  Events at the same level up
  // to round-off (simultaneous crossings) share one fence, so no probe is
  // placed inside the empty band between them.
  std::vector<double> fences{0.0};
  for (const auto& ev : rep.events) {
    if (std::abs(ev.j - fences.back()) <= 1e-9 * (1.0 + std::abs(ev.j)))
      continue;
    fences.push_back(ev.j);
  }
  fences.push_back(j_max);
  for (size_t i = 0; i + 1 < fences.size(); ++i) {
    if (!(fences[i + 1] > fences[i])) continue;
    const double jprobe = 0.5 * (fences[i] + fences[i + 1]);
    rep.count_levels.push_back(jprobe);
    rep.counts.push_back(count_re_on_sphere(model, alpha, jprobe, zero_tol));
  }

  // Storyline analysis for a single activated axis.
  rep.single_axis = st.tag == StratumTag::Delta1;
  if (rep.single_axis) {
    const int k = st.nonzero_axis();
    rep.activated_model_axis = k;
    std::vector<const ScenarioEvent*> pf;
    for (const auto& ev : rep.events)
      if (ev.kind == BifurcationKind::Pitchfork) pf.push_back(&ev);
    if (pf.size() >= 1) {
      const ScenarioEvent& first = *pf.front();
      // The branch through the origin is the activated coordinate axis;
      // compare energies of its two points at the first-crossing level.
      const double r = std::sqrt(2.0 * first.j);
      Vec3 plus = Vec3::Zero(), minus = Vec3::Zero();
      plus[k] = r;
      minus[k] = -r;
      const double hp = family_value(model, alpha, plus);
      const double hm = family_value(model, alpha, minus);
      const int lower_side = hp < hm ? +1 : -1;
      const int first_side = first.mu_model[k] > 0 ? +1 : -1;
      rep.first_pitchfork_on_lower_energy_side = (first_side == lower_side);
      if (pf.size() >= 2) {
        rep.simultaneous =
            std::abs(pf[0]->j - pf[1]->j) <= 1e-9 * (1.0 + pf[0]->j);
        // Read restabilization off the classified axis branch: on the side
        // of the first crossing, does the class run stable -> unstable ->
        // stable again as |mu| grows?
        const REBranch& through = rep.branches.front();
        std::vector<StabilityClass> seq;
        for (const auto& smp : through.samples) {
          if (first_side * smp.mu[k] <= 0.0 || smp.at_bifurcation) continue;
          seq.push_back(smp.stability);
        }
        if (first_side * (through.samples.back().mu[k] -
                          through.samples.front().mu[k]) < 0)
          std::reverse(seq.begin(), seq.end());
        bool seen_unstable = false;
        for (const auto& c : seq) {
          if (c == StabilityClass::LinearlyUnstable) seen_unstable = true;
          else if (seen_unstable && c == StabilityClass::LyapunovStable) {
            rep.restabilizes = true;
            break;
          }
        }
      }
    }
  }
  return rep;
}

}  // namespace releq
