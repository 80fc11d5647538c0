#pragma once

#include "releq/family.hpp"
#include "releq/reduction.hpp"
#include "releq/types.hpp"

#include <string>
#include <vector>

namespace releq {

/// Rigid body carrying axisymmetric rotors: locked inertia tensor II
/// (body plus rotors), rotor inertia block II_r about the rotor axes.
/// Free mode: rotors spin freely, conserved gyrostatic momentum sigma.
/// Controlled mode: rotor rates u are held fixed by a feedback torque.
struct RotorBodySystem {
  enum class Mode { Free, Controlled };

  Mat3 inertia_locked;  // II, symmetric positive definite
  Mat3 inertia_rotors;  // II_r
  Mode mode = Mode::Free;
  Vec3 sigma = Vec3::Zero();       // Free: gyrostatic momentum
  Vec3 rotor_rate = Vec3::Zero();  // Controlled: fixed rates u

  static RotorBodySystem free_gyrostat(const Vec3& inertia_diag,
                                       const Vec3& rotor_inertia_diag,
                                       const Vec3& sigma);
  static RotorBodySystem controlled(const Vec3& inertia_diag,
                                    const Vec3& rotor_inertia_diag,
                                    const Vec3& rates);
};

/// Legendre transform of the rotor-body Lagrangian at (omega, thetadot):
/// body momentum mu = II omega + II_r thetadot and gyrostatic momentum
/// sigma = II_r (omega + thetadot).
struct RotorMomenta {
  Vec3 mu;
  Vec3 sigma;
};
RotorMomenta legendre(const Mat3& inertia_locked, const Mat3& inertia_rotors,
                      const Vec3& omega, const Vec3& thetadot);

/// Reduced Hamiltonian of the free gyrostat at fixed sigma:
/// H(mu) = (mu - sigma)^T (II - II_r)^{-1} (mu - sigma) / 2.
double hamiltonian_free(const RotorBodySystem& sys, const Vec3& mu);

/// Reduced Hamiltonian with controlled rotor rates (constant dropped):
/// H(mu) = mu^T II^{-1} mu / 2 - mu^T II^{-1} II_r u.
double hamiltonian_controlled(const RotorBodySystem& sys, const Vec3& mu);

Vec3 hamiltonian_gradient(const RotorBodySystem& sys, const Vec3& mu);

/// Identification with the three-parameter family: the quadratic part
/// diagonalizes to the model coefficients (sorted descending, recorded
/// in axis_perm) and the rotor momentum supplies the linear deformation.
/// `constant` is the value offset dropped by the identification.
struct UniversalMapping {
  QuadraticModel model;
  UnfoldingParam alpha;
  double constant;
  std::array<int, 3> axis_perm;  // model axis i <- body axis axis_perm[i]

  Vec3 to_model_frame(const Vec3& body) const;
  Vec3 to_body_frame(const Vec3& model) const;
};
UniversalMapping to_universal(const RotorBodySystem& sys);

ReducedSystem reduced_system(const RotorBodySystem& sys);

// ---------------------------------------------------------------------------
// Direct integration of the reduced flow
// ---------------------------------------------------------------------------

struct ReducedTrajectory {
  std::vector<double> t;
  std::vector<Vec3> mu;
  std::vector<double> h;
  std::vector<double> j;
  double h_drift = 0.0;  // max |h(t) - h(0)| over every integrator step
  double j_drift = 0.0;
  double max_distance_from_start = 0.0;
};

/// Fixed-step RK4 for mu_dot = mu x grad H(mu). Samples are recorded at
/// most `max_records` times; drift is monitored at every step.
ReducedTrajectory integrate_reduced(const RotorBodySystem& sys,
                                    const Vec3& mu0, double t_final,
                                    double dt, int max_records = 2001);

// ---------------------------------------------------------------------------
// Scenario reports
// ---------------------------------------------------------------------------

struct ScenarioEvent {
  BifurcationKind kind;
  double j;
  Vec3 mu_model;  // in model axes
  Vec3 mu_body;   // in body axes
};

struct ScenarioReport {
  UniversalMapping mapping;
  StratumTag stratum = StratumTag::Generic;
  std::vector<ScenarioEvent> events{};  // sorted by j
  std::vector<int> counts{};            // RE count between consecutive events
  std::vector<double> count_levels{};   // j values the counts were probed at
  // Slow/fast-axis storyline (single activated axis only):
  bool single_axis = false;
  int activated_model_axis = -1;  // 0: largest coeff .. 2: smallest
  bool first_pitchfork_on_lower_energy_side = false;
  bool restabilizes = false;      // the destabilized side recovers stability
  bool simultaneous = false;      // both crossings at equal j (middle axis,
                                  // equal coefficient gaps)
  std::vector<REBranch> branches{};  // stability-annotated, in model axes
};

ScenarioReport scenario_report(const RotorBodySystem& sys, double j_max,
                               double zero_tol = 1e-12);

}  // namespace releq
