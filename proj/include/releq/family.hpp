#pragma once

#include "releq/so3.hpp"
#include "releq/types.hpp"

#include <optional>
#include <utility>

namespace releq {

// ---------------------------------------------------------------------------
// Value-level functions on the three-parameter family
//   g(mu) = a x^2 + b y^2 + c z^2 + alpha x + beta y + gamma z
// of reduced Hamiltonians deforming the generic quadratic (a > b > c).
// ---------------------------------------------------------------------------

template <typename Scalar>
Scalar family_value(const QuadraticModelT<Scalar>& m,
                    const Vec3T<Scalar>& alpha, const Vec3T<Scalar>& mu) {
  return m.a * mu[0] * mu[0] + m.b * mu[1] * mu[1] + m.c * mu[2] * mu[2] +
         alpha.dot(mu);
}

template <typename Scalar>
Vec3T<Scalar> family_gradient(const QuadraticModelT<Scalar>& m,
                              const Vec3T<Scalar>& alpha,
                              const Vec3T<Scalar>& mu) {
  return Vec3T<Scalar>(2 * m.a * mu[0] + alpha[0], 2 * m.b * mu[1] + alpha[1],
                       2 * m.c * mu[2] + alpha[2]);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> family_hessian(const QuadraticModelT<Scalar>& m) {
  return (Vec3T<Scalar>(2 * m.a, 2 * m.b, 2 * m.c)).asDiagonal();
}

/// 2x3 Jacobian of (g, j): first row grad g, second row grad j = mu.
/// Relative equilibria are exactly the points where it drops rank.
template <typename Scalar>
Mat23T<Scalar> family_jacobian(const QuadraticModelT<Scalar>& m,
                               const Vec3T<Scalar>& alpha,
                               const Vec3T<Scalar>& mu) {
  Mat23T<Scalar> jac;
  jac.row(0) = family_gradient(m, alpha, mu).transpose();
  jac.row(1) = mu.transpose();
  return jac;
}

/// The three 2x2 minors of the Jacobian, assembled as grad g x mu.
/// Their common zero set is the set of relative equilibria; they satisfy
/// the syzygy mu . minors = 0 identically, so at most two are independent.
template <typename Scalar>
Vec3T<Scalar> family_minors(const QuadraticModelT<Scalar>& m,
                            const Vec3T<Scalar>& alpha,
                            const Vec3T<Scalar>& mu) {
  return family_gradient(m, alpha, mu).cross(mu);
}

/// Solve grad g(mu) = lambda * mu for mu given the multiplier lambda:
/// mu_i = alpha_i / (lambda - 2 m_i). Poles sit at lambda = 2a, 2b, 2c;
/// a pole is only reachable when the matching numerator vanishes, in
/// which case that component is taken to be 0 (the crossing point).
template <typename Scalar>
Vec3T<Scalar> point_from_multiplier(const QuadraticModelT<Scalar>& m,
                                    const Vec3T<Scalar>& alpha,
                                    Scalar lambda) {
  Vec3T<Scalar> mu;
  const Vec3T<Scalar> coef = m.coeffs();
  for (int i = 0; i < 3; ++i) {
    const Scalar den = lambda - 2 * coef[i];
    if (den == Scalar(0)) {
      if (alpha[i] != Scalar(0)) throw PoleHit(static_cast<double>(lambda));
      mu[i] = Scalar(0);
    } else {
      mu[i] = alpha[i] / den;
    }
  }
  return mu;
}

/// Angular velocity of the relative equilibrium with multiplier lambda:
/// the reduced flow at mu is rotation about xi = grad g(mu) = lambda mu.
template <typename Scalar>
Vec3T<Scalar> velocity_from_multiplier(Scalar lambda,
                                       const Vec3T<Scalar>& mu) {
  return lambda * mu;
}

// ---------------------------------------------------------------------------
// Discriminant strata and bifurcation points (double precision machinery).
// ---------------------------------------------------------------------------

/// Stratify by the number of vanishing components of alpha:
/// 3 -> Delta0 (organizing centre), 2 -> Delta1, 1 -> Delta2, 0 -> Generic.
/// Components with |alpha_i| <= zero_tol are treated as exact zeros.
Stratum classify_stratum(const UnfoldingParam& alpha, double zero_tol = 0.0);

/// Pitchfork (transcritical crossing) points for stratified parameters:
/// two for Delta1, one for Delta2, none otherwise. Each is the point where
/// an axis-parallel line of equilibria crosses the multiplier curve.
std::vector<PitchforkPoint> pitchfork_points(const QuadraticModel& m,
                                             const UnfoldingParam& alpha,
                                             double zero_tol = 0.0);

/// The two saddle-centre points of a generic parameter: the interior
/// minima of j along the two bounded multiplier arcs. Throws WrongStratum
/// unless alpha is in the generic stratum.
std::vector<SaddleCentrePoint> saddle_centre_points(
    const QuadraticModel& m, const UnfoldingParam& alpha,
    double zero_tol = 0.0);

/// Critical point of g itself (grad g = 0), when all model coefficients
/// are nonzero: the genuine equilibrium of the reduced flow.
std::optional<Vec3> family_equilibrium(const QuadraticModel& m,
                                       const UnfoldingParam& alpha);

/// Number of relative equilibria on the sphere j(mu) = j0.
/// Even away from bifurcation values of j0; jumps by 2 at each
/// saddle-centre or pitchfork level and is bounded by 6.
int count_re_on_sphere(const QuadraticModel& m, const UnfoldingParam& alpha,
                       double j0, double zero_tol = 0.0);

// ---------------------------------------------------------------------------
// Branch enumeration
// ---------------------------------------------------------------------------

struct BranchOptions {
  double zero_tol = 0.0;       // threshold for alpha components
  double target_spacing = 0.0; // 0 -> window_radius / 150
  double sag_tol = 0.0;        // chord deviation bound; 0 -> 2e-6 * radius
  int max_samples_per_branch = 20000;
};

/// All branches of the relative-equilibrium set inside |mu| <= radius,
/// sampled densely with exact samples at every bifurcation point and at
/// the zero-momentum point. Branch 0 is always the arc through the origin.
std::vector<REBranch> enumerate_branches(const QuadraticModel& m,
                                         const UnfoldingParam& alpha,
                                         double window_radius,
                                         const BranchOptions& opts = {});

// ---------------------------------------------------------------------------
// Energy-momentum discriminant
// ---------------------------------------------------------------------------

struct EMCurve {
  int branch_id;
  std::vector<Eigen::Vector2d> points;  // (j, h) along the branch
  std::vector<Eigen::Vector2d> folds;   // saddle-centre images (fold points)
  std::vector<Eigen::Vector2d> crossings;  // pitchfork images
};

/// Image of the branches in the energy-momentum plane (j, h): the
/// discriminant of the energy-momentum map, with fold points at
/// saddle-centres and transversal crossings at pitchforks.
std::vector<EMCurve> em_discriminant(const QuadraticModel& m,
                                     const UnfoldingParam& alpha,
                                     double window_radius,
                                     const BranchOptions& opts = {});

// ---------------------------------------------------------------------------
// Internals shared with other modules (exposed for testing)
// ---------------------------------------------------------------------------
namespace detail {

/// j along the multiplier curve: p(lambda) = |mu(lambda)|^2 / 2. Strictly
/// convex between consecutive poles, so each bounded arc carries exactly
/// one interior minimum (the saddle-centre).
double sphere_radius_profile(const QuadraticModel& m,
                             const UnfoldingParam& alpha, double lambda);

/// Interior minimizer of sphere_radius_profile on the open interval
/// (lo, hi) between two consecutive genuine poles.
double bounded_arc_j_minimizer(const QuadraticModel& m,
                               const UnfoldingParam& alpha, double lo,
                               double hi);

}  // namespace detail

}  // namespace releq
