#pragma once

#include "releq/reduction.hpp"
#include "releq/types.hpp"

namespace releq {

/// Linearization of the reduced flow at a relative equilibrium.
///
/// At mu != 0 the flow is restricted to the momentum sphere through mu;
/// in an oriented tangent frame the linearization factors as L = P * Q
/// with P = blkdiag(|mu| J_2, J_shape) the Poisson/symplectic block and
/// Q the constrained Hessian of H - lambda j (the energy-Casimir test
/// matrix): Q = [[E^T (H_mumu - lambda I) E, E^T H_mus], [H_smu E, H_ss]].
///
/// At mu = 0 the linearization acts on all of R^3 x R^{2n} and has the
/// block-triangular form [[-hat(xi), 0], [*, J_shape H_ss]] with
/// xi = grad H(0) the equilibrium velocity, contributing the rigid
/// spectrum {0, +i|xi|, -i|xi|}.
struct Linearization {
  MatX L;
  MatX Q;           // empty at mu = 0 when there is no meaningful block
  MatX shape_block; // J_shape * H_ss (only at mu = 0)
  Eigen::Matrix<double, 3, 2> frame;  // sphere frame (mu != 0)
  Vec3 xi;
  double lambda = 0.0;
  bool at_origin = false;
  Eigen::VectorXcd spectrum;
};

Linearization linearize_at(const ReducedSystem& sys, const Vec3& mu);

struct StabilityOptions {
  double bif_tol = 1e-8;        // Q near-singular => at a bifurcation
  double spectral_tol = 1e-8;   // |Re| threshold relative to |L|
  double semisimple_tol = 1e-7;
  double origin_tol = 1e-12;    // |mu| below this counts as zero momentum
};

struct StabilityInfo {
  StabilityClass cls = StabilityClass::Unclassified;
  bool at_bifurcation = false;
  double hessian_margin = 0.0;  // signed: min eig magnitude of Q, negative
                                // when Q is indefinite
  double max_real_part = 0.0;
  Eigen::VectorXcd spectrum;
  std::vector<int> krein;  // signature per nonzero imaginary pair
};

/// Energy-Casimir first, spectrum second:
/// definite Q -> LyapunovStable; otherwise classify by the spectrum of L
/// (real part present -> LinearlyUnstable; imaginary semisimple with
/// definite signature per eigenvalue cluster -> StronglyLinearlyStable;
/// imaginary semisimple -> Elliptic; else SpectrallyStableDegenerate).
/// Shape-less elliptic points are promoted to LyapunovStable: on a
/// two-dimensional leaf an elliptic point is a local extremum of h.
StabilityInfo classify(const ReducedSystem& sys, const Vec3& mu,
                       const StabilityOptions& opts = {});

/// Annotate every sample of a branch in place and return the indices at
/// which the class changes between consecutive samples.
std::vector<int> classify_branch(const ReducedSystem& sys, REBranch& branch,
                                 const StabilityOptions& opts = {});

/// Resonance test at a zero-momentum relative equilibrium: true when some
/// internal frequency (eigenvalue of J_shape H_ss) lies within tol of the
/// rigid pair +-i|xi|.
bool resonance_check(const ReducedSystem& sys, double tol = 1e-8);

/// The 2n x 2n canonical symplectic matrix [[0, I], [-I, 0]].
MatX symplectic_matrix(int pairs);

}  // namespace releq
