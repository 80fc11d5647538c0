#pragma once

#include "releq/types.hpp"

namespace releq {

/// Casimir of the rigid-body Poisson bracket: j(mu) = |mu|^2 / 2.
/// Its level sets (spheres about the origin) are the symplectic leaves.
template <typename Scalar>
Scalar casimir(const Vec3T<Scalar>& mu) {
  return Scalar(0.5) * mu.squaredNorm();
}

/// Coadjoint action of so(3) on its dual: ad*_xi(mu) = xi x mu.
/// The reduced Hamiltonian vector field is mu_dot = coad(grad_h(mu), mu)
/// = mu x grad_h(mu) with the sign convention used throughout.
template <typename Scalar>
Vec3T<Scalar> coad(const Vec3T<Scalar>& xi, const Vec3T<Scalar>& mu) {
  return xi.cross(mu);
}

template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> hat(const Vec3T<Scalar>& v) {
  Eigen::Matrix<Scalar, 3, 3> m;
  m << Scalar(0), -v[2], v[1],  //
      v[2], Scalar(0), -v[0],   //
      -v[1], v[0], Scalar(0);
  return m;
}

/// Deterministic orthonormal basis (columns e1, e2) of the tangent plane
/// to the momentum sphere at mu, oriented so that e1 x e2 = mu/|mu|.
/// Seeded from the coordinate axis least aligned with mu (smallest
/// |mu_k|, ties broken by smallest index) so the frame varies smoothly
/// along branches that stay away from that axis.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 2> sphere_tangent_frame(const Vec3T<Scalar>& mu) {
  const Scalar n2 = mu.squaredNorm();
  if (!(n2 > Scalar(0))) throw ZeroMomentum{};
  const Vec3T<Scalar> nhat = mu / std::sqrt(n2);

  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(mu[i]) < std::abs(mu[k])) k = i;
  Vec3T<Scalar> seed = Vec3T<Scalar>::Unit(k);

  Vec3T<Scalar> e1 = seed - nhat.dot(seed) * nhat;
  e1.normalize();
  const Vec3T<Scalar> e2 = nhat.cross(e1);

  Eigen::Matrix<Scalar, 3, 2> frame;
  frame.col(0) = e1;
  frame.col(1) = e2;
  return frame;
}

}  // namespace releq
