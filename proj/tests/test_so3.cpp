#include <doctest.h>

#include "releq/so3.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <random>

using namespace releq;

namespace {

std::mt19937 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937(seq);
}

Vec3 random_vec(std::mt19937& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  return Vec3(u(rng), u(rng), u(rng));
}

}  // namespace

TEST_CASE("casimir is half the squared momentum norm") {
  CHECK(casimir(Vec3(1.0, 2.0, 2.0)) == 4.5);
  CHECK(casimir(Vec3::Zero().eval()) == 0.0);

  auto rng = rng_for("casimir-fuzz");
  for (int k = 0; k < 50; ++k) {
    const Vec3 mu = random_vec(rng, 3.0);
    CHECK(casimir(mu) == doctest::Approx(0.5 * mu.squaredNorm()).epsilon(1e-15));
  }
}

TEST_CASE("hat matrix realizes the cross product and is antisymmetric") {
  auto rng = rng_for("hat-fuzz");
  for (int k = 0; k < 50; ++k) {
    const Vec3 u = random_vec(rng), v = random_vec(rng);
    const Mat3 H = hat(u);
    CHECK((H + H.transpose()).norm() == 0.0);
    CHECK((H * v - u.cross(v)).norm() <= 1e-15 * (1.0 + u.norm() * v.norm()));
  }
}

TEST_CASE("coadjoint action preserves the casimir infinitesimally") {
  auto rng = rng_for("coad-fuzz");
  for (int k = 0; k < 50; ++k) {
    const Vec3 xi = random_vec(rng), mu = random_vec(rng, 2.0);
    const Vec3 dot = coad(xi, mu);
    // d/dt j(mu) = mu . mu_dot = 0 and xi . (xi x mu) = 0.
    CHECK(std::abs(mu.dot(dot)) <= 1e-14 * (1.0 + mu.squaredNorm() * xi.norm()));
    CHECK(std::abs(xi.dot(dot)) <= 1e-14 * (1.0 + xi.squaredNorm() * mu.norm()));
  }
}

TEST_CASE("reduced flow conserves any hamiltonian along its own field") {
  // mu_dot = mu x grad h  =>  grad h . mu_dot = 0 for every grad h.
  auto rng = rng_for("flow-conservation");
  for (int k = 0; k < 50; ++k) {
    const Vec3 mu = random_vec(rng, 2.0), g = random_vec(rng, 5.0);
    const Vec3 dot = mu.cross(g);
    CHECK(std::abs(g.dot(dot)) <= 1e-13 * (1.0 + g.squaredNorm() * mu.norm()));
  }
}

TEST_CASE("sphere tangent frame is orthonormal and positively oriented") {
  auto rng = rng_for("frame-fuzz");
  for (int k = 0; k < 100; ++k) {
    Vec3 mu = random_vec(rng, 4.0);
    if (mu.norm() < 1e-3) mu = Vec3(0.3, -0.2, 1.1);
    const auto E = sphere_tangent_frame(mu);
    const Vec3 e1 = E.col(0), e2 = E.col(1);
    CHECK(e1.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(e2.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(e1.dot(e2)) <= 1e-12);
    CHECK(std::abs(e1.dot(mu)) <= 1e-12 * mu.norm());
    CHECK(std::abs(e2.dot(mu)) <= 1e-12 * mu.norm());
    CHECK((e1.cross(e2) - mu.normalized()).norm() <= 1e-12);
  }
}

TEST_CASE("sphere tangent frame rejects zero momentum") {
  CHECK_THROWS_AS(sphere_tangent_frame(Vec3::Zero().eval()), ZeroMomentum);
  CHECK_THROWS_AS(sphere_tangent_frame(Vec3::Zero().eval()), Error);
}

TEST_CASE("frame seed picks the least aligned coordinate axis") {
  // Momentum along z: the seed axis is x, so e1 is the x axis exactly.
  const auto E = sphere_tangent_frame(Vec3(0.0, 0.0, 2.0));
  CHECK((E.col(0) - Vec3::UnitX()).norm() <= 1e-15);
  CHECK((E.col(1) - Vec3::UnitY()).norm() <= 1e-15);
}

TEST_CASE("casimir and cross structure are rotation invariant") {
  auto rng = rng_for("rotation-invariance");
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 25; ++k) {
    Eigen::Quaterniond q(u(rng), u(rng), u(rng), u(rng));
    if (q.norm() < 1e-3) continue;
    q.normalize();
    const Mat3 R = q.toRotationMatrix();
    const Vec3 mu = random_vec(rng, 2.0), xi = random_vec(rng, 2.0);
    CHECK(casimir((R * mu).eval()) == doctest::Approx(casimir(mu)).epsilon(1e-12));
    // R (xi x mu) = (R xi) x (R mu) for R in SO(3).
    const Vec3 lhs = R * coad(xi, mu);
    const Vec3 rhs = coad((R * xi).eval(), (R * mu).eval());
    CHECK((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
    // hat(R v) = R hat(v) R^T.
    CHECK((hat((R * mu).eval()) - R * hat(mu) * R.transpose()).norm() <= 1e-12);
  }
}

TEST_CASE("hat works on long double scalars") {
  using V = Vec3T<long double>;
  const V v(1.0L, -2.0L, 0.5L);
  const auto H = hat(v);
  const V w(0.25L, 4.0L, -1.0L);
  const V expect = v.cross(w);
  CHECK(((H * w) - expect).norm() <= 1e-18L);
  CHECK(casimir(v) == doctest::Approx(2.625).epsilon(1e-15));
}
