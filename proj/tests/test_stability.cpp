#include <doctest.h>

#include "releq/family.hpp"
#include "releq/reduction.hpp"
#include "releq/stability.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace releq;

namespace {

std::mt19937 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937(seq);
}

const QuadraticModel kModel{3.0, 2.0, 1.0};

double min_abs_imag(const Eigen::VectorXcd& ev) {
  double m = 1e300;
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i)) > 1e-9) m = std::min(m, std::abs(ev(i).imag()));
  return m;
}

bool spectrum_contains(const Eigen::VectorXcd& ev, std::complex<double> z,
                       double tol) {
  for (int i = 0; i < ev.size(); ++i)
    if (std::abs(ev(i) - z) <= tol) return true;
  return false;
}

// n = 1 with a small momentum-shape coupling; shape frequency 2.
ReducedSystem coupled_system(double shape_coeff = 1.0,
                             double second_shape_coeff = 1.0) {
  return from_polynomial(
      1, {{3.0, {2, 0, 0}, {0, 0}},
          {2.0, {0, 2, 0}, {0, 0}},
          {1.0, {0, 0, 2}, {0, 0}},
          {1.0, {1, 0, 0}, {0, 0}},
          {0.3, {1, 0, 0}, {1, 0}},
          {shape_coeff, {0, 0, 0}, {2, 0}},
          {second_shape_coeff, {0, 0, 0}, {0, 2}}});
}

}  // namespace

TEST_CASE("free body: middle axis unstable with the classical exponent") {
  ReducedSystem sys = from_universal(kModel, UnfoldingParam::Zero());

  for (double m : {0.5, 1.0, 2.0, 5.0}) {
    StabilityInfo info = classify(sys, Vec3(0.0, m, 0.0));
    CHECK(info.cls == StabilityClass::LinearlyUnstable);
    // Exponent 2 |mu| sqrt((a - b)(b - c)).
    const double expect = 2.0 * m;
    CHECK(info.max_real_part == doctest::Approx(expect).epsilon(1e-9));
    CHECK(info.hessian_margin < 0.0);
    CHECK(spectrum_contains(info.spectrum, {expect, 0.0}, 1e-8 * expect));
    CHECK(spectrum_contains(info.spectrum, {-expect, 0.0}, 1e-8 * expect));
  }
}

TEST_CASE("free body: extreme axes are lyapunov stable") {
  ReducedSystem sys = from_universal(kModel, UnfoldingParam::Zero());

  StabilityInfo sx = classify(sys, Vec3(1.0, 0.0, 0.0));
  CHECK(sx.cls == StabilityClass::LyapunovStable);
  CHECK(sx.hessian_margin > 0.0);

  StabilityInfo sz = classify(sys, Vec3(0.0, 0.0, 1.0));
  CHECK(sz.cls == StabilityClass::LyapunovStable);
  CHECK(sz.hessian_margin > 0.0);

  // Rotation frequencies 2 sqrt((a-b)(a-c)) and 2 sqrt((a-c)(b-c)).
  const Linearization lx = linearize_at(sys, Vec3(1.0, 0.0, 0.0));
  CHECK(min_abs_imag(lx.spectrum) == doctest::Approx(2.0 * std::sqrt(2.0))
                                         .epsilon(1e-10));
  const Linearization lz = linearize_at(sys, Vec3(0.0, 0.0, 1.0));
  CHECK(min_abs_imag(lz.spectrum) == doctest::Approx(2.0 * std::sqrt(2.0))
                                         .epsilon(1e-10));
  for (int i = 0; i < lz.spectrum.size(); ++i)
    CHECK(std::abs(lz.spectrum(i).real()) <= 1e-10);
}

TEST_CASE("zero momentum point of a shape-less system is confined") {
  ReducedSystem sys = from_universal(kModel, Vec3(1.0, 2.0, 3.0));
  StabilityInfo info = classify(sys, Vec3::Zero());
  CHECK(info.cls == StabilityClass::LyapunovStable);

  const Linearization lin = linearize_at(sys, Vec3::Zero());
  CHECK(lin.at_origin);
  REQUIRE(lin.spectrum.size() == 3);
  // Spectrum {0, +i|xi|, -i|xi|} with xi the deformation vector.
  const double w = std::sqrt(14.0);
  CHECK(spectrum_contains(lin.spectrum, {0.0, 0.0}, 1e-10));
  CHECK(spectrum_contains(lin.spectrum, {0.0, w}, 1e-10 * w));
  CHECK(spectrum_contains(lin.spectrum, {0.0, -w}, 1e-10 * w));
  CHECK((lin.xi - Vec3(1.0, 2.0, 3.0)).norm() <= 1e-14);
}

TEST_CASE("single active parameter: the axis branch destabilizes between "
          "the two crossings") {
  ReducedSystem sys = from_universal(kModel, Vec3(0.0, 0.0, 2.0));
  // Crossings at z = 0.5 and z = 1.
  CHECK(classify(sys, Vec3(0, 0, 0.30)).cls == StabilityClass::LyapunovStable);
  CHECK(classify(sys, Vec3(0, 0, 0.49)).cls == StabilityClass::LyapunovStable);
  CHECK(classify(sys, Vec3(0, 0, 0.51)).cls ==
        StabilityClass::LinearlyUnstable);
  CHECK(classify(sys, Vec3(0, 0, 0.70)).cls ==
        StabilityClass::LinearlyUnstable);
  CHECK(classify(sys, Vec3(0, 0, 0.99)).cls ==
        StabilityClass::LinearlyUnstable);
  CHECK(classify(sys, Vec3(0, 0, 1.01)).cls == StabilityClass::LyapunovStable);
  CHECK(classify(sys, Vec3(0, 0, 1.50)).cls == StabilityClass::LyapunovStable);
  CHECK(classify(sys, Vec3(0, 0, -0.50)).cls == StabilityClass::LyapunovStable);

  // Exactly at a crossing the test matrix is singular.
  StabilityInfo at = classify(sys, Vec3(0, 0, 0.5));
  CHECK(at.at_bifurcation);
  StabilityInfo at2 = classify(sys, Vec3(0, 0, 1.0));
  CHECK(at2.at_bifurcation);
}

TEST_CASE("fold points are flagged as bifurcations") {
  const UnfoldingParam alpha(1.0, 2.0, 3.0);
  ReducedSystem sys = from_universal(kModel, alpha);
  for (const auto& p : saddle_centre_points(kModel, alpha))
    CHECK(classify(sys, p.mu).at_bifurcation);
}

TEST_CASE("branch annotation localizes the class changes at the crossings") {
  const UnfoldingParam alpha(0.0, 0.0, 2.0);
  ReducedSystem sys = from_universal(kModel, alpha);
  auto branches = enumerate_branches(kModel, alpha, 1.6);
  REBranch* through = nullptr;
  for (auto& b : branches)
    if (b.contains_origin) through = &b;
  REQUIRE(through != nullptr);

  classify_branch(sys, *through);

  // Drop samples flagged as sitting on a bifurcation (the exact crossing
  // points); the remaining run of classes must be stable / unstable /
  // stable with the changes at z = 0.5 and z = 1.
  std::vector<std::pair<double, StabilityClass>> runs;
  for (const auto& s : through->samples) {
    if (s.at_bifurcation) {
      CHECK(std::min((s.mu - Vec3(0, 0, 0.5)).norm(),
                     (s.mu - Vec3(0, 0, 1.0)).norm()) <= 1e-6);
      continue;
    }
    if (runs.empty() || runs.back().second != s.stability)
      runs.emplace_back(s.mu[2], s.stability);
  }
  REQUIRE(runs.size() == 3);
  CHECK(runs[0].second == StabilityClass::LyapunovStable);
  CHECK(runs[1].second == StabilityClass::LinearlyUnstable);
  CHECK(runs[2].second == StabilityClass::LyapunovStable);
  // Change points bracket the crossing heights (sample order may run in
  // either z direction).
  double lo = runs[1].first, hi = runs[2].first;
  if (lo > hi) std::swap(lo, hi);
  CHECK(lo == doctest::Approx(0.5).epsilon(0.1));
  CHECK(hi == doctest::Approx(1.0).epsilon(0.05));

  // classify_branch reports the same changes through its return value.
  auto transitions = classify_branch(sys, *through);
  int genuine = 0;
  for (int idx : transitions) {
    const auto& a = through->samples[idx];
    const auto& b = through->samples[idx + 1];
    if (!a.at_bifurcation && !b.at_bifurcation) ++genuine;
  }
  CHECK(genuine <= 2);
}

TEST_CASE("shape block drives stability when momentum decouples") {
  SUBCASE("positive definite shape hessian keeps the origin stable") {
    ReducedSystem sys = coupled_system();
    StabilityInfo info = classify(sys, Vec3::Zero());
    CHECK(info.cls == StabilityClass::LyapunovStable);
    CHECK(info.hessian_margin > 0.0);
  }

  SUBCASE("indefinite shape hessian destabilizes") {
    ReducedSystem sys = coupled_system(0.5, -0.5);
    StabilityInfo origin = classify(sys, Vec3::Zero());
    CHECK(origin.cls == StabilityClass::LinearlyUnstable);
    CHECK(origin.max_real_part == doctest::Approx(1.0).epsilon(1e-8));

    // Nearby curve points inherit the shape instability.
    StabilityInfo nearby = classify(sys, Vec3(0.05, 0.0, 0.0));
    CHECK(nearby.cls == StabilityClass::LinearlyUnstable);
  }

  SUBCASE("definite but opposite-sign blocks give strong stability") {
    ReducedSystem sys = coupled_system();
    // Positive side of the through branch: rotational block negative,
    // shape block positive, spectrum imaginary with definite clusters.
    StabilityInfo info = classify(sys, Vec3(0.1, 0.0, 0.0));
    CHECK(info.cls == StabilityClass::StronglyLinearlyStable);
    REQUIRE(!info.krein.empty());
    for (int s : info.krein) CHECK(s != 0);
    // Negative side: everything positive definite.
    StabilityInfo neg = classify(sys, Vec3(-0.1, 0.0, 0.0));
    CHECK(neg.cls == StabilityClass::LyapunovStable);
  }
}

TEST_CASE("internal resonance detection at zero momentum") {
  // |xi| = 1; shape frequency = twice the s^2 coefficient.
  CHECK(!resonance_check(coupled_system(1.0, 1.0)));   // frequency 2
  CHECK(resonance_check(coupled_system(0.5, 0.5)));    // frequency 1
  CHECK(!resonance_check(from_universal(kModel, Vec3(1, 0, 0))));
}

TEST_CASE("linearization is trace-free with a symmetric spectrum") {
  auto rng = rng_for("spectrum-symmetry");
  std::uniform_real_distribution<double> u(-12.0, 12.0);
  ReducedSystem flat = from_universal(kModel, Vec3(1.0, 1.0, 1.0));
  ReducedSystem shaped = coupled_system();

  int tested = 0;
  while (tested < 40) {
    const double lam = u(rng);
    if (std::min({std::abs(lam - 6), std::abs(lam - 4), std::abs(lam - 2)}) <
        0.1)
      continue;
    ++tested;
    const Vec3 mu = point_from_multiplier(kModel, Vec3(1.0, 1.0, 1.0), lam);
    for (const ReducedSystem* sys : {&flat, &shaped}) {
      const Linearization lin = linearize_at(*sys, mu);
      const double scale = std::max(1.0, lin.L.norm());
      CHECK(std::abs(lin.L.trace()) <= 1e-10 * scale);
      // Eigenvalues come in +/- pairs.
      for (int i = 0; i < lin.spectrum.size(); ++i) {
        double best = 1e300;
        for (int k = 0; k < lin.spectrum.size(); ++k)
          best = std::min(best,
                          std::abs(lin.spectrum(i) + lin.spectrum(k)));
        CHECK(best <= 1e-6 * scale);
      }
    }
  }
}

TEST_CASE("canonical symplectic matrix") {
  const MatX J = symplectic_matrix(2);
  REQUIRE(J.rows() == 4);
  REQUIRE(J.cols() == 4);
  CHECK((J * J + MatX::Identity(4, 4)).norm() == 0.0);
  CHECK((J + J.transpose()).norm() == 0.0);
  CHECK(symplectic_matrix(0).size() == 0);
}

TEST_CASE("sphere frame block scales with the momentum norm") {
  ReducedSystem sys = from_universal(kModel, Vec3(1.0, 1.0, 1.0));
  const Vec3 mu = point_from_multiplier(kModel, Vec3(1.0, 1.0, 1.0), 10.0);
  const Linearization lin = linearize_at(sys, mu);
  CHECK(lin.lambda == doctest::Approx(10.0).epsilon(1e-9));
  // L = P Q with P carrying |mu| in the rotational block.
  const MatX P = lin.L * lin.Q.inverse();
  CHECK(P(0, 1) == doctest::Approx(-mu.norm()).epsilon(1e-8));
  CHECK(P(1, 0) == doctest::Approx(mu.norm()).epsilon(1e-8));
}
