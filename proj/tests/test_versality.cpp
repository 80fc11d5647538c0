#include <doctest.h>

#include "releq/versality.hpp"

#include <cmath>
#include <random>

using namespace releq;

namespace {

std::mt19937 rng_for(const char* tag) {
  std::seed_seq seq(tag, tag + std::char_traits<char>::length(tag));
  return std::mt19937(seq);
}

const QuadraticModel kModel{3.0, 2.0, 1.0};

Eigen::Matrix<double, 2, 3> eval_matrix(const PolyMatrix& M, const Vec3& mu) {
  Eigen::Matrix<double, 2, 3> out;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 3; ++c) out(r, c) = M.e[3 * r + c].eval(mu);
  return out;
}

}  // namespace

TEST_CASE("monomial basis dimensions and indexing") {
  CHECK(MonomialBasis::dimension(0) == 1);
  CHECK(MonomialBasis::dimension(1) == 4);
  CHECK(MonomialBasis::dimension(2) == 10);
  CHECK(MonomialBasis::dimension(3) == 20);

  MonomialBasis basis(2);
  CHECK(basis.size() == 10);
  CHECK(basis.degree() == 2);
  for (int i = 0; i <= 2; ++i)
    for (int j = 0; i + j <= 2; ++j)
      for (int k = 0; i + j + k <= 2; ++k)
        CHECK(basis.index(i, j, k) >= 0);
  CHECK(basis.index(3, 0, 0) == -1);
  CHECK(basis.index(0, 0, 3) == -1);
}

TEST_CASE("polynomial arithmetic with truncation") {
  const int cap = 3;
  const Poly x = Poly::variable(0, cap);
  const Poly y = Poly::variable(1, cap);
  const Poly z = Poly::variable(2, cap);

  const Poly s = (x + y) * (x + y);
  CHECK(s.coefficient(2, 0, 0) == 1.0);
  CHECK(s.coefficient(1, 1, 0) == 2.0);
  CHECK(s.coefficient(0, 2, 0) == 1.0);
  CHECK(s.coefficient(0, 0, 2) == 0.0);

  // Products past the cap are dropped.
  const Poly q = s * s;  // every term has degree 4 > cap
  CHECK(q.is_zero());
  const Poly cube = x * x * x;
  CHECK(cube.coefficient(3, 0, 0) == 1.0);
  CHECK((cube * x).is_zero());

  // Derivatives are exact.
  const Poly h = model_poly(kModel, cap);
  CHECK(h.derivative(0).coefficient(1, 0, 0) == doctest::Approx(6.0));
  CHECK(h.derivative(1).coefficient(0, 1, 0) == doctest::Approx(4.0));
  CHECK(h.derivative(2).coefficient(0, 0, 1) == doctest::Approx(2.0));

  auto rng = rng_for("poly-eval");
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vec3 mu(u(rng), u(rng), u(rng));
    const double direct = 3 * mu[0] * mu[0] + 2 * mu[1] * mu[1] +
                          mu[2] * mu[2];
    CHECK(h.eval(mu) == doctest::Approx(direct).epsilon(1e-14));
    CHECK((x * y * z).eval(mu) ==
          doctest::Approx(mu[0] * mu[1] * mu[2]).epsilon(1e-14));
  }
}

TEST_CASE("jacobian of the energy-momentum pair") {
  const Poly h = model_poly(kModel, 2);
  const PolyMatrix F = map_jacobian(h);

  auto rng = rng_for("map-jacobian");
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int k = 0; k < 20; ++k) {
    const Vec3 mu(u(rng), u(rng), u(rng));
    const auto M = eval_matrix(F, mu);
    CHECK((M.row(0).transpose() - Vec3(6 * mu[0], 4 * mu[1], 2 * mu[2]))
              .norm() <= 1e-13);
    CHECK((M.row(1).transpose() - mu).norm() <= 1e-13);
  }
}

TEST_CASE("source derivatives of the jacobian are constant for quadratics") {
  const Poly h = model_poly(kModel, 2);
  const PolyMatrix dF = source_derivative(h, 0, 2);
  const auto M0 = eval_matrix(dF, Vec3(0.3, -0.9, 2.0));
  const auto M1 = eval_matrix(dF, Vec3(-1.1, 0.4, 0.2));
  CHECK((M0 - M1).norm() <= 1e-14);
  CHECK(M0(0, 0) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(M0(1, 0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(M0(0, 1)) + std::abs(M0(0, 2)) <= 1e-14);
  CHECK(std::abs(M0(1, 1)) + std::abs(M0(1, 2)) <= 1e-14);
}

TEST_CASE("twelve vertical generators spanning row and column operations") {
  const auto& gens = vertical_generators();
  CHECK(gens.size() == 12);
  int rows = 0, cols = 0;
  for (const auto& g : gens) {
    rows += (g.kind == VerticalGenerator::Kind::Row);
    cols += (g.kind == VerticalGenerator::Kind::Col);
    CHECK(!g.name().empty());
  }
  // 2 x 2 row operations with one redundancy dropped, 3 x 3 column ones.
  CHECK(rows == 3);
  CHECK(cols == 9);
}

TEST_CASE("vertical generators are tangent to the rank-one stratum") {
  const int cap = 3;
  const Poly h = model_poly(kModel, cap);
  const PolyMatrix F = map_jacobian(h);
  const Poly one = Poly::constant(1.0, cap);

  auto rng = rng_for("rank-one-tangency");
  std::uniform_real_distribution<double> mag(0.3, 3.0);
  std::uniform_int_distribution<int> axis(0, 2);
  std::uniform_int_distribution<int> coin(0, 1);

  for (int trial = 0; trial < 100; ++trial) {
    // Relative equilibria of the undeformed model: the coordinate axes.
    const int k = axis(rng);
    const double t = (coin(rng) ? 1 : -1) * mag(rng);
    const Vec3 mu = t * Vec3::Unit(k);
    const auto A = eval_matrix(F, mu);
    REQUIRE(Eigen::JacobiSVD<Eigen::MatrixXd>(A).singularValues()(1) <=
            1e-12 * A.norm());

    // Left null row and right kernel of the rank-one matrix.
    const double lam = 2.0 * kModel.coeff(k);
    Eigen::RowVector2d q(1.0, -lam);
    q /= q.norm();
    Eigen::Matrix<double, 3, 2> K = Eigen::Matrix<double, 3, 2>::Zero();
    int col = 0;
    for (int i = 0; i < 3; ++i)
      if (i != k) K(i, col++) = 1.0;

    for (const auto& g : vertical_generators()) {
      const PolyMatrix B = apply_vertical(g, F, one);
      const auto Bv = eval_matrix(B, mu);
      const double resid = (q * Bv * K).norm();
      CHECK(resid <= 1e-10 * (1.0 + Bv.norm()));
    }
  }
}

TEST_CASE("jet-level tangent dimensions of the organizing family") {
  const Poly h = model_poly(kModel, 2);

  const JetSpan plain = tangent_space_span(h, 1, false);
  CHECK(plain.degree == 1);
  CHECK(plain.ambient_dim == 24);
  CHECK(plain.dim == 18);

  const JetSpan extended = tangent_space_span(h, 1, true);
  CHECK(extended.ambient_dim == 24);
  CHECK(extended.dim == 21);
  // The dropped singular values are exact zeros: the gap is enormous.
  CHECK(extended.rank_gap > 1e6);
}

TEST_CASE("codimension three with a constant-row complement") {
  for (int degree : {1, 2}) {
    const Poly h = model_poly(kModel, degree + 1);
    const CodimReport rep = codim_report(h, degree);
    CHECK(rep.degree == degree);
    CHECK(rep.ambient_dim == 6 * MonomialBasis::dimension(degree));
    CHECK(rep.codim == 3);
    CHECK(rep.tangent_dim == rep.ambient_dim - 3);
    CHECK(rep.constant_row_complement);
    CHECK(rep.complement_names.size() == 3);
  }
}

TEST_CASE("the three-parameter family is versal and the model determined") {
  const Poly h = model_poly(kModel, 2);
  const VersalityReport rep =
      versality_check(h, linear_family_directions(2), 1);
  CHECK(rep.versal);
  CHECK(rep.degree == 1);
  CHECK(rep.ambient_dim == 24);
  CHECK(rep.tangent_dim == 21);
  CHECK(rep.family_rank == 24);
  CHECK(rep.missing == 0);

  CHECK(determinacy_check(h, 1));
  CHECK(determinacy_check(model_poly(kModel, 3), 2));

  CHECK(linear_family_directions(2).size() == 3);
}

TEST_CASE("degenerate coefficients break versality and determinacy") {
  // a = b: not in the model class, so build the polynomial directly.
  const int cap = 2;
  const Poly x = Poly::variable(0, cap);
  const Poly y = Poly::variable(1, cap);
  const Poly z = Poly::variable(2, cap);
  const Poly h = Poly::constant(2.0, cap) * (x * x + y * y) + z * z;

  const CodimReport rep = codim_report(h, 1);
  CHECK(rep.codim > 3);
  CHECK(!rep.constant_row_complement);

  const VersalityReport vr = versality_check(h, linear_family_directions(cap), 1);
  CHECK(!vr.versal);
  CHECK(vr.missing > 0);

  CHECK(!determinacy_check(h, 1));
}
