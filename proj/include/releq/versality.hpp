#pragma once

#include "releq/types.hpp"

#include <array>
#include <string>
#include <vector>

namespace releq {

/// Monomials x^i y^j z^k with i+j+k <= degree, graded lexicographic order
/// (total degree first, then lex on exponents with x > y > z).
class MonomialBasis {
 public:
  explicit MonomialBasis(int degree);
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(exps_.size()); }
  int index(int i, int j, int k) const;  // -1 when out of range
  const std::array<int, 3>& exponents(int idx) const { return exps_[idx]; }
  std::string monomial_name(int idx) const;

  static int dimension(int degree) {
    return (degree + 1) * (degree + 2) * (degree + 3) / 6;
  }

 private:
  int degree_;
  std::vector<std::array<int, 3>> exps_;
};

/// Polynomial in (x, y, z) truncated at a fixed total degree.
class Poly {
 public:
  Poly() : cap_(0), coef_(VecX::Zero(1)) {}
  explicit Poly(int cap) : cap_(cap), coef_(VecX::Zero(MonomialBasis::dimension(cap))) {}

  static Poly constant(double c, int cap);
  static Poly variable(int axis, int cap);  // 0 -> x, 1 -> y, 2 -> z
  static Poly monomial(double c, int i, int j, int k, int cap);

  int cap() const { return cap_; }
  const VecX& coefficients() const { return coef_; }
  double coefficient(int i, int j, int k) const;
  void set_coefficient(int i, int j, int k, double c);

  Poly truncated(int new_cap) const;
  Poly derivative(int axis) const;  // same cap, degree drops by one
  double eval(const Vec3& mu) const;
  bool is_zero(double tol = 0.0) const;

  Poly operator+(const Poly& o) const;
  Poly operator-(const Poly& o) const;
  Poly operator*(const Poly& o) const;  // truncated at min cap
  Poly& operator*=(double s) { coef_ *= s; return *this; }
  friend Poly operator*(double s, Poly p) { p.coef_ *= s; return p; }

 private:
  int cap_;
  VecX coef_;  // over MonomialBasis(cap_)
};

/// 2x3 matrix of truncated polynomials: the shape of the augmented
/// Jacobian [[h_x, h_y, h_z], [x, y, z]] and of its deformations.
struct PolyMatrix {
  int cap = 0;
  std::array<Poly, 6> e;  // row-major

  explicit PolyMatrix(int cap_ = 0);
  Poly& at(int r, int c) { return e[3 * r + c]; }
  const Poly& at(int r, int c) const { return e[3 * r + c]; }
  PolyMatrix truncated(int new_cap) const;
  VecX flattened() const;  // 6 * dim stacked coefficient vector
  PolyMatrix operator+(const PolyMatrix& o) const;
  PolyMatrix scaled(const Poly& q) const;  // entrywise product, truncated
};

/// Augmented Jacobian of (h, j): F = [[h_x, h_y, h_z], [x, y, z]].
PolyMatrix map_jacobian(const Poly& h);

// ---------------------------------------------------------------------------
// Tangent-space generators of the fibered left-right equivalence group
// preserving the second row (diffeos of the source commuting with the
// sphere foliation, plus parameter-dependent row operations).
// ---------------------------------------------------------------------------

/// One generator of the vertical (matrix-valued) part: F is sent to
/// either Row(i,j): add (row j) * q to row i, or Col(k,l): add
/// (column l) * q to column k, for scalar polynomial multipliers q.
/// Row(2,2) (rescaling the constraint row) is excluded: combined with
/// column rescalings it is dependent on the others at first order.
struct VerticalGenerator {
  enum class Kind { Row, Col } kind;
  int to, from;  // target and source row/column indices
  std::string name() const;
};

/// The 12 independent vertical generators.
const std::vector<VerticalGenerator>& vertical_generators();

/// Action of a vertical generator on F with multiplier q.
PolyMatrix apply_vertical(const VerticalGenerator& g, const PolyMatrix& F,
                          const Poly& q);

/// Source-diffeomorphism part: directional derivative dF/dx_axis,
/// to be multiplied by vector-field coefficient polynomials.
PolyMatrix source_derivative(const Poly& h, int axis, int cap);

// ---------------------------------------------------------------------------
// Jet-level spans
// ---------------------------------------------------------------------------

struct JetSpan {
  int degree;
  int ambient_dim;   // 6 * M(degree)
  int dim;           // rank of the tangent space at this jet level
  MatX basis;        // ambient_dim x dim, orthonormal columns
  double rank_gap;   // smallest kept / largest dropped singular value ratio
};

/// Tangent space to the equivalence-group orbit of F = map_jacobian(h)
/// in the space of degree-d jets of 2x3 polynomial matrices.
/// Non-extended: vector fields vanish at 0 (multipliers of the source
/// part have degree >= 1). Extended: constant vector fields allowed.
JetSpan tangent_space_span(const Poly& h, int degree, bool extended,
                           double rank_tol = 1e-9);

struct VersalityReport {
  bool versal = false;
  int degree;
  int ambient_dim;
  int tangent_dim;
  int family_rank;     // rank of tangent + family directions
  int missing;         // ambient_dim - family_rank
};

/// Does the extended tangent space plus the span of the given family
/// directions (derivatives of the family with respect to its parameters,
/// as 2x3 constant-in-parameter jets) fill the whole jet space?
VersalityReport versality_check(const Poly& h,
                                const std::vector<PolyMatrix>& family_dirs,
                                int degree, double rank_tol = 1e-9);

/// The three family directions of the linear unfolding:
/// d/d alpha_i F = [[e_i^T], [0]].
std::vector<PolyMatrix> linear_family_directions(int cap);

/// Finite-determinacy test at jet level d: the non-extended tangent space
/// contains every jet with vanishing constant term (i.e. m * Theta_F).
bool determinacy_check(const Poly& h, int degree, double rank_tol = 1e-9);

struct CodimReport {
  int degree;
  int ambient_dim;
  int tangent_dim;
  int codim;
  bool constant_row_complement;     // the three constant-first-row matrices
                                    // complete the extended tangent space
  std::vector<std::string> complement_names;
  MatX complement;                  // ambient_dim x codim
};

/// Codimension of the extended tangent space at jet level d together
/// with a readable complement basis.
CodimReport codim_report(const Poly& h, int degree, double rank_tol = 1e-9);

/// h for the quadratic model: a x^2 + b y^2 + c z^2.
Poly model_poly(const QuadraticModel& m, int cap);

}  // namespace releq
