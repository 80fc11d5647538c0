#pragma once

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace releq {

template <typename Scalar>
using Vec3T = Eigen::Matrix<Scalar, 3, 1>;
template <typename Scalar>
using Mat23T = Eigen::Matrix<Scalar, 2, 3>;

using Vec3 = Vec3T<double>;
using Mat23 = Mat23T<double>;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ZeroMomentum : Error {
  ZeroMomentum() : Error("tangent frame undefined at zero momentum") {}
};
struct PoleHit : Error {
  explicit PoleHit(double lambda)
      : Error("multiplier " + std::to_string(lambda) +
              " hits a pole with nonzero numerator") {}
};
struct DegenerateModel : Error {
  using Error::Error;
};
struct WrongStratum : Error {
  using Error::Error;
};
struct NoConvergence : Error {
  using Error::Error;
};
struct SingularHessian : Error {
  using Error::Error;
};
struct DegenerateInertia : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

inline bool all_finite(const Vec3& v) {
  return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
}

/// Quadratic coefficients (a, b, c) of the organizing Hamiltonian
/// a*x^2 + b*y^2 + c*z^2, with a > b > c enforced.
template <typename Scalar>
struct QuadraticModelT {
  Scalar a, b, c;

  QuadraticModelT(Scalar a_, Scalar b_, Scalar c_) : a(a_), b(b_), c(c_) {
    if (!(a > b && b > c))
      throw DegenerateModel("quadratic coefficients must satisfy a > b > c");
  }

  Vec3T<Scalar> coeffs() const { return Vec3T<Scalar>(a, b, c); }
  Scalar coeff(int axis) const { return axis == 0 ? a : (axis == 1 ? b : c); }
};

using QuadraticModel = QuadraticModelT<double>;

/// Linear deformation parameter (alpha, beta, gamma).
using UnfoldingParam = Vec3;

enum class StratumTag { Delta0, Delta1, Delta2, Generic };

/// Which stratum of the parameter-space discriminant (the union of the
/// three coordinate planes) the unfolding parameter lies in, plus the
/// connected component within the stratum.
struct Stratum {
  StratumTag tag;
  std::array<int, 3> sign;  // -1/0/+1 per component

  int zero_count() const {
    return (sign[0] == 0) + (sign[1] == 0) + (sign[2] == 0);
  }
  // Delta1: the single nonzero parameter axis.
  int nonzero_axis() const {
    for (int i = 0; i < 3; ++i)
      if (sign[i] != 0) return i;
    return -1;
  }
  // Delta2: the single vanishing component (which coordinate plane).
  int zero_axis() const {
    for (int i = 0; i < 3; ++i)
      if (sign[i] == 0) return i;
    return -1;
  }
  std::string label() const;
};

const char* to_string(StratumTag tag);

enum class StabilityClass {
  LyapunovStable,
  StronglyLinearlyStable,
  Elliptic,
  SpectrallyStableDegenerate,
  LinearlyUnstable,
  Unclassified
};

const char* to_string(StabilityClass cls);
/// Branch colours: red = Lyapunov stable, green = elliptic,
/// brown = linearly unstable, grey otherwise.
const char* color_of(StabilityClass cls);

enum class BifurcationKind { SaddleCentre, Pitchfork, ZeroMomentum };

const char* to_string(BifurcationKind kind);

struct BifurcationMarker {
  BifurcationKind kind;
  double lambda;  // multiplier value at the marker
  Vec3 mu;
  double j;
};

struct BranchSample {
  double lambda;  // Lagrange multiplier; +inf at the zero-momentum point
  Vec3 mu;
  double j;
  double h;
  StabilityClass stability = StabilityClass::Unclassified;
  bool at_bifurcation = false;
};

enum class BranchKind {
  Curve,  // multiplier-parametrized arc of the rational curve
  Line    // axis-parallel line attached at a pole with vanishing numerator
};

/// One connected curve of relative equilibria, sampled in branch order.
struct REBranch {
  int id = -1;
  BranchKind kind = BranchKind::Curve;
  bool contains_origin = false;
  // Open multiplier interval of the arc in branch order. For arcs that
  // pass through lambda = infinity (the zero-momentum point) the interval
  // wraps: (lambda_begin, +inf] glued to [-inf, lambda_end).
  double lambda_begin = 0.0, lambda_end = 0.0;
  bool wraps_infinity = false;
  int line_axis = -1;  // BranchKind::Line only
  std::vector<BranchSample> samples;
  std::vector<BifurcationMarker> markers;

  double min_j() const;
};

struct SaddleCentrePoint {
  double lambda;
  Vec3 mu;
  double j;
};

struct PitchforkPoint {
  Vec3 mu;
  double lambda;  // equals twice the model coefficient of line_axis
  int line_axis;  // axis the crossing line is parallel to
};

}  // namespace releq
