#pragma once

#include "releq/family.hpp"
#include "releq/types.hpp"

#include <functional>
#include <memory>
#include <string>

namespace releq {

/// An SO(3)-invariant Hamiltonian reduced to body momentum mu in R^3 and
/// internal (shape) variables s in R^{2n}, with s = (q_1..q_n, p_1..p_n)
/// canonically conjugate pairs. Only `value` is required; missing
/// derivative callbacks fall back to central finite differences.
struct ReducedSystem {
  int shape_pairs = 0;  // n; s has dimension 2n

  std::function<double(const Vec3&, const VecX&)> value;
  std::function<Vec3(const Vec3&, const VecX&)> d_mu;
  std::function<VecX(const Vec3&, const VecX&)> d_s;
  std::function<Mat3(const Vec3&, const VecX&)> d2_mumu;
  std::function<MatX(const Vec3&, const VecX&)> d2_smu;  // (2n) x 3
  std::function<MatX(const Vec3&, const VecX&)> d2_ss;   // (2n) x (2n)

  VecX s_base;  // starting guess for shape slices; defaults to 0

  int dim_s() const { return 2 * shape_pairs; }
  VecX base_shape() const {
    return s_base.size() == dim_s() ? s_base : VecX::Zero(dim_s());
  }
};

// Derivative accessors with finite-difference fallbacks.
Vec3 grad_mu(const ReducedSystem& sys, const Vec3& mu, const VecX& s);
VecX grad_s(const ReducedSystem& sys, const Vec3& mu, const VecX& s);
Mat3 hess_mumu(const ReducedSystem& sys, const Vec3& mu, const VecX& s);
MatX hess_smu(const ReducedSystem& sys, const Vec3& mu, const VecX& s);
MatX hess_ss(const ReducedSystem& sys, const Vec3& mu, const VecX& s);

/// The three-parameter family as a shape-less reduced system.
ReducedSystem from_universal(const QuadraticModel& m,
                             const UnfoldingParam& alpha);

/// Shape-less system from explicit reduced-Hamiltonian callbacks.
ReducedSystem from_reduced_hamiltonian(
    std::function<double(const Vec3&)> h,
    std::function<Vec3(const Vec3&)> grad = nullptr,
    std::function<Mat3(const Vec3&)> hess = nullptr);

/// Polynomial Hamiltonian in (x, y, z, s_1, ..., s_2n): sum of terms
/// coef * x^i y^j z^k * prod s_m^{e_m}. Exact derivatives.
struct PolyTerm {
  double coef;
  std::array<int, 3> mu_exp;
  std::vector<int> s_exp;  // size 2n (may be empty when n = 0)
};
ReducedSystem from_polynomial(int shape_pairs,
                              const std::vector<PolyTerm>& terms);

/// Parse the JSON system description {"n": ..., "terms": [...]}.
ReducedSystem system_from_json_text(const std::string& text);

// ---------------------------------------------------------------------------
// Shape slices
// ---------------------------------------------------------------------------

struct SliceOptions {
  double tol = 1e-12;
  int max_iter = 60;
  double cond_limit = 1e12;
};

struct SlicePoint {
  VecX s;
  double residual;
  int iterations;
};

/// Critical point of s -> H(mu, s) near s_guess (damped Newton).
/// Throws NoConvergence / SingularHessian per the option limits.
SlicePoint solve_slice(const ReducedSystem& sys, const Vec3& mu,
                       const VecX& s_guess, const SliceOptions& opts = {});

/// Reduced Hamiltonian on momentum space alone:
/// h(mu) = H(mu, s(mu)) with s(mu) the shape slice. By the envelope
/// property, grad h(mu) = d_mu H(mu, s(mu)).
double reduced_h(const ReducedSystem& sys, const Vec3& mu);
double reduced_h(const ReducedSystem& sys, const Vec3& mu, VecX& s_inout);

/// Tracks the shape slice along a momentum path so each solve starts
/// from the previous solution.
class SliceTracker {
 public:
  explicit SliceTracker(const ReducedSystem& sys,
                        const SliceOptions& opts = {});
  const VecX& shape_at(const Vec3& mu);
  Vec3 grad_h(const Vec3& mu);
  Mat3 hess_h(const Vec3& mu);  // Schur complement of the shape block
  double value_h(const Vec3& mu);
  void reset(const VecX& s);

 private:
  const ReducedSystem* sys_;
  SliceOptions opts_;
  VecX s_;
  Vec3 last_mu_;
  bool have_ = false;
};

/// Multiplier of a relative equilibrium: least-squares lambda with
/// grad h(mu) = lambda mu (exact when mu is a relative equilibrium).
double multiplier_at(const Vec3& grad_h, const Vec3& mu);

// ---------------------------------------------------------------------------
// General relative-equilibrium sets by continuation
// ---------------------------------------------------------------------------

struct ContinuationOptions {
  double max_step = 0.0;       // 0 -> window_radius / 200
  double min_step = 1e-10;
  double corrector_tol = 1e-12;
  int max_corrector_iter = 25;
  int max_steps = 100000;
  double seed_tol = 1e-11;
  bool switch_branches = true;
  int sphere_seeds = 26;  // directional seeds per radius shell
};

/// Branches of the set { mu : grad h(mu) x mu = 0 } inside the window,
/// found by pseudo-arclength continuation from the origin and from
/// directional Newton seeds, with rank-drop detection (reported as
/// pitchfork markers) and branch switching at transversal crossings.
std::vector<REBranch> re_set_general(const ReducedSystem& sys,
                                     double window_radius,
                                     const ContinuationOptions& opts = {});

}  // namespace releq
