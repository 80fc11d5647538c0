#include "releq/stability.hpp"

#include "releq/so3.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdlib>
#include <limits>
#include <thread>
#include <vector>

namespace releq {

MatX symplectic_matrix(int pairs) {
  const int n = 2 * pairs;
  MatX J = MatX::Zero(n, n);
  for (int i = 0; i < pairs; ++i) {
    J(i, pairs + i) = 1.0;
    J(pairs + i, i) = -1.0;
  }
  return J;
}

Linearization linearize_at(const ReducedSystem& sys, const Vec3& mu) {
  Linearization lin;
  SliceTracker tracker(sys);
  const VecX s = tracker.shape_at(mu);
  const int ns = sys.dim_s();
  const MatX J = symplectic_matrix(sys.shape_pairs);

  const Vec3 g = grad_mu(sys, mu, s);
  lin.xi = g;

  if (mu.norm() == 0.0) {
    lin.at_origin = true;
    // Block-triangular form on R^3 x R^{2n}: momentum perturbations feel
    // only the rigid rotation about xi; shape perturbations decouple
    // upward. Spectrum = {0, +-i|xi|} union spec(J H_ss).
    MatX L = MatX::Zero(3 + ns, 3 + ns);
    L.topLeftCorner<3, 3>() = -hat<double>(g);
    if (ns > 0) {
      const MatX Hsm = hess_smu(sys, mu, s);
      const MatX Hss = hess_ss(sys, mu, s);
      L.bottomLeftCorner(ns, 3) = J * Hsm;
      L.bottomRightCorner(ns, ns) = J * Hss;
      lin.shape_block = J * Hss;
      lin.Q = Hss;
    }
    lin.L = L;
    lin.lambda = std::numeric_limits<double>::infinity();
    lin.spectrum = Eigen::EigenSolver<MatX>(L, false).eigenvalues();
    return lin;
  }

  lin.lambda = multiplier_at(g, mu);
  lin.frame = sphere_tangent_frame(mu);
  const auto& E = lin.frame;

  const Mat3 Hmm = hess_mumu(sys, mu, s);
  MatX Q(2 + ns, 2 + ns);
  Q.topLeftCorner<2, 2>() =
      E.transpose() * (Hmm - lin.lambda * Mat3::Identity()) * E;
  if (ns > 0) {
    const MatX Hsm = hess_smu(sys, mu, s);  // ns x 3
    const MatX Hss = hess_ss(sys, mu, s);
    Q.topRightCorner(2, ns) = (Hsm * E).transpose();
    Q.bottomLeftCorner(ns, 2) = Hsm * E;
    Q.bottomRightCorner(ns, ns) = Hss;
  }
  Q = 0.5 * (Q + Q.transpose()).eval();
  lin.Q = Q;

  MatX P = MatX::Zero(2 + ns, 2 + ns);
  P(0, 1) = -mu.norm();
  P(1, 0) = mu.norm();
  if (ns > 0) P.bottomRightCorner(ns, ns) = J;
  lin.L = P * Q;
  lin.spectrum = Eigen::EigenSolver<MatX>(lin.L, false).eigenvalues();
  return lin;
}

namespace {

struct ClusterInfo {
  std::vector<int> members;
  std::complex<double> rep;
};

std::vector<ClusterInfo> cluster_eigenvalues(const Eigen::VectorXcd& ev,
                                             double tol) {
  std::vector<ClusterInfo> clusters;
  std::vector<bool> used(ev.size(), false);
  for (int i = 0; i < ev.size(); ++i) {
    if (used[i]) continue;
    ClusterInfo c;
    c.members.push_back(i);
    used[i] = true;
    for (int k = i + 1; k < ev.size(); ++k) {
      if (used[k]) continue;
      if (std::abs(ev(k) - ev(i)) <= tol) {
        c.members.push_back(k);
        used[k] = true;
      }
    }
    std::complex<double> sum = 0.0;
    for (int idx : c.members) sum += ev(idx);
    c.rep = sum / static_cast<double>(c.members.size());
    clusters.push_back(std::move(c));
  }
  return clusters;
}

bool spectrum_semisimple(const MatX& L, const Eigen::VectorXcd& ev,
                         double tol_rel) {
  const double scale = std::max(1.0, L.norm());
  const double ctol = tol_rel * scale;
  const auto clusters = cluster_eigenvalues(ev, ctol);
  const Eigen::MatrixXcd Lc = L.cast<std::complex<double>>();
  for (const auto& c : clusters) {
    Eigen::MatrixXcd A =
        Lc - c.rep * Eigen::MatrixXcd::Identity(L.rows(), L.cols());
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(A);
    const auto& sv = svd.singularValues();
    int geo = 0;
    for (int i = 0; i < sv.size(); ++i)
      if (sv(i) <= tol_rel * scale * 10) ++geo;
    if (geo < static_cast<int>(c.members.size())) return false;
  }
  return true;
}

// Definiteness of the energy-Casimir form restricted to each imaginary
// eigenvalue cluster (Krein signature test for strong stability).
bool krein_definite(const MatX& L, const MatX& Q, const Eigen::VectorXcd& ev,
                    double tol_rel, std::vector<int>* signs_out) {
  const double scale = std::max(1.0, L.norm());
  const double ctol = tol_rel * scale;
  Eigen::EigenSolver<MatX> es(L, true);
  const Eigen::VectorXcd lam = es.eigenvalues();
  const Eigen::MatrixXcd V = es.eigenvectors();
  const auto clusters = cluster_eigenvalues(lam, ctol);
  bool all_definite = true;
  for (const auto& c : clusters) {
    if (std::abs(c.rep) <= ctol) {
      all_definite = false;  // zero eigenvalue: boundary of stability
      if (signs_out) signs_out->push_back(0);
      continue;
    }
    if (c.rep.imag() <= 0.0) continue;  // conjugate cluster carries the same data
    int sign = 0;
    bool definite = true;
    for (int idx : c.members) {
      const Eigen::VectorXcd v = V.col(idx);
      const double q = (v.adjoint() * Q.cast<std::complex<double>>() * v)
                           .value()
                           .real();
      const double qn = q / std::max(1e-300, v.squaredNorm());
      int s = 0;
      if (qn > 1e-9 * std::max(1.0, Q.norm()))
        s = 1;
      else if (qn < -1e-9 * std::max(1.0, Q.norm()))
        s = -1;
      if (s == 0 || (sign != 0 && s != sign)) definite = false;
      if (sign == 0) sign = s;
    }
    if (signs_out) signs_out->push_back(definite ? sign : 0);
    if (!definite) all_definite = false;
  }
  (void)ev;
  return all_definite;
}

StabilityInfo classify_origin(const ReducedSystem& sys,
                              const StabilityOptions& opts) {
  StabilityInfo info;
  const Linearization lin = linearize_at(sys, Vec3::Zero());
  info.spectrum = lin.spectrum;
  double max_re = 0.0;
  for (int i = 0; i < lin.spectrum.size(); ++i)
    max_re = std::max(max_re, std::abs(lin.spectrum(i).real()));
  info.max_real_part = max_re;

  if (sys.dim_s() == 0) {
    // momentum spheres confine the flow: the equilibrium cannot escape
    info.cls = StabilityClass::LyapunovStable;
    return info;
  }

  Eigen::SelfAdjointEigenSolver<MatX> qe(lin.Q);  // Q = H_ss at the origin
  const VecX qs = qe.eigenvalues();
  const double qmin = qs.minCoeff(), qmax = qs.maxCoeff();
  const double qscale = std::max(1.0, lin.Q.norm());
  info.hessian_margin =
      (qmin > 0 || qmax < 0) ? std::min(std::abs(qmin), std::abs(qmax))
                             : -std::min(std::abs(qmin), std::abs(qmax));
  info.at_bifurcation =
      std::min(std::abs(qmin), std::abs(qmax)) < opts.bif_tol * qscale;
  if (qmin > opts.bif_tol * qscale || qmax < -opts.bif_tol * qscale) {
    info.cls = StabilityClass::LyapunovStable;
    return info;
  }
  const double lscale = std::max(1.0, lin.L.norm());
  if (max_re > opts.spectral_tol * lscale) {
    info.cls = StabilityClass::LinearlyUnstable;
    return info;
  }
  info.cls = spectrum_semisimple(lin.L, lin.spectrum, opts.semisimple_tol)
                 ? StabilityClass::Elliptic
                 : StabilityClass::SpectrallyStableDegenerate;
  return info;
}

}  // namespace

StabilityInfo classify(const ReducedSystem& sys, const Vec3& mu,
                       const StabilityOptions& opts) {
  if (mu.norm() <= opts.origin_tol) return classify_origin(sys, opts);

  StabilityInfo info;
  const Linearization lin = linearize_at(sys, mu);
  info.spectrum = lin.spectrum;

  Eigen::SelfAdjointEigenSolver<MatX> qe(lin.Q);
  const VecX qs = qe.eigenvalues();
  const double qmin = qs.minCoeff(), qmax = qs.maxCoeff();
  const double qscale = std::max(1.0, lin.Q.norm());
  const double abs_margin = std::min(std::abs(qmin), std::abs(qmax));
  const bool definite = qmin > 0.0 || qmax < 0.0;
  info.hessian_margin = definite ? abs_margin : -abs_margin;
  info.at_bifurcation = abs_margin < opts.bif_tol * qscale;

  if (definite && !info.at_bifurcation) {
    info.cls = StabilityClass::LyapunovStable;
    return info;
  }

  double max_re = 0.0;
  for (int i = 0; i < lin.spectrum.size(); ++i)
    max_re = std::max(max_re, std::abs(lin.spectrum(i).real()));
  info.max_real_part = max_re;
  const double lscale = std::max(1.0, lin.L.norm());

  if (max_re > opts.spectral_tol * lscale) {
    info.cls = StabilityClass::LinearlyUnstable;
    return info;
  }
  if (definite) {
    // definite but within the bifurcation band: stable, flagged
    info.cls = StabilityClass::LyapunovStable;
    return info;
  }
  if (!spectrum_semisimple(lin.L, lin.spectrum, opts.semisimple_tol)) {
    info.cls = StabilityClass::SpectrallyStableDegenerate;
    return info;
  }
  const bool strong =
      krein_definite(lin.L, lin.Q, lin.spectrum, opts.semisimple_tol,
                     &info.krein);
  if (strong && !info.at_bifurcation) {
    info.cls = StabilityClass::StronglyLinearlyStable;
    return info;
  }
  if (sys.dim_s() == 0) {
    // Shape-less leaves are two-dimensional: a cleanly imaginary spectrum
    // there implies a definite constrained Hessian, so the point is stable
    // (the elliptic case is promoted). If the eigenvalues themselves are
    // within tolerance of zero the linearization is genuinely degenerate.
    double min_im = std::numeric_limits<double>::infinity();
    for (int i = 0; i < lin.spectrum.size(); ++i)
      min_im = std::min(min_im, std::abs(lin.spectrum(i).imag()));
    info.cls = min_im > opts.spectral_tol * lscale
                   ? StabilityClass::LyapunovStable
                   : StabilityClass::SpectrallyStableDegenerate;
    return info;
  }
  // Mixed Krein signature or an eigenvalue collision with shape present:
  // genuinely elliptic.
  info.cls = StabilityClass::Elliptic;
  return info;
}

int stability_thread_count() {
  const char* env = std::getenv("RELEQ_THREADS");
  int n = 0;
  if (env) n = std::atoi(env);
  if (n <= 0) n = 1;
  return std::min(n, 64);
}

std::vector<int> classify_branch(const ReducedSystem& sys, REBranch& branch,
                                 const StabilityOptions& opts) {
  const int count = static_cast<int>(branch.samples.size());
  const int nthreads = std::min(stability_thread_count(), std::max(1, count));

  auto work = [&](int begin, int end) {
    for (int i = begin; i < end; ++i) {
      auto& s = branch.samples[i];
      try {
        const StabilityInfo info = classify(sys, s.mu, opts);
        s.stability = info.cls;
        s.at_bifurcation = s.at_bifurcation || info.at_bifurcation;
      } catch (const Error&) {
        s.stability = StabilityClass::Unclassified;
      }
    }
  };
  if (nthreads <= 1) {
    work(0, count);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (count + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
      const int b = t * chunk, e = std::min(count, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }

  std::vector<int> transitions;
  for (int i = 0; i + 1 < count; ++i)
    if (branch.samples[i].stability != branch.samples[i + 1].stability)
      transitions.push_back(i);
  return transitions;
}

bool resonance_check(const ReducedSystem& sys, double tol) {
  if (sys.dim_s() == 0) return false;
  const Linearization lin = linearize_at(sys, Vec3::Zero());
  const double rigid = lin.xi.norm();
  Eigen::VectorXcd internal =
      Eigen::EigenSolver<MatX>(lin.shape_block, false).eigenvalues();
  for (int i = 0; i < internal.size(); ++i) {
    const double w = std::abs(internal(i).imag());
    if (std::abs(w - rigid) <= tol * (1.0 + rigid)) return true;
  }
  return false;
}

}  // namespace releq
