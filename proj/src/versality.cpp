#include "releq/versality.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <sstream>

namespace releq {

// ---------------------------------------------------------------------------
// MonomialBasis
// ---------------------------------------------------------------------------

MonomialBasis::MonomialBasis(int degree) : degree_(degree) {
  if (degree < 0) throw ConfigError("monomial degree must be >= 0");
  for (int g = 0; g <= degree; ++g)
    for (int i = g; i >= 0; --i)
      for (int j = g - i; j >= 0; --j)
        exps_.push_back({i, j, g - i - j});
}

int MonomialBasis::index(int i, int j, int k) const {
  if (i < 0 || j < 0 || k < 0 || i + j + k > degree_) return -1;
  // graded-lex position: offset of degree block + position within block
  const int g = i + j + k;
  const int block = g * (g + 1) * (g + 2) / 6;  // dimension(g-1)
  int within = 0;
  for (int ii = g; ii > i; --ii) within += g - ii + 1;
  within += (g - i) - j;
  return block + within;
}

std::string MonomialBasis::monomial_name(int idx) const {
  const auto& e = exps_[idx];
  if (e[0] + e[1] + e[2] == 0) return "1";
  std::ostringstream os;
  const char* names[3] = {"x", "y", "z"};
  for (int a = 0; a < 3; ++a) {
    if (e[a] == 0) continue;
    os << names[a];
    if (e[a] > 1) os << '^' << e[a];
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Poly
// ---------------------------------------------------------------------------

namespace {
const MonomialBasis& basis_for(int cap) {
  static std::map<int, MonomialBasis> cache;
  auto it = cache.find(cap);
  if (it == cache.end())
    it = cache.emplace(cap, MonomialBasis(cap)).first;
  return it->second;
}
}  // namespace

Poly Poly::constant(double c, int cap) {
  Poly p(cap);
  p.coef_(0) = c;
  return p;
}

Poly Poly::variable(int axis, int cap) {
  return monomial(1.0, axis == 0, axis == 1, axis == 2, cap);
}

Poly Poly::monomial(double c, int i, int j, int k, int cap) {
  Poly p(cap);
  const int idx = basis_for(cap).index(i, j, k);
  if (idx < 0) throw ConfigError("monomial degree exceeds the cap");
  p.coef_(idx) = c;
  return p;
}

double Poly::coefficient(int i, int j, int k) const {
  const int idx = basis_for(cap_).index(i, j, k);
  return idx < 0 ? 0.0 : coef_(idx);
}

void Poly::set_coefficient(int i, int j, int k, double c) {
  const int idx = basis_for(cap_).index(i, j, k);
  if (idx < 0) throw ConfigError("monomial degree exceeds the cap");
  coef_(idx) = c;
}

Poly Poly::truncated(int new_cap) const {
  Poly out(new_cap);
  const auto& bin = basis_for(cap_);
  const auto& bout = basis_for(new_cap);
  const int n = std::min(bin.size(), bout.size());
  // graded-lex order nests: the first dimension(min cap) entries agree
  out.coef_.head(n) = coef_.head(n);
  return out;
}

Poly Poly::derivative(int axis) const {
  Poly out(cap_);
  const auto& b = basis_for(cap_);
  for (int idx = 0; idx < b.size(); ++idx) {
    if (coef_(idx) == 0.0) continue;
    auto e = b.exponents(idx);
    if (e[axis] == 0) continue;
    const double c = coef_(idx) * e[axis];
    e[axis] -= 1;
    out.coef_(b.index(e[0], e[1], e[2])) += c;
  }
  return out;
}

double Poly::eval(const Vec3& mu) const {
  const auto& b = basis_for(cap_);
  double v = 0.0;
  for (int idx = 0; idx < b.size(); ++idx) {
    if (coef_(idx) == 0.0) continue;
    const auto& e = b.exponents(idx);
    double term = coef_(idx);
    for (int a = 0; a < 3; ++a)
      for (int k = 0; k < e[a]; ++k) term *= mu[a];
    v += term;
  }
  return v;
}

bool Poly::is_zero(double tol) const {
  return coef_.cwiseAbs().maxCoeff() <= tol;
}

Poly Poly::operator+(const Poly& o) const {
  const int cap = std::min(cap_, o.cap_);
  Poly out = truncated(cap);
  out.coef_ += o.truncated(cap).coef_;
  return out;
}

Poly Poly::operator-(const Poly& o) const {
  const int cap = std::min(cap_, o.cap_);
  Poly out = truncated(cap);
  out.coef_ -= o.truncated(cap).coef_;
  return out;
}

Poly Poly::operator*(const Poly& o) const {
  const int cap = std::min(cap_, o.cap_);
  Poly out(cap);
  const auto& ba = basis_for(cap_);
  const auto& bb = basis_for(o.cap_);
  const auto& bo = basis_for(cap);
  for (int ia = 0; ia < ba.size(); ++ia) {
    if (coef_(ia) == 0.0) continue;
    const auto& ea = ba.exponents(ia);
    for (int ib = 0; ib < bb.size(); ++ib) {
      if (o.coef_(ib) == 0.0) continue;
      const auto& eb = bb.exponents(ib);
      const int idx =
          bo.index(ea[0] + eb[0], ea[1] + eb[1], ea[2] + eb[2]);
      if (idx < 0) continue;  // truncated away
      out.coef_(idx) += coef_(ia) * o.coef_(ib);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PolyMatrix
// ---------------------------------------------------------------------------

PolyMatrix::PolyMatrix(int cap_) : cap(cap_) {
  for (auto& p : e) p = Poly(cap_);
}

PolyMatrix PolyMatrix::truncated(int new_cap) const {
  PolyMatrix out(new_cap);
  for (int i = 0; i < 6; ++i) out.e[i] = e[i].truncated(new_cap);
  return out;
}

VecX PolyMatrix::flattened() const {
  const int m = MonomialBasis::dimension(cap);
  VecX v(6 * m);
  for (int i = 0; i < 6; ++i) v.segment(i * m, m) = e[i].coefficients();
  return v;
}

PolyMatrix PolyMatrix::operator+(const PolyMatrix& o) const {
  PolyMatrix out(std::min(cap, o.cap));
  for (int i = 0; i < 6; ++i) out.e[i] = e[i] + o.e[i];
  return out;
}

PolyMatrix PolyMatrix::scaled(const Poly& q) const {
  PolyMatrix out(std::min(cap, q.cap()));
  for (int i = 0; i < 6; ++i) out.e[i] = e[i] * q;
  return out;
}

PolyMatrix map_jacobian(const Poly& h) {
  PolyMatrix F(h.cap());
  for (int a = 0; a < 3; ++a) {
    F.at(0, a) = h.derivative(a);
    F.at(1, a) = Poly::variable(a, h.cap());
  }
  return F;
}

// ---------------------------------------------------------------------------
// Generators
// ---------------------------------------------------------------------------

std::string VerticalGenerator::name() const {
  std::ostringstream os;
  os << (kind == Kind::Row ? "row" : "col") << '(' << to + 1 << "<-"
     << from + 1 << ')';
  return os.str();
}

const std::vector<VerticalGenerator>& vertical_generators() {
  static const std::vector<VerticalGenerator> gens = [] {
    std::vector<VerticalGenerator> g;
    using K = VerticalGenerator::Kind;
    // Row operations; rescaling the constraint row (2 <- 2) is omitted:
    // at first order it coincides with a simultaneous column rescaling.
    g.push_back({K::Row, 0, 0});
    g.push_back({K::Row, 0, 1});
    g.push_back({K::Row, 1, 0});
    for (int to = 0; to < 3; ++to)
      for (int from = 0; from < 3; ++from) g.push_back({K::Col, to, from});
    return g;
  }();
  return gens;
}

PolyMatrix apply_vertical(const VerticalGenerator& g, const PolyMatrix& F,
                          const Poly& q) {
  PolyMatrix out(std::min(F.cap, q.cap()));
  if (g.kind == VerticalGenerator::Kind::Row) {
    for (int c = 0; c < 3; ++c) out.at(g.to, c) = F.at(g.from, c) * q;
  } else {
    for (int r = 0; r < 2; ++r) out.at(r, g.to) = F.at(r, g.from) * q;
  }
  return out;
}

PolyMatrix source_derivative(const Poly& h, int axis, int cap) {
  PolyMatrix out(cap);
  for (int c = 0; c < 3; ++c)
    out.at(0, c) = h.derivative(c).derivative(axis).truncated(cap);
  out.at(1, axis) = Poly::constant(1.0, cap);
  return out;
}

// ---------------------------------------------------------------------------
// Spans
// ---------------------------------------------------------------------------

namespace {

MatX tangent_columns(const Poly& h, int degree, bool extended) {
  const MonomialBasis basis(degree);
  const int m = basis.size();
  const PolyMatrix F = map_jacobian(h).truncated(degree);

  std::vector<VecX> cols;
  // source-diffeomorphism part: xi_a(x) dF/dx_a
  for (int a = 0; a < 3; ++a) {
    const PolyMatrix dFa = source_derivative(h, a, degree);
    for (int qi = 0; qi < m; ++qi) {
      const auto& e = basis.exponents(qi);
      const int deg = e[0] + e[1] + e[2];
      if (!extended && deg == 0) continue;
      const Poly q = Poly::monomial(1.0, e[0], e[1], e[2], degree);
      cols.push_back(dFa.scaled(q).flattened());
    }
  }
  // vertical part: all polynomial multipliers
  for (const auto& g : vertical_generators()) {
    for (int qi = 0; qi < m; ++qi) {
      const auto& e = basis.exponents(qi);
      const Poly q = Poly::monomial(1.0, e[0], e[1], e[2], degree);
      cols.push_back(apply_vertical(g, F, q).flattened());
    }
  }

  MatX A(6 * m, static_cast<int>(cols.size()));
  for (int c = 0; c < A.cols(); ++c) A.col(c) = cols[c];
  return A;
}

struct RankResult {
  int rank;
  MatX basis;
  double gap;
};

RankResult orth_rank(const MatX& A, double rank_tol) {
  Eigen::BDCSVD<MatX> svd(A, Eigen::ComputeThinU);
  const VecX sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  int r = 0;
  while (r < sv.size() && sv(r) > rank_tol * std::max(smax, 1e-300)) ++r;
  RankResult out;
  out.rank = r;
  out.basis = svd.matrixU().leftCols(r);
  const double kept = r > 0 ? sv(r - 1) : 0.0;
  const double dropped = r < sv.size() ? sv(r) : 0.0;
  out.gap = dropped > 0 ? kept / dropped : std::numeric_limits<double>::infinity();
  return out;
}

}  // namespace

JetSpan tangent_space_span(const Poly& h, int degree, bool extended,
                           double rank_tol) {
  const MatX A = tangent_columns(h, degree, extended);
  const RankResult rr = orth_rank(A, rank_tol);
  JetSpan span;
  span.degree = degree;
  span.ambient_dim = static_cast<int>(A.rows());
  span.dim = rr.rank;
  span.basis = rr.basis;
  span.rank_gap = rr.gap;
  return span;
}

VersalityReport versality_check(const Poly& h,
                                const std::vector<PolyMatrix>& family_dirs,
                                int degree, double rank_tol) {
  const MatX A = tangent_columns(h, degree, true);
  MatX B(A.rows(), A.cols() + static_cast<int>(family_dirs.size()));
  B.leftCols(A.cols()) = A;
  for (size_t i = 0; i < family_dirs.size(); ++i)
    B.col(A.cols() + static_cast<int>(i)) =
        family_dirs[i].truncated(degree).flattened();

  VersalityReport rep;
  rep.degree = degree;
  rep.ambient_dim = static_cast<int>(A.rows());
  rep.tangent_dim = orth_rank(A, rank_tol).rank;
  rep.family_rank = orth_rank(B, rank_tol).rank;
  rep.missing = rep.ambient_dim - rep.family_rank;
  rep.versal = rep.missing == 0;
  return rep;
}

std::vector<PolyMatrix> linear_family_directions(int cap) {
  std::vector<PolyMatrix> dirs;
  for (int i = 0; i < 3; ++i) {
    PolyMatrix D(cap);
    D.at(0, i) = Poly::constant(1.0, cap);
    dirs.push_back(D);
  }
  return dirs;
}

bool determinacy_check(const Poly& h, int degree, double rank_tol) {
  const JetSpan span = tangent_space_span(h, degree, false, rank_tol);
  const int m = MonomialBasis::dimension(degree);
  const MonomialBasis basis(degree);
  // Targets: every jet whose entries have no constant term.
  const MatX& B = span.basis;
  double worst = 0.0;
  for (int entry = 0; entry < 6; ++entry)
    for (int idx = 0; idx < m; ++idx) {
      const auto& e = basis.exponents(idx);
      if (e[0] + e[1] + e[2] == 0) continue;
      VecX v = VecX::Zero(6 * m);
      v(entry * m + idx) = 1.0;
      const VecX res = v - B * (B.transpose() * v);
      worst = std::max(worst, res.norm());
    }
  return worst <= std::sqrt(rank_tol);
}

CodimReport codim_report(const Poly& h, int degree, double rank_tol) {
  const JetSpan span = tangent_space_span(h, degree, true, rank_tol);
  const int m = MonomialBasis::dimension(degree);
  const MonomialBasis basis(degree);

  CodimReport rep;
  rep.degree = degree;
  rep.ambient_dim = span.ambient_dim;
  rep.tangent_dim = span.dim;
  rep.codim = span.ambient_dim - span.dim;

  // Greedy readable complement: prefer constant matrices (first row then
  // second), then arbitrary coordinate jets.
  std::vector<std::pair<VecX, std::string>> candidates;
  for (int entry = 0; entry < 6; ++entry) {
    VecX v = VecX::Zero(6 * m);
    v(entry * m + 0) = 1.0;
    std::ostringstream os;
    os << "F" << (entry / 3) + 1 << (entry % 3) + 1 << "*1";
    candidates.emplace_back(v, os.str());
  }
  for (int entry = 0; entry < 6; ++entry)
    for (int idx = 1; idx < m; ++idx) {
      VecX v = VecX::Zero(6 * m);
      v(entry * m + idx) = 1.0;
      std::ostringstream os;
      os << "F" << (entry / 3) + 1 << (entry % 3) + 1 << "*"
         << basis.monomial_name(idx);
      candidates.emplace_back(v, os.str());
    }

  MatX aug = span.basis;  // orthonormal columns, grown as we accept
  rep.complement.resize(6 * m, rep.codim);
  int got = 0;
  for (const auto& [v, name] : candidates) {
    if (got >= rep.codim) break;
    VecX res = v - aug * (aug.transpose() * v);
    if (res.norm() <= 1e-6) continue;
    res.normalize();
    MatX next(aug.rows(), aug.cols() + 1);
    next.leftCols(aug.cols()) = aug;
    next.col(aug.cols()) = res;
    aug = std::move(next);
    rep.complement.col(got) = v;
    rep.complement_names.push_back(name);
    ++got;
  }
  if (got < rep.codim) {
    rep.complement.conservativeResize(Eigen::NoChange, got);
  }

  // Are the three constant first-row matrices an independent complement?
  rep.constant_row_complement = false;
  if (rep.codim == 3) {
    MatX W(6 * m, 3);
    for (int i = 0; i < 3; ++i) {
      VecX v = VecX::Zero(6 * m);
      v(i * m + 0) = 1.0;
      W.col(i) = v - span.basis * (span.basis.transpose() * v);
    }
    Eigen::JacobiSVD<MatX> svd(W);
    rep.constant_row_complement = svd.singularValues().minCoeff() > 1e-6;
  }
  return rep;
}

Poly model_poly(const QuadraticModel& m, int cap) {
  if (cap < 2) cap = 2;
  Poly h(cap);
  h.set_coefficient(2, 0, 0, m.a);
  h.set_coefficient(0, 2, 0, m.b);
  h.set_coefficient(0, 0, 2, m.c);
  return h;
}

}  // namespace releq
