#include "dh2/sdp.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <set>

namespace dh2::sdp {

int Var::scalar_count() const {
  switch (kind) {
    case VarKind::Symmetric: return vech_size(rows);
    case VarKind::Rectangular: return rows * cols;
    case VarKind::Scalar: return 1;
  }
  return 0;
}

namespace {

// Value of a term's variable block at y; r is the term rank for scalars.
Mat var_block(const Var& v, const Vec& y, Eigen::Index r) {
  switch (v.kind) {
    case VarKind::Symmetric: return unvech(y.segment(v.offset, v.scalar_count()), v.rows);
    case VarKind::Rectangular:
      return Eigen::Map<const Mat>(y.data() + v.offset, v.rows, v.cols);
    case VarKind::Scalar: return y(v.offset) * Mat::Identity(r, r);
  }
  return {};
}

void need(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::DimensionMismatch, what);
}

}  // namespace

AffineMatrixExpr& AffineMatrixExpr::add_constant(const Mat& c) {
  need(c.rows() == dim() && c.cols() == dim(), "constant has wrong size");
  constant_ += sym(c);
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::add_term(const Var& v, Mat L, Mat R) {
  need(v.valid(), "term references an undeclared variable");
  need(L.rows() == dim() && R.cols() == dim(), "term factors do not match expression size");
  if (v.kind == VarKind::Scalar) {
    need(L.cols() == R.rows(), "scalar term factors have mismatched rank");
  } else {
    need(L.cols() == v.rows && R.rows() == v.cols, "term factors do not match variable shape");
  }
  if (L.size() == 0 || R.size() == 0) return *this;
  terms_.push_back({v, std::move(L), std::move(R)});
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::add_congruence(const Var& v, const Mat& W, double scale) {
  need(v.kind == VarKind::Symmetric, "congruence needs a symmetric variable");
  return add_term(v, scale * W.transpose(), 0.5 * W);
}

AffineMatrixExpr& AffineMatrixExpr::add_congruence_diff(const Var& v, const Mat& a, const Mat& b) {
  need(v.kind == VarKind::Symmetric, "congruence needs a symmetric variable");
  need(a.rows() == b.rows() && a.cols() == b.cols(), "congruence factors differ in shape");
  return add_term(v, 0.5 * (a + b).transpose(), a - b);
}

AffineMatrixExpr& AffineMatrixExpr::add_cross(const Var& v, const Mat& A, const Mat& B,
                                              double scale) {
  return add_term(v, scale * A.transpose(), B);
}

AffineMatrixExpr& AffineMatrixExpr::add_scaled(const Var& v, const Mat& G) {
  need(v.kind == VarKind::Scalar, "add_scaled needs a scalar variable");
  need(G.rows() == dim() && G.cols() == dim(), "scaled matrix has wrong size");
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(G));
  const Vec& lam = es.eigenvalues();
  const double cut = 1e-14 * std::max(1.0, lam.cwiseAbs().maxCoeff());
  std::vector<Eigen::Index> keep;
  for (Eigen::Index k = 0; k < lam.size(); ++k)
    if (std::abs(lam(k)) > cut) keep.push_back(k);
  if (keep.empty()) return *this;
  Mat L(dim(), static_cast<Eigen::Index>(keep.size()));
  Mat R(static_cast<Eigen::Index>(keep.size()), dim());
  for (size_t c = 0; c < keep.size(); ++c) {
    L.col(c) = es.eigenvectors().col(keep[c]);
    R.row(c) = 0.5 * lam(keep[c]) * es.eigenvectors().col(keep[c]).transpose();
  }
  return add_term(v, std::move(L), std::move(R));
}

AffineMatrixExpr& AffineMatrixExpr::operator+=(const AffineMatrixExpr& other) {
  need(other.dim() == dim(), "adding expressions of different size");
  constant_ += other.constant_;
  terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
  return *this;
}

AffineMatrixExpr& AffineMatrixExpr::negate() {
  constant_ = -constant_;
  for (auto& t : terms_) t.R = -t.R;
  return *this;
}

Mat AffineMatrixExpr::evaluate(const Vec& y) const {
  Mat acc = Mat::Zero(dim(), dim());
  for (const auto& t : terms_) acc += t.L * var_block(t.var, y, t.L.cols()) * t.R;
  return constant_ + acc + acc.transpose();
}

LinearExpr& LinearExpr::add_scalar(const Var& v, double coef) {
  need(v.kind == VarKind::Scalar, "add_scalar needs a scalar variable");
  coeffs_.emplace_back(v.offset, coef);
  return *this;
}

LinearExpr& LinearExpr::add_inner(const Var& v, const Mat& G) {
  need(G.rows() == v.rows && G.cols() == v.cols, "inner-product weight has wrong shape");
  switch (v.kind) {
    case VarKind::Scalar: coeffs_.emplace_back(v.offset, G(0, 0)); break;
    case VarKind::Rectangular:
      for (int q = 0; q < v.cols; ++q)
        for (int p = 0; p < v.rows; ++p)
          if (G(p, q) != 0.0) coeffs_.emplace_back(v.offset + p + q * v.rows, G(p, q));
      break;
    case VarKind::Symmetric: {
      int idx = v.offset;
      for (int q = 0; q < v.rows; ++q)
        for (int p = q; p < v.rows; ++p, ++idx) {
          const double c = p == q ? G(p, p) : G(p, q) + G(q, p);
          if (c != 0.0) coeffs_.emplace_back(idx, c);
        }
      break;
    }
  }
  return *this;
}

LinearExpr& LinearExpr::scale(double s) {
  constant_ *= s;
  for (auto& c : coeffs_) c.second *= s;
  return *this;
}

double LinearExpr::evaluate(const Vec& y) const {
  double v = constant_;
  for (auto [i, c] : coeffs_) v += c * y(i);
  return v;
}

Var SdpProblem::push(VarKind kind, int rows, int cols, std::string name) {
  need(rows >= 0 && cols >= 0, "negative variable size");
  Var v;
  v.id = static_cast<int>(vars_.size());
  v.kind = kind;
  v.rows = rows;
  v.cols = cols;
  v.offset = scalar_count_;
  scalar_count_ += v.scalar_count();
  vars_.push_back(v);
  names_.push_back(std::move(name));
  return v;
}

Var SdpProblem::add_symmetric(int d, std::string name) {
  return push(VarKind::Symmetric, d, d, std::move(name));
}
Var SdpProblem::add_rectangular(int rows, int cols, std::string name) {
  return push(VarKind::Rectangular, rows, cols, std::move(name));
}
Var SdpProblem::add_scalar(std::string name) { return push(VarKind::Scalar, 1, 1, std::move(name)); }

void SdpProblem::check(const AffineMatrixExpr& e) const {
  for (const auto& t : e.terms()) {
    need(t.var.id >= 0 && t.var.id < static_cast<int>(vars_.size()) &&
             vars_[t.var.id].offset == t.var.offset,
         "expression references a variable of another problem");
  }
}

void SdpProblem::add_lmi(AffineMatrixExpr expr, Sense sense, double eps, std::string name) {
  check(expr);
  if (expr.dim() == 0) return;
  lmis_.push_back({std::move(expr), sense, eps, std::move(name)});
}

void SdpProblem::add_linear_ge(LinearExpr expr, double margin, std::string name) {
  for (auto [i, c] : expr.coeffs()) {
    (void)c;
    need(i >= 0 && i < scalar_count_, "linear constraint references an unknown scalar");
  }
  linear_.push_back({std::move(expr), margin, std::move(name)});
}

void SdpProblem::add_linear_le(LinearExpr expr, double margin, std::string name) {
  add_linear_ge(std::move(expr.scale(-1.0)), margin, std::move(name));
}

// Text format, one record per line, indices 1-based:
//   nvars N
//   blocks K            followed by "dims m_1 ... m_K" (linear rows are 1×1 blocks at the end)
//   b i value           objective of the dual form max bᵀy
//   F k i r c value     entry (r ≥ c) of the coefficient of y_i in block k; i = 0 is the constant
// Every block reads S_k = F_k0 + Σ_i y_i F_ki ⪰ 0.
void SdpProblem::write_triplets(std::ostream& os) const {
  os.precision(17);
  os << "nvars " << scalar_count_ << '\n';
  os << "blocks " << lmis_.size() + linear_.size() << '\n' << "dims";
  for (const auto& c : lmis_) os << ' ' << c.expr.dim();
  for (size_t l = 0; l < linear_.size(); ++l) os << " 1";
  os << '\n';
  std::map<int, double> b;
  for (auto [i, c] : objective_.coeffs()) b[i] -= c;
  for (auto [i, v] : b)
    if (v != 0.0) os << "b " << i + 1 << ' ' << v << '\n';

  auto emit = [&os](size_t blk, int var, const Mat& F) {
    for (Eigen::Index c = 0; c < F.cols(); ++c)
      for (Eigen::Index r = c; r < F.rows(); ++r)
        if (F(r, c) != 0.0)
          os << "F " << blk + 1 << ' ' << var << ' ' << r + 1 << ' ' << c + 1 << ' ' << F(r, c)
             << '\n';
  };
  Vec y = Vec::Zero(scalar_count_);
  for (size_t k = 0; k < lmis_.size(); ++k) {
    const auto& con = lmis_[k];
    const double s = con.sense == Sense::PositiveDefinite ? 1.0 : -1.0;
    const Mat C = s * con.expr.evaluate(y) - con.eps * Mat::Identity(con.expr.dim(), con.expr.dim());
    emit(k, 0, C);
    std::set<int> used;
    for (const auto& t : con.expr.terms())
      for (int i = 0; i < t.var.scalar_count(); ++i) used.insert(t.var.offset + i);
    for (int i : used) {
      y(i) = 1.0;
      emit(k, i + 1, s * con.expr.evaluate(y) - s * con.expr.constant());
      y(i) = 0.0;
    }
  }
  for (size_t l = 0; l < linear_.size(); ++l) {
    const size_t blk = lmis_.size() + l;
    const auto& con = linear_[l];
    std::map<int, double> a;
    for (auto [i, c] : con.expr.coeffs()) a[i] += c;
    emit(blk, 0, Mat::Constant(1, 1, con.expr.constant() - con.margin));
    for (auto [i, c] : a) emit(blk, i + 1, Mat::Constant(1, 1, c));
  }
}

const char* status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Feasible: return "feasible";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::NumericalFailure: return "numerical-failure";
    case SolveStatus::Budget: return "budget";
  }
  return "?";
}

Mat SdpSolution::value(const Var& v) const {
  need(v.offset + v.scalar_count() <= y.size(), "variable outside the solution vector");
  return var_block(v, y, 1);
}

double SdpSolution::scalar(const Var& v) const {
  need(v.kind == VarKind::Scalar, "scalar() needs a scalar variable");
  return y(v.offset);
}

MarginReport check_margins(const SdpProblem& problem, const Vec& y) {
  MarginReport rep;
  rep.verified = true;
  rep.strict = true;
  for (const auto& con : problem.matrix_constraints()) {
    const Mat val = con.expr.evaluate(y);
    const double s = con.sense == Sense::PositiveDefinite ? 1.0 : -1.0;
    const double m = lambda_min(s * val) - con.eps;
    rep.lmi_margins.push_back(m);
    if (!(m >= -1e-10 * (1.0 + norm2(val)))) rep.verified = false;
    if (!(m > 0.0)) rep.strict = false;
  }
  for (const auto& con : problem.linear_constraints()) {
    const double v = con.expr.evaluate(y);
    const double m = v - con.margin;
    rep.linear_margins.push_back(m);
    if (!(m >= -1e-10 * (1.0 + std::abs(v)))) rep.verified = false;
    if (!(m > 0.0)) rep.strict = false;
  }
  return rep;
}

BisectionResult bisect_gamma(const std::function<SdpProblem(double)>& builder, double lo,
                             double hi, double rel_tol, const SolverSettings& settings) {
  if (!(lo > 0.0 && hi >= lo)) throw Error(ErrorCode::DimensionMismatch, "invalid bisection bracket");
  BisectionResult res;
  SdpSolution at_hi = solve(builder(hi), settings);
  ++res.probes;
  if (at_hi.status != SolveStatus::Feasible)
    throw Error(ErrorCode::InfeasibleAtHi,
                "problem is not feasible at the upper bracket end (" +
                    std::string(status_name(at_hi.status)) + ")");
  res.gamma = hi;
  res.solution = std::move(at_hi);
  SdpSolution at_lo = solve(builder(lo), settings);
  ++res.probes;
  if (at_lo.status == SolveStatus::Feasible) {
    res.gamma = lo;
    res.solution = std::move(at_lo);
    return res;
  }
  while (hi - lo > rel_tol * hi) {
    const double mid = 0.5 * (lo + hi);
    SdpSolution s = solve(builder(mid), settings);
    ++res.probes;
    if (s.status == SolveStatus::Budget) break;
    if (s.status == SolveStatus::Feasible) {
      hi = mid;
      res.gamma = mid;
      res.solution = std::move(s);
    } else {
      lo = mid;
    }
  }
  return res;
}

}  // namespace dh2::sdp
