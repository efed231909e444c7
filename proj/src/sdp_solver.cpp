// Primal-dual interior-point method for
//   max bᵀy  s.t.  S_k = C_k + Σ_i y_i F_ki ⪰ 0   (dual form, y free)
//   min Σ⟨C_k, X_k⟩  s.t.  Σ_k ⟨F_ki, X_k⟩ = −b_i, X_k ⪰ 0   (primal form)
// with the HKM search direction and Mehrotra predictor-corrector steps.
// Linear rows are 1×1 blocks handled as vectors.

#include "dh2/sdp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace dh2::sdp {

namespace {

using Clock = std::chrono::steady_clock;
using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Elem {
  int p, q;
};

// Unit directions of one variable: each basis entry is a sum of elementary
// matrices e_p e_qᵀ (two for off-diagonal symmetric entries, r for scalars).
struct Basis {
  std::vector<int> global;  // decision-vector index per entry
  std::vector<int> start;   // elems[start[b] .. start[b+1])
  std::vector<Elem> elems;
};

Basis make_basis(const Var& v, int rank) {
  Basis b;
  auto open = [&](int g) {
    b.global.push_back(g);
    b.start.push_back(static_cast<int>(b.elems.size()));
  };
  switch (v.kind) {
    case VarKind::Scalar:
      open(v.offset);
      for (int k = 0; k < rank; ++k) b.elems.push_back({k, k});
      break;
    case VarKind::Rectangular:
      for (int q = 0; q < v.cols; ++q)
        for (int p = 0; p < v.rows; ++p) {
          open(v.offset + p + q * v.rows);
          b.elems.push_back({p, q});
        }
      break;
    case VarKind::Symmetric: {
      int idx = v.offset;
      for (int q = 0; q < v.rows; ++q)
        for (int p = q; p < v.rows; ++p) {
          open(idx++);
          b.elems.push_back({p, q});
          if (p != q) b.elems.push_back({q, p});
        }
      break;
    }
  }
  b.start.push_back(static_cast<int>(b.elems.size()));
  return b;
}

struct CTerm {
  Var var;
  Mat L, R;
  Basis basis;
};

struct Block {
  int m = 0;
  Mat C;
  std::vector<CTerm> terms;
};

struct LpRow {
  std::vector<std::pair<int, double>> a;  // merged, sorted
  double c = 0.0;
};

Mat var_value(const Var& v, const Vec& y, Eigen::Index r) {
  switch (v.kind) {
    case VarKind::Symmetric: return unvech(y.segment(v.offset, v.scalar_count()), v.rows);
    case VarKind::Rectangular: return Eigen::Map<const Mat>(y.data() + v.offset, v.rows, v.cols);
    case VarKind::Scalar: return y(v.offset) * Mat::Identity(r, r);
  }
  return {};
}

struct Compiled {
  int n = 0;
  Vec b;
  std::vector<Block> blocks;
  std::vector<LpRow> lp;
  double normC = 0.0;
  double normB = 0.0;
};

Compiled compile(const SdpProblem& problem) {
  Compiled cp;
  cp.n = problem.scalar_count();
  cp.b = Vec::Zero(cp.n);
  for (auto [i, c] : problem.objective().coeffs()) cp.b(i) -= c;
  double c2 = 0.0;
  for (const auto& con : problem.matrix_constraints()) {
    const double s = con.sense == Sense::PositiveDefinite ? 1.0 : -1.0;
    Block blk;
    blk.m = con.expr.dim();
    blk.C = s * con.expr.constant() - con.eps * Mat::Identity(blk.m, blk.m);
    for (const auto& t : con.expr.terms()) {
      CTerm ct{t.var, t.L, s * t.R, make_basis(t.var, static_cast<int>(t.L.cols()))};
      blk.terms.push_back(std::move(ct));
    }
    c2 += blk.C.squaredNorm();
    cp.blocks.push_back(std::move(blk));
  }
  for (const auto& con : problem.linear_constraints()) {
    std::map<int, double> merged;
    for (auto [i, c] : con.expr.coeffs()) merged[i] += c;
    LpRow row;
    for (auto [i, c] : merged)
      if (c != 0.0) row.a.emplace_back(i, c);
    row.c = con.expr.constant() - con.margin;
    c2 += row.c * row.c;
    cp.lp.push_back(std::move(row));
  }
  cp.normC = std::sqrt(c2);
  cp.normB = cp.b.norm();
  return cp;
}

// 𝓕(y) per block, optionally with the constant.
std::vector<Mat> apply_blocks(const Compiled& cp, const Vec& y, bool with_constant) {
  std::vector<Mat> out;
  out.reserve(cp.blocks.size());
  for (const auto& blk : cp.blocks) {
    Mat acc = Mat::Zero(blk.m, blk.m);
    for (const auto& t : blk.terms) acc.noalias() += t.L * var_value(t.var, y, t.L.cols()) * t.R;
    Mat v = acc + acc.transpose();
    if (with_constant) v += blk.C;
    out.push_back(std::move(v));
  }
  return out;
}

Vec apply_lp(const Compiled& cp, const Vec& y, bool with_constant) {
  Vec out(cp.lp.size());
  for (size_t l = 0; l < cp.lp.size(); ++l) {
    double v = with_constant ? cp.lp[l].c : 0.0;
    for (auto [i, a] : cp.lp[l].a) v += a * y(i);
    out(l) = v;
  }
  return out;
}

// 𝓕*(Q)_i = Σ_k ⟨F_ki, Q_k⟩ + Σ_l a_li q_l; Q_k must be symmetric.
Vec adjoint(const Compiled& cp, const std::vector<Mat>& Q, const Vec& qlp) {
  Vec out = Vec::Zero(cp.n);
  for (size_t k = 0; k < cp.blocks.size(); ++k) {
    for (const auto& t : cp.blocks[k].terms) {
      const Mat P = t.R * Q[k] * t.L;  // c×r; ⟨F, Q⟩ = 2 Σ P(q, p)
      const Basis& B = t.basis;
      for (size_t e = 0; e < B.global.size(); ++e) {
        double v = 0.0;
        for (int j = B.start[e]; j < B.start[e + 1]; ++j) v += P(B.elems[j].q, B.elems[j].p);
        out(B.global[e]) += 2.0 * v;
      }
    }
  }
  for (size_t l = 0; l < cp.lp.size(); ++l)
    for (auto [i, a] : cp.lp[l].a) out(i) += a * qlp(l);
  return out;
}

double inner(const Mat& a, const Mat& b) { return a.cwiseProduct(b).sum(); }

// Largest α with X + α·dX ⪰ 0 (kInf when dX ⪰ 0 along the ray).
double max_step(const Mat& X, const Mat& dX) {
  Eigen::LLT<Mat> llt(X);
  if (llt.info() != Eigen::Success) return 0.0;
  Mat T = llt.matrixL().solve(dX);
  T = llt.matrixL().solve(T.transpose()).transpose();
  const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(sym(T), Eigen::EigenvaluesOnly)
                          .eigenvalues()
                          .minCoeff();
  return lmin >= 0.0 ? kInf : -1.0 / lmin;
}

double max_step_lp(const Vec& x, const Vec& dx) {
  double a = kInf;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (dx(i) < 0.0) a = std::min(a, -x(i) / dx(i));
  return a;
}

class SchurSystem {
 public:
  SchurSystem(const Compiled& cp, std::size_t memory_cap) : cp_(cp) {
    // Pattern: pairs of unknowns sharing a block, plus short linear rows.
    std::set<std::pair<int, int>> pattern;
    for (const auto& blk : cp.blocks) {
      std::set<int> idx;
      for (const auto& t : blk.terms) idx.insert(t.basis.global.begin(), t.basis.global.end());
      for (int i : idx)
        for (int j : idx) {
          if (j > i) break;
          pattern.emplace(i, j);
          if (pattern.size() > 4'000'000) break;
        }
      if (pattern.size() > 4'000'000) break;
    }
    const double full = 0.5 * double(cp.n) * (cp.n + 1);
    for (size_t l = 0; l < cp.lp.size(); ++l) {
      if (cp.lp[l].a.size() > kLongRow) {
        long_rows_.push_back(static_cast<int>(l));
        continue;
      }
      for (auto [i, ai] : cp.lp[l].a)
        for (auto [j, aj] : cp.lp[l].a)
          if (j <= i) pattern.emplace(i, j);
    }
    dense_ = cp.n <= 300 || pattern.size() > 4'000'000 || double(pattern.size()) > 0.3 * full;
    if (dense_) {
      // Long rows are cheap rank-one updates of a dense matrix.
      long_rows_.clear();
      const double bytes = double(cp.n) * cp.n * sizeof(double);
      if (bytes > double(memory_cap)) {
        std::ostringstream os;
        os << "dense Schur complement needs " << bytes / (1 << 20) << " MiB, cap is "
           << memory_cap / (1 << 20) << " MiB";
        over_budget_ = os.str();
        return;
      }
      dense_M_.resize(cp.n, cp.n);
    } else {
      triplets_.reserve(pattern.size() + cp.n);
    }
  }

  const std::string& over_budget() const { return over_budget_; }
  bool dense() const { return dense_; }
  int low_rank_rows() const { return static_cast<int>(long_rows_.size()); }

  // Assembles M = [tr(F_i X F_j S⁻¹)] and factorizes it; false on failure.
  bool factorize(const std::vector<Mat>& X, const std::vector<Mat>& Sinv, const Vec& xlp,
                 const Vec& slp) {
    for (double shift : {0.0, 1e-12, 1e-9, 1e-6}) {
      if (assemble_and_factor(X, Sinv, xlp, slp, shift)) return true;
    }
    return false;
  }

  Vec solve(const Vec& rhs) const {
    if (dense_) return dense_llt_->solve(rhs);
    Vec z = sparse_ldlt_.solve(rhs);
    if (!long_rows_.empty()) {
      const Vec t = cap_llt_.solve(U_.transpose() * z);
      z -= MinvU_ * t;
    }
    return z;
  }

 private:
  static constexpr size_t kLongRow = 48;

  template <class Sink>
  void block_pairs(const std::vector<Mat>& X, const std::vector<Mat>& Sinv, Sink&& sink) const {
    for (size_t k = 0; k < cp_.blocks.size(); ++k) {
      const auto& terms = cp_.blocks[k].terms;
      const Mat& G = X[k];
      const Mat& H = Sinv[k];
      const size_t nt = terms.size();
      std::vector<Mat> GL(nt), GR(nt), HL(nt), HR(nt);
      for (size_t t = 0; t < nt; ++t) {
        GL[t] = G * terms[t].L;
        GR[t] = G * terms[t].R.transpose();
        HL[t] = H * terms[t].L;
        HR[t] = H * terms[t].R.transpose();
      }
      for (size_t t1 = 0; t1 < nt; ++t1) {
        for (size_t t2 = t1; t2 < nt; ++t2) {
          const CTerm& a = terms[t1];
          const CTerm& b = terms[t2];
          // entry for e_p e_qᵀ (term a) and e_r e_sᵀ (term b):
          //   A(q,r)B(s,p) + C(q,s)D(r,p) + E(p,r)F(s,q) + G(p,s)H(r,q)
          const Mat A = a.R * GL[t2];
          const Mat B = b.R * HL[t1];
          const Mat Cm = a.R * GR[t2];
          const Mat D = b.L.transpose() * HL[t1];
          const Mat E = a.L.transpose() * GL[t2];
          const Mat F = b.R * HR[t1];
          const Mat Gm = a.L.transpose() * GR[t2];
          const Mat Hm = b.L.transpose() * HR[t1];
          const Basis& ba = a.basis;
          const Basis& bb = b.basis;
          const bool same = t1 == t2;
          for (size_t i = 0; i < ba.global.size(); ++i) {
            const int gi = ba.global[i];
            const size_t jend = same ? i + 1 : bb.global.size();
            for (size_t j = 0; j < jend; ++j) {
              const int gj = bb.global[j];
              double v = 0.0;
              for (int ea = ba.start[i]; ea < ba.start[i + 1]; ++ea) {
                const int p = ba.elems[ea].p, q = ba.elems[ea].q;
                for (int eb = bb.start[j]; eb < bb.start[j + 1]; ++eb) {
                  const int r = bb.elems[eb].p, s = bb.elems[eb].q;
                  v += A(q, r) * B(s, p) + Cm(q, s) * D(r, p) + E(p, r) * F(s, q) +
                       Gm(p, s) * Hm(r, q);
                }
              }
              if (same) {
                sink(gi, gj, v);
              } else if (gi == gj) {
                sink(gi, gj, 2.0 * v);
              } else {
                sink(std::max(gi, gj), std::min(gi, gj), v);
              }
            }
          }
        }
      }
    }
  }

  bool assemble_and_factor(const std::vector<Mat>& X, const std::vector<Mat>& Sinv,
                           const Vec& xlp, const Vec& slp, double shift) {
    std::vector<bool> is_long(cp_.lp.size(), false);
    for (int l : long_rows_) is_long[l] = true;
    if (dense_) {
      dense_M_.triangularView<Eigen::Lower>().setZero();
      block_pairs(X, Sinv, [this](int i, int j, double v) { dense_M_(i, j) += v; });
      for (size_t l = 0; l < cp_.lp.size(); ++l) {
        const double w = xlp(l) / slp(l);
        for (auto [i, ai] : cp_.lp[l].a)
          for (auto [j, aj] : cp_.lp[l].a)
            if (j <= i) dense_M_(i, j) += w * ai * aj;
      }
      regularize_dense(shift);
      dense_llt_.emplace(dense_M_);  // factorizes in place
      return dense_llt_->info() == Eigen::Success;
    }
    triplets_.clear();
    block_pairs(X, Sinv, [this](int i, int j, double v) { triplets_.emplace_back(i, j, v); });
    for (size_t l = 0; l < cp_.lp.size(); ++l) {
      if (is_long[l]) continue;
      const double w = xlp(l) / slp(l);
      for (auto [i, ai] : cp_.lp[l].a)
        for (auto [j, aj] : cp_.lp[l].a)
          if (j <= i) triplets_.emplace_back(i, j, w * ai * aj);
    }
    for (int i = 0; i < cp_.n; ++i) triplets_.emplace_back(i, i, 0.0);
    sparse_M_.resize(cp_.n, cp_.n);
    sparse_M_.setFromTriplets(triplets_.begin(), triplets_.end());
    double dmax = 0.0;
    for (int i = 0; i < cp_.n; ++i) dmax = std::max(dmax, std::abs(sparse_M_.coeff(i, i)));
    for (int i = 0; i < cp_.n; ++i) {
      double& d = sparse_M_.coeffRef(i, i);
      d += shift * dmax + (d == 0.0 ? 1.0 : 1e-15 * dmax);
    }
    if (!analyzed_) {
      sparse_ldlt_.analyzePattern(sparse_M_);
      analyzed_ = true;
    }
    sparse_ldlt_.factorize(sparse_M_);
    if (sparse_ldlt_.info() != Eigen::Success) return false;
    if (!long_rows_.empty()) {
      const int k = static_cast<int>(long_rows_.size());
      U_ = Mat::Zero(cp_.n, k);
      Vec dinv(k);
      for (int c = 0; c < k; ++c) {
        const int l = long_rows_[c];
        for (auto [i, a] : cp_.lp[l].a) U_(i, c) = a;
        dinv(c) = slp(l) / xlp(l);
      }
      MinvU_ = sparse_ldlt_.solve(U_);
      Mat cap = U_.transpose() * MinvU_;
      cap.diagonal() += dinv;
      cap_llt_.compute(sym(cap));
      if (cap_llt_.info() != Eigen::Success) return false;
    }
    return true;
  }

  void regularize_dense(double shift) {
    const double dmax = dense_M_.diagonal().cwiseAbs().maxCoeff();
    for (int i = 0; i < cp_.n; ++i) {
      double& d = dense_M_(i, i);
      d += shift * dmax + (d == 0.0 ? 1.0 : 1e-15 * dmax);
    }
  }

  const Compiled& cp_;
  bool dense_ = true;
  std::string over_budget_;
  std::vector<int> long_rows_;
  Mat dense_M_;
  std::optional<Eigen::LLT<Eigen::Ref<Mat>>> dense_llt_;
  std::vector<Triplet> triplets_;
  SpMat sparse_M_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower> sparse_ldlt_;
  bool analyzed_ = false;
  Mat U_, MinvU_;
  Eigen::LLT<Mat> cap_llt_;
};

struct Direction {
  Vec dy;
  std::vector<Mat> dX, dS;
  Vec dx, ds;
};

// Projects X/|⟨C,X⟩| onto ker 𝓕* (Frobenius metric), giving X̃ with
// 𝓕*(X̃) ≈ 0. For any y with S = C + 𝓕(y) ⪰ 0,
//   ⟨C, X̃⟩ = ⟨S, X̃⟩ − yᵀ𝓕*(X̃) ≥ −ν·tr(S) − ‖y‖·‖𝓕*(X̃)‖,
// where ν is the largest negative eigenvalue magnitude of X̃. Returns the
// trace radius |⟨C, X̃⟩| / ν below which no feasible point exists (0 if none).
double infeasibility_radius(const Compiled& cp, SchurSystem& gram, const std::vector<Mat>& X,
                            const Vec& xl, double pobj, double fmax) {
  const size_t nb = X.size();
  std::vector<Mat> Xn(nb), eye(nb);
  for (size_t k = 0; k < nb; ++k) {
    Xn[k] = X[k] / std::abs(pobj);
    eye[k] = Mat::Identity(X[k].rows(), X[k].cols());
  }
  Vec xn = xl / std::abs(pobj);
  const Vec ones = Vec::Ones(xl.size());
  if (!gram.factorize(eye, eye, ones, ones)) return 0.0;
  const Vec z = gram.solve(adjoint(cp, Xn, xn));
  const std::vector<Mat> Fz = apply_blocks(cp, z, false);
  xn -= apply_lp(cp, z, false);
  double cx = 0.0, nu = 0.0;
  for (size_t k = 0; k < nb; ++k) {
    Xn[k] = sym(Xn[k] - Fz[k]);
    nu = std::max(nu, -lambda_min(Xn[k]));
    cx += inner(cp.blocks[k].C, Xn[k]);
  }
  for (Eigen::Index l = 0; l < xn.size(); ++l) {
    nu = std::max(nu, -xn(l));
    cx += cp.lp[l].c * xn(l);
  }
  if (!(cx < 0.0)) return 0.0;
  if (adjoint(cp, Xn, xn).norm() * fmax > 1e-10 * std::abs(cx)) return 0.0;
  return nu <= 0.0 ? kInf : std::abs(cx) / nu;
}

}  // namespace

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings) {
  const auto t0 = Clock::now();
  SdpSolution sol;
  const Compiled cp = compile(problem);
  const int n = cp.n;
  const size_t nb = cp.blocks.size();
  const int nl = static_cast<int>(cp.lp.size());
  sol.y = Vec::Zero(n);
  const bool feasibility = !problem.has_objective();

  auto finish = [&](SolveStatus st, std::string msg) {
    const MarginReport mr = check_margins(problem, sol.y);
    sol.lmi_margins = mr.lmi_margins;
    sol.linear_margins = mr.linear_margins;
    sol.verified = mr.verified;
    if (st == SolveStatus::Feasible && !mr.verified) {
      st = SolveStatus::NumericalFailure;
      msg += "; returned point fails the margin re-check";
    }
    sol.status = st;
    sol.message = std::move(msg);
    sol.objective = problem.objective().evaluate(sol.y);
    sol.stats.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    return sol;
  };

  if (nb == 0 && nl == 0) return finish(SolveStatus::Feasible, "no constraints");

  SchurSystem schur(cp, settings.memory_cap_bytes);
  sol.stats.dense_schur = schur.dense();
  sol.stats.low_rank_rows = schur.low_rank_rows();
  if (!schur.over_budget().empty()) return finish(SolveStatus::Budget, schur.over_budget());

  // Starting point.
  std::vector<Mat> X(nb), S(nb);
  double bmax = cp.b.size() ? cp.b.cwiseAbs().maxCoeff() : 0.0;
  for (size_t k = 0; k < nb; ++k) {
    const Block& blk = cp.blocks[k];
    double fmax = 0.0;
    for (const auto& t : blk.terms) fmax = std::max(fmax, 2.0 * t.L.norm() * t.R.norm());
    const double m = blk.m;
    const double xi = std::max({10.0, std::sqrt(m), m * (1.0 + bmax) / (1.0 + fmax)});
    const double eta = std::max({10.0, std::sqrt(m), blk.C.norm(), fmax});
    X[k] = xi * Mat::Identity(blk.m, blk.m);
    S[k] = eta * Mat::Identity(blk.m, blk.m);
  }
  Vec xl(nl), sl(nl);
  for (int l = 0; l < nl; ++l) {
    double an = 0.0;
    for (auto [i, a] : cp.lp[l].a) an += a * a;
    an = std::sqrt(an);
    xl(l) = std::max(10.0, (1.0 + bmax) / (1.0 + an));
    sl(l) = std::max({10.0, std::abs(cp.lp[l].c), an});
  }
  double dim_total = nl;
  for (const auto& blk : cp.blocks) dim_total += blk.m;

  Vec& y = sol.y;
  double mu0 = -1.0;
  double fmax_all = 1.0;
  for (const auto& blk : cp.blocks)
    for (const auto& t : blk.terms) fmax_all = std::max(fmax_all, 2.0 * t.L.norm() * t.R.norm());
  for (const auto& row : cp.lp)
    for (auto [i, a] : row.a) fmax_all = std::max(fmax_all, std::abs(a));

  auto deadline_hit = [&] { return settings.deadline && Clock::now() >= *settings.deadline; };

  // Best verified iterate seen so far (feasibility mode).
  Vec best_y;
  double best_margin = -kInf;

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    sol.stats.iterations = iter;
    if (deadline_hit()) return finish(SolveStatus::Budget, "time budget exhausted");

    const std::vector<Mat> Fy = apply_blocks(cp, y, true);
    const Vec gy = apply_lp(cp, y, true);
    std::vector<Mat> Rd(nb);
    double rd2 = 0.0, gap = 0.0, pobj = 0.0;
    for (size_t k = 0; k < nb; ++k) {
      Rd[k] = Fy[k] - S[k];
      rd2 += Rd[k].squaredNorm();
      gap += inner(X[k], S[k]);
      pobj += inner(cp.blocks[k].C, X[k]);
    }
    const Vec rdl = gy - sl;
    rd2 += rdl.squaredNorm();
    gap += xl.dot(sl);
    for (int l = 0; l < nl; ++l) pobj += cp.lp[l].c * xl(l);
    const Vec FX = adjoint(cp, X, xl);
    const Vec rp = -cp.b - FX;
    const double mu = gap / dim_total;
    if (mu0 < 0.0) mu0 = mu;
    const double dobj = cp.b.dot(y);
    sol.stats.primal_infeasibility = rp.norm() / (1.0 + cp.normB);
    sol.stats.dual_infeasibility = std::sqrt(rd2) / (1.0 + cp.normC);
    sol.stats.relative_gap = std::abs(gap) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (settings.verbose) {
      std::cerr << "iter " << iter << " mu " << mu << " pinf " << sol.stats.primal_infeasibility
                << " dinf " << sol.stats.dual_infeasibility << " gap "
                << sol.stats.relative_gap << " pobj " << pobj << " ray "
                << FX.norm() * fmax_all / (std::abs(pobj) * (1.0 + cp.normC)) << '\n';
    }

    // Direct strict-feasibility check of C + 𝓕(y).
    double margin = kInf;
    for (size_t k = 0; k < nb && margin > 0.0; ++k)
      margin = std::min(margin, lambda_min(Fy[k]) / (1.0 + Fy[k].norm()));
    for (int l = 0; l < nl; ++l) margin = std::min(margin, gy(l) / (1.0 + std::abs(gy(l))));
    if (feasibility && margin > 0.0) {
      if (margin > best_margin) {
        best_margin = margin;
        best_y = y;
      }
      if (mu <= settings.feasibility_mu_drop * mu0)
        return finish(SolveStatus::Feasible, "strictly feasible point found");
    }
    if (!feasibility && sol.stats.primal_infeasibility <= settings.tolerance &&
        sol.stats.dual_infeasibility <= settings.tolerance &&
        sol.stats.relative_gap <= settings.tolerance)
      return finish(SolveStatus::Feasible, "converged");

    // Infeasibility certificate: X ⪰ 0 with 𝓕*(X) = 0 and ⟨C, X⟩ < 0. Once the
    // iterate points that way, project it onto ker 𝓕* and bound the region it excludes.
    if (pobj < 0.0 && FX.norm() * fmax_all <= 1e-3 * std::abs(pobj) * (1.0 + cp.normC) &&
        best_y.size() == 0) {
      const double radius = infeasibility_radius(cp, schur, X, xl, pobj, fmax_all);
      if (settings.verbose) std::cerr << "  infeasibility radius " << radius << '\n';
      if (radius >= settings.infeasibility_radius * (1.0 + cp.normC)) {
        std::ostringstream os;
        os << "projected primal ray certifies infeasibility";
        if (std::isfinite(radius)) os << " (no feasible point with trace(S) < " << radius << ")";
        return finish(SolveStatus::Infeasible, os.str());
      }
    }
    if (feasibility && pobj < 0.0 && mu > 1e12 * mu0 && best_y.size() == 0)
      return finish(SolveStatus::NumericalFailure,
                    "primal iterates diverge but no infeasibility certificate was confirmed");

    std::vector<Mat> Sinv(nb);
    bool s_ok = true;
    for (size_t k = 0; k < nb && s_ok; ++k) {
      Eigen::LLT<Mat> llt(S[k]);
      s_ok = llt.info() == Eigen::Success;
      Sinv[k] = sym(llt.solve(Mat::Identity(S[k].rows(), S[k].cols())));
    }
    if (!s_ok) break;
    if (deadline_hit()) return finish(SolveStatus::Budget, "time budget exhausted");
    if (!schur.factorize(X, Sinv, xl, sl)) break;
    if (deadline_hit()) return finish(SolveStatus::Budget, "time budget exhausted");

    // Direction for a given complementarity target R_c (per block) and r_c (linear rows).
    auto direction = [&](const std::vector<Mat>& Rc, const Vec& rcl) {
      Direction d;
      std::vector<Mat> Q(nb);
      for (size_t k = 0; k < nb; ++k) Q[k] = sym((Rc[k] - X[k] * Rd[k]) * Sinv[k]);
      Vec ql(nl);
      for (int l = 0; l < nl; ++l) ql(l) = (rcl(l) - xl(l) * rdl(l)) / sl(l);
      const Vec rhs = adjoint(cp, Q, ql) - rp;
      d.dy = schur.solve(rhs);
      const std::vector<Mat> Fdy = apply_blocks(cp, d.dy, false);
      const Vec gdy = apply_lp(cp, d.dy, false);
      d.dS.resize(nb);
      d.dX.resize(nb);
      for (size_t k = 0; k < nb; ++k) {
        d.dS[k] = Rd[k] + Fdy[k];
        d.dX[k] = sym((Rc[k] - X[k] * d.dS[k]) * Sinv[k]);
      }
      d.ds = rdl + gdy;
      d.dx.resize(nl);
      for (int l = 0; l < nl; ++l) d.dx(l) = (rcl(l) - xl(l) * d.ds(l)) / sl(l);
      return d;
    };
    auto steps = [&](const Direction& d) {
      double ap = max_step_lp(xl, d.dx), ad = max_step_lp(sl, d.ds);
      for (size_t k = 0; k < nb; ++k) {
        ap = std::min(ap, max_step(X[k], d.dX[k]));
        ad = std::min(ad, max_step(S[k], d.dS[k]));
      }
      return std::pair{ap, ad};
    };

    std::vector<Mat> Rc(nb);
    for (size_t k = 0; k < nb; ++k) Rc[k] = -X[k] * S[k];
    Vec rcl = -xl.cwiseProduct(sl);
    const Direction pred = direction(Rc, rcl);
    auto [ap, ad] = steps(pred);
    ap = std::min(1.0, ap);
    ad = std::min(1.0, ad);
    double gap_aff = 0.0;
    for (size_t k = 0; k < nb; ++k)
      gap_aff += inner(X[k] + ap * pred.dX[k], S[k] + ad * pred.dS[k]);
    gap_aff += (xl + ap * pred.dx).dot(sl + ad * pred.ds);
    const double sigma = std::clamp(std::pow(std::max(gap_aff, 0.0) / (gap), 3.0), 0.0, 1.0);

    for (size_t k = 0; k < nb; ++k) {
      Rc[k] = sigma * mu * Mat::Identity(X[k].rows(), X[k].cols()) - X[k] * S[k] -
              pred.dX[k] * pred.dS[k];
    }
    rcl = Vec::Constant(nl, sigma * mu) - xl.cwiseProduct(sl) - pred.dx.cwiseProduct(pred.ds);
    const Direction corr = direction(Rc, rcl);
    auto [cp_step, cd_step] = steps(corr);
    const double tau = 0.95;
    const double alpha_p = std::min(1.0, tau * cp_step);
    const double alpha_d = std::min(1.0, tau * cd_step);
    if (alpha_p < 1e-10 && alpha_d < 1e-10) break;

    for (size_t k = 0; k < nb; ++k) {
      X[k] = sym(X[k] + alpha_p * corr.dX[k]);
      S[k] = sym(S[k] + alpha_d * corr.dS[k]);
    }
    xl += alpha_p * corr.dx;
    sl += alpha_d * corr.ds;
    y += alpha_d * corr.dy;
  }

  if (best_y.size()) {
    y = best_y;
    return finish(SolveStatus::Feasible, "strictly feasible point found (iteration limit)");
  }
  return finish(SolveStatus::NumericalFailure, "interior-point iterations stalled");
}

}  // namespace dh2::sdp
