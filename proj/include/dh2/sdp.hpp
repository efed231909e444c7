#pragma once

#include "dh2/linalg.hpp"

#include <chrono>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dh2::sdp {

enum class VarKind { Symmetric, Rectangular, Scalar };

// Handle to a block of scalar unknowns inside the decision vector.
// Symmetric d×d variables occupy vech_size(d) entries (lower triangle, column-major).
struct Var {
  int id = -1;
  VarKind kind = VarKind::Scalar;
  int rows = 1;
  int cols = 1;
  int offset = 0;

  int scalar_count() const;
  bool valid() const { return id >= 0; }
};

// One coefficient term L·V·R + Rᵀ·Vᵀ·Lᵀ of a symmetric m×m expression.
// For matrix variables V is rows×cols, L is m×rows and R is cols×m.
// For scalar variables V stands for v·I_r, with L m×r and R r×m.
struct Term {
  Var var;
  Mat L;
  Mat R;
};

class AffineMatrixExpr {
 public:
  AffineMatrixExpr() = default;
  explicit AffineMatrixExpr(int dim) : constant_(Mat::Zero(dim, dim)) {}

  int dim() const { return static_cast<int>(constant_.rows()); }
  const Mat& constant() const { return constant_; }
  const std::vector<Term>& terms() const { return terms_; }

  AffineMatrixExpr& add_constant(const Mat& c);
  // L·V·R + (L·V·R)ᵀ
  AffineMatrixExpr& add_term(const Var& v, Mat L, Mat R);
  // scale · Wᵀ V W for a symmetric variable V.
  AffineMatrixExpr& add_congruence(const Var& v, const Mat& W, double scale = 1.0);
  // aᵀ V a − bᵀ V b for a symmetric variable V, stored as a single term.
  AffineMatrixExpr& add_congruence_diff(const Var& v, const Mat& a, const Mat& b);
  // scale · (Aᵀ V B + Bᵀ Vᵀ A) for any matrix variable V.
  AffineMatrixExpr& add_cross(const Var& v, const Mat& A, const Mat& B, double scale = 1.0);
  // v · G for a scalar variable v and a symmetric matrix G.
  AffineMatrixExpr& add_scaled(const Var& v, const Mat& G);
  AffineMatrixExpr& operator+=(const AffineMatrixExpr& other);
  AffineMatrixExpr& negate();

  Mat evaluate(const Vec& y) const;

 private:
  Mat constant_;
  std::vector<Term> terms_;
};

// Scalar affine function c + Σ a_i y_i over the flat decision vector.
class LinearExpr {
 public:
  LinearExpr& add_constant(double c) {
    constant_ += c;
    return *this;
  }
  LinearExpr& add_scalar(const Var& v, double coef);
  // ⟨G, V⟩ = trace(Gᵀ V); G is symmetrized for symmetric V.
  LinearExpr& add_inner(const Var& v, const Mat& G);
  LinearExpr& scale(double s);

  double constant() const { return constant_; }
  const std::vector<std::pair<int, double>>& coeffs() const { return coeffs_; }
  double evaluate(const Vec& y) const;

 private:
  double constant_ = 0.0;
  std::vector<std::pair<int, double>> coeffs_;
};

enum class Sense { PositiveDefinite, NegativeDefinite };

struct MatrixConstraint {
  AffineMatrixExpr expr;
  Sense sense = Sense::PositiveDefinite;
  double eps = 0.0;  // expr ⪰ eps·I or expr ⪯ −eps·I
  std::string name;
};

struct LinearConstraint {
  LinearExpr expr;  // expr ≥ margin
  double margin = 0.0;
  std::string name;
};

class SdpProblem {
 public:
  Var add_symmetric(int d, std::string name = {});
  Var add_rectangular(int rows, int cols, std::string name = {});
  Var add_scalar(std::string name = {});

  void add_lmi(AffineMatrixExpr expr, Sense sense, double eps, std::string name = {});
  // expr ≥ margin
  void add_linear_ge(LinearExpr expr, double margin, std::string name = {});
  // expr ≤ −margin
  void add_linear_le(LinearExpr expr, double margin, std::string name = {});
  void set_objective(LinearExpr minimize) { objective_ = std::move(minimize); }

  int scalar_count() const { return scalar_count_; }
  const std::vector<Var>& variables() const { return vars_; }
  const std::vector<std::string>& variable_names() const { return names_; }
  const std::vector<MatrixConstraint>& matrix_constraints() const { return lmis_; }
  const std::vector<LinearConstraint>& linear_constraints() const { return linear_; }
  const LinearExpr& objective() const { return objective_; }
  bool has_objective() const { return !objective_.coeffs().empty(); }

  // Sparse triplet text: see write_triplets.
  void write_triplets(std::ostream& os) const;

 private:
  Var push(VarKind kind, int rows, int cols, std::string name);
  void check(const AffineMatrixExpr& e) const;

  std::vector<Var> vars_;
  std::vector<std::string> names_;
  int scalar_count_ = 0;
  std::vector<MatrixConstraint> lmis_;
  std::vector<LinearConstraint> linear_;
  LinearExpr objective_;
};

enum class SolveStatus { Feasible, Infeasible, NumericalFailure, Budget };
const char* status_name(SolveStatus s);

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 100;
  // Feasibility problems stop once C + F(y) is verified strictly feasible and
  // the complementarity has dropped by this factor.
  double feasibility_mu_drop = 1e-4;
  // Infeasible is reported once a primal ray excludes every feasible point
  // whose slack trace is below this multiple of (1 + ‖C‖).
  double infeasibility_radius = 1e6;
  std::optional<std::chrono::steady_clock::time_point> deadline;
  std::size_t memory_cap_bytes = std::size_t(3) << 30;
  bool verbose = false;
};

struct SolverStats {
  int iterations = 0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  double relative_gap = 0.0;
  bool dense_schur = false;
  int low_rank_rows = 0;
  double seconds = 0.0;
};

struct SdpSolution {
  SolveStatus status = SolveStatus::NumericalFailure;
  Vec y;
  // Per matrix constraint: λ_min(±expr) − eps; per linear constraint: expr − margin.
  std::vector<double> lmi_margins;
  std::vector<double> linear_margins;
  bool verified = false;
  double objective = 0.0;
  SolverStats stats;
  std::string message;

  Mat value(const Var& v) const;
  double scalar(const Var& v) const;
};

// Direct eigenvalue check of every constraint at y.
struct MarginReport {
  std::vector<double> lmi_margins;
  std::vector<double> linear_margins;
  bool verified = false;  // all margins ≥ −1e-10·(1 + ‖expr‖)
  bool strict = false;    // all margins > 0
};
MarginReport check_margins(const SdpProblem& problem, const Vec& y);

SdpSolution solve(const SdpProblem& problem, const SolverSettings& settings = {});

struct BisectionResult {
  double gamma = 0.0;
  SdpSolution solution;
  int probes = 0;
};

// Smallest γ in [lo, hi] (within rel_tol) for which builder(γ) is feasible.
// Throws InfeasibleAtHi when builder(hi) is not feasible.
BisectionResult bisect_gamma(const std::function<SdpProblem(double)>& builder, double lo,
                             double hi, double rel_tol, const SolverSettings& settings = {});

}  // namespace dh2::sdp
