#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace dh2 {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

enum class ErrorCode {
  DimensionMismatch,
  SingularInterconnection,
  HypothesisViolated,
  Unstable,
  NumericalFailure,
  InfeasibleAtHi,
  NearSingularCompletion,
  SingularY,
  InertiaMismatch,
  SingularPi,
  EliminationPreconditionFailed,
  ReconstructionFailed,
  SingularZ,
  Infeasible,
  IllPosed,
  ParseError,
};

const char* error_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what, std::string stage = {})
      : std::runtime_error(what), code_(code), stage_(std::move(stage)) {}
  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorCode code_;
  std::string stage_;
};

inline Mat sym(const Mat& m) { return 0.5 * (m + m.transpose()); }

// Extreme eigenvalues of the symmetric part; empty matrices give -inf / +inf.
double lambda_max(const Mat& m);
double lambda_min(const Mat& m);
double norm2(const Mat& m);

// Orthonormal basis of ker(M): right singular vectors whose singular values
// fall below rel_tol * sigma_max.
Mat kernel_basis(const Mat& m, double rel_tol = 1e-10);
Mat pinv(const Mat& m, double rel_tol = 1e-12);
Mat block_diag(const std::vector<Mat>& blocks);

struct Inertia {
  int negative = 0;
  int zero = 0;
  int positive = 0;
};
Inertia inertia(const Mat& m, double rel_tol = 1e-12);

// Symmetric half-vectorization, lower triangle in column-major order.
Vec vech(const Mat& m);
Mat unvech(const Vec& v, int d);
inline int vech_size(int d) { return d * (d + 1) / 2; }

}  // namespace dh2
