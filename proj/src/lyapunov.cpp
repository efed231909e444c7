#include "dh2/analysis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>

namespace dh2 {

using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;

double spectral_radius(const Mat& A) {
  if (A.size() == 0) return 0.0;
  Eigen::EigenSolver<Mat> es(A, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

StabilityResult is_stable(const FlatStateSpace& sys) {
  if (sys.A.rows() != sys.A.cols()) throw Error(ErrorCode::DimensionMismatch, "A is not square");
  StabilityResult r;
  r.radius = spectral_radius(sys.A);
  r.stable = r.radius < 1.0;
  return r;
}

// With A = U T Uᴴ and X̃ = Uᴴ X U the equation becomes Tᴴ X̃ T − X̃ + Q̃ = 0.
// Column j reads (T_jj Tᴴ − I) x_j = −q_j − Tᴴ Σ_{l<j} x_l T_lj, a lower
// triangular system.
Mat dlyap(const Mat& A, const Mat& Q) {
  const Eigen::Index n = A.rows();
  if (A.cols() != n || Q.rows() != n || Q.cols() != n)
    throw Error(ErrorCode::DimensionMismatch, "dlyap dimension mismatch");
  if (n == 0) return Mat(0, 0);
  Eigen::ComplexSchur<Mat> schur(A);
  const CMat& T = schur.matrixT();
  const CMat& U = schur.matrixU();
  const CMat Qt = U.adjoint() * Q.cast<std::complex<double>>() * U;
  const CMat Th = T.adjoint();
  CMat Xt = CMat::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const CVec acc = Xt.leftCols(j) * T.col(j).head(j);
    const CVec rhs = -Qt.col(j) - Th * acc;
    // (T_jj Th − I) is lower triangular
    CMat lhs = T(j, j) * Th;
    lhs.diagonal().array() -= 1.0;
    Xt.col(j) = lhs.triangularView<Eigen::Lower>().solve(rhs);
  }
  const Mat X = (U * Xt * U.adjoint()).real();
  return sym(X);
}

double h2_norm_lyapunov(const FlatStateSpace& sys) {
  const StabilityResult st = is_stable(sys);
  if (!st.stable) throw Error(ErrorCode::Unstable, "system is not asymptotically stable");
  double tr = sys.D.squaredNorm();
  if (sys.A.rows() > 0) {
    const Mat Wo = dlyap(sys.A, sys.C.transpose() * sys.C);
    tr += (sys.B.transpose() * Wo * sys.B).trace();
  }
  return std::sqrt(std::max(tr, 0.0));
}

double h2_norm_freqgrid(const FlatStateSpace& sys, int grid_size) {
  if (grid_size < 1) throw Error(ErrorCode::DimensionMismatch, "grid size must be positive");
  if (!is_stable(sys).stable) throw Error(ErrorCode::Unstable, "system is not asymptotically stable");
  const Eigen::Index n = sys.A.rows();
  const CMat A = sys.A.cast<std::complex<double>>();
  const CMat B = sys.B.cast<std::complex<double>>();
  const CMat C = sys.C.cast<std::complex<double>>();
  const CMat D = sys.D.cast<std::complex<double>>();
  double sum = 0.0;
  for (int k = 0; k < grid_size; ++k) {
    const double w = -M_PI + 2.0 * M_PI * k / grid_size;
    const std::complex<double> z = std::polar(1.0, w);
    CMat G = D;
    if (n > 0) {
      CMat M = -A;
      M.diagonal().array() += z;
      G += C * M.partialPivLu().solve(B);
    }
    sum += G.squaredNorm();
  }
  return std::sqrt(sum / grid_size);
}

}  // namespace dh2
