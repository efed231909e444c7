#include "dh2/linalg.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <limits>

namespace dh2 {

const char* error_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularInterconnection: return "SingularInterconnection";
    case ErrorCode::HypothesisViolated: return "HypothesisViolated";
    case ErrorCode::Unstable: return "Unstable";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::InfeasibleAtHi: return "InfeasibleAtHi";
    case ErrorCode::NearSingularCompletion: return "NearSingularCompletion";
    case ErrorCode::SingularY: return "SingularY";
    case ErrorCode::InertiaMismatch: return "InertiaMismatch";
    case ErrorCode::SingularPi: return "SingularPi";
    case ErrorCode::EliminationPreconditionFailed: return "EliminationPreconditionFailed";
    case ErrorCode::ReconstructionFailed: return "ReconstructionFailed";
    case ErrorCode::SingularZ: return "SingularZ";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::IllPosed: return "IllPosed";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

double lambda_max(const Mat& m) {
  if (m.size() == 0) return -std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

double lambda_min(const Mat& m) {
  if (m.size() == 0) return std::numeric_limits<double>::infinity();
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double norm2(const Mat& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Mat> svd(m);
  return svd.singularValues()(0);
}

Mat kernel_basis(const Mat& m, double rel_tol) {
  const int n = static_cast<int>(m.cols());
  if (m.rows() == 0 || n == 0) return Mat::Identity(n, n);
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double smax = s.size() ? s(0) : 0.0;
  int rank = 0;
  if (smax > 0.0) {
    for (int i = 0; i < s.size(); ++i)
      if (s(i) > rel_tol * smax) ++rank;
  }
  return svd.matrixV().rightCols(n - rank);
}

Mat pinv(const Mat& m, double rel_tol) {
  if (m.size() == 0) return Mat::Zero(m.cols(), m.rows());
  Eigen::JacobiSVD<Mat> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec& s = svd.singularValues();
  const double cut = rel_tol * (s.size() ? s(0) : 0.0);
  Vec inv = Vec::Zero(s.size());
  for (int i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Mat block_diag(const std::vector<Mat>& blocks) {
  Eigen::Index r = 0, c = 0;
  for (const auto& b : blocks) {
    r += b.rows();
    c += b.cols();
  }
  Mat out = Mat::Zero(r, c);
  r = c = 0;
  for (const auto& b : blocks) {
    out.block(r, c, b.rows(), b.cols()) = b;
    r += b.rows();
    c += b.cols();
  }
  return out;
}

Inertia inertia(const Mat& m, double rel_tol) {
  Inertia in;
  if (m.size() == 0) return in;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(m), Eigen::EigenvaluesOnly);
  const Vec& ev = es.eigenvalues();
  const double tol = rel_tol * ev.cwiseAbs().maxCoeff();
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < -tol) ++in.negative;
    else if (ev(i) > tol) ++in.positive;
    else ++in.zero;
  }
  return in;
}

Vec vech(const Mat& m) {
  const int d = static_cast<int>(m.rows());
  Vec v(vech_size(d));
  int idx = 0;
  for (int c = 0; c < d; ++c)
    for (int r = c; r < d; ++r) v(idx++) = m(r, c);
  return v;
}

Mat unvech(const Vec& v, int d) {
  Mat m(d, d);
  int idx = 0;
  for (int c = 0; c < d; ++c)
    for (int r = c; r < d; ++r) {
      m(r, c) = v(idx);
      m(c, r) = v(idx);
      ++idx;
    }
  return m;
}

}  // namespace dh2
