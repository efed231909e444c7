#include "dh2/synthesis.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <sstream>

namespace dh2 {

namespace {

Mat stack(const Mat& top, const Mat& bottom) {
  Mat out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

struct Candidate {
  Mat theta;
  double lmax = std::numeric_limits<double>::infinity();
  double score = -std::numeric_limits<double>::infinity();
};

class Residual {
 public:
  Residual(const Mat& P, const UVW& uvw)
      : P_(P), uvw_(uvw), m_(static_cast<int>(uvw.W.cols())), pnorm_(norm2(P)) {}

  Mat gamma(const Mat& theta) const { return uvw_.U.transpose() * theta * uvw_.V + uvw_.W; }

  Mat F(const Mat& theta) const {
    const Mat IG = stack(Mat::Identity(m_, m_), gamma(theta));
    return sym(IG.transpose() * P_ * IG);
  }

  double lmax(const Mat& theta) const { return lambda_max(F(theta)); }

  // Scale-free quality: larger is better, positive means λ_max(F) < 0.
  double score(const Mat& theta, double lm) const {
    const double g = norm2(gamma(theta));
    return -lm / (pnorm_ * (1.0 + g * g));
  }

  // Gradient of λ_max(F(Θ)) with respect to Θ at a simple top eigenvalue.
  Mat gradient(const Mat& theta, const Vec& v) const {
    const Mat G = gamma(theta);
    const Mat S = P_.topRightCorner(m_, P_.cols() - m_);
    const Mat R = P_.bottomRightCorner(P_.rows() - m_, P_.cols() - m_);
    const Mat grad_g = 2.0 * (S.transpose() * v + R * G * v) * v.transpose();
    return uvw_.U * grad_g * uvw_.V.transpose();
  }

 private:
  const Mat& P_;
  const UVW& uvw_;
  int m_;
  double pnorm_;
};

// Builds a maximal negative subspace of P containing the graph of every
// admissible Γ on ker(V), then tilts its complement until the induced Γ is
// well conditioned.
Candidate constructive(const Mat& P, const UVW& uvw, const Residual& res, const Mat& Vp,
                       const Mat& Up) {
  const Mat& W = uvw.W;
  const int m_in = static_cast<int>(W.cols());
  Candidate best;

  Mat constraint(Up.cols(), W.cols() + W.rows());
  constraint << -Up.transpose() * W, Up.transpose();
  const Mat BT = kernel_basis(constraint);
  const Mat PT = BT.transpose() * P * BT;
  const Mat Sa = stack(Vp, W * Vp);
  const Mat Ya = BT.transpose() * Sa;
  const Mat Cfull = BT * kernel_basis(Ya.transpose() * PT);
  Eigen::SelfAdjointEigenSolver<Mat> es(sym(Cfull.transpose() * P * Cfull));
  int nneg = 0;
  for (Eigen::Index t = 0; t < es.eigenvalues().size(); ++t)
    if (es.eigenvalues()(t) < 0.0) ++nneg;
  if (Vp.cols() + nneg != m_in) return best;
  const Mat Nb = Cfull * es.eigenvectors().leftCols(nneg);

  const Mat Vr = kernel_basis(Vp.transpose());
  const Mat Na = Vr.transpose() * Nb.topRows(m_in);
  Eigen::JacobiSVD<Mat> svd(Na, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vec s = svd.singularValues();
  const double smax = s.size() ? s.maxCoeff() : 0.0;
  const Mat Apinv = pinv(Vr.transpose() * Cfull.topRows(m_in));
  const Mat Upinv = pinv(uvw.U.transpose());
  const Mat Vpinv = pinv(uvw.V);

  for (int step = 0; step <= 80; ++step) {
    const double d = std::pow(10.0, -8.0 + step * 0.1);
    Vec lift = s;
    for (Eigen::Index t = 0; t < s.size(); ++t) lift(t) = std::max(s(t), d * smax) - s(t);
    const Mat delta = svd.matrixU() * lift.asDiagonal() * svd.matrixV().transpose();
    const Mat Nt = Nb + Cfull * (Apinv * delta);
    Mat S(Sa.rows(), Sa.cols() + Nt.cols());
    S << Sa, Nt;
    // Γ = S_y S_x⁻¹
    Eigen::FullPivLU<Mat> lu(S.topRows(m_in).transpose());
    if (!lu.isInvertible() || lu.rcond() < 1e-14) continue;
    const Mat Gs = lu.solve(S.bottomRows(S.rows() - m_in).transpose()).transpose();
    const Mat theta = Upinv * (Gs - W) * Vpinv;
    const double lm = res.lmax(theta);
    if (!std::isfinite(lm)) continue;
    const double q = res.score(theta, lm);
    if (q > best.score) best = {theta, lm, q};
  }
  return best;
}

// Backtracking descent on λ_max(F(Θ)).
Candidate refine(const Residual& res, Candidate c, int max_iter) {
  double step = 1e-3;
  for (int it = 0; it < max_iter; ++it) {
    const Mat F = res.F(c.theta);
    Eigen::SelfAdjointEigenSolver<Mat> es(F);
    const Vec& w = es.eigenvalues();
    const double lm = w(w.size() - 1);
    if (lm < -1e-5 * (1.0 + w.cwiseAbs().maxCoeff())) break;
    const Mat g = res.gradient(c.theta, es.eigenvectors().col(w.size() - 1));
    bool moved = false;
    for (double t = step; t > 1e-12; t *= 0.5) {
      const Mat trial = c.theta - t * g;
      const double l2 = res.lmax(trial);
      if (l2 < lm) {
        c.theta = trial;
        c.lmax = l2;
        step = 1.5 * t;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  c.lmax = res.lmax(c.theta);
  return c;
}

}  // namespace

Mat qmi_residual(const Mat& P, const UVW& uvw, const Mat& theta) {
  return Residual(P, uvw).F(theta);
}

QmiResult solve_theta_qmi(const Mat& P, const UVW& uvw) {
  const Mat& W = uvw.W;
  const int m_in = static_cast<int>(W.cols()), p_out = static_cast<int>(W.rows());
  if (P.rows() != m_in + p_out || uvw.U.cols() != p_out || uvw.V.cols() != m_in)
    throw Error(ErrorCode::DimensionMismatch, "P, U, V, W sizes disagree", "qmi");

  Eigen::JacobiSVD<Mat> psvd(P);
  const Vec& ps = psvd.singularValues();
  if (ps(ps.size() - 1) < 1e-13 * ps(0)) {
    std::ostringstream os;
    os << "P is numerically singular (rcond = " << ps(ps.size() - 1) / ps(0) << ")";
    throw Error(ErrorCode::SingularPi, os.str(), "qmi");
  }

  QmiResult out;
  const Mat Vp = kernel_basis(uvw.V);
  const Mat Up = kernel_basis(uvw.U);
  {
    const Mat IW = stack(Mat::Identity(m_in, m_in), W) * Vp;
    out.projection_v = Vp.cols() ? lambda_max(IW.transpose() * P * IW)
                                 : -std::numeric_limits<double>::infinity();
    const Mat WI = stack(-W.transpose(), Mat::Identity(p_out, p_out)) * Up;
    out.projection_u = Up.cols() ? lambda_min(WI.transpose() * P.inverse() * WI)
                                 : std::numeric_limits<double>::infinity();
  }
  if (!(out.projection_v < 0.0)) {
    std::ostringstream os;
    os << "projection on ker(V) is not negative definite (lambda_max = " << out.projection_v << ")";
    throw Error(ErrorCode::EliminationPreconditionFailed, os.str(), "qmi");
  }
  if (!(out.projection_u > 0.0)) {
    std::ostringstream os;
    os << "projection on ker(U) is not positive definite (lambda_min = " << out.projection_u << ")";
    throw Error(ErrorCode::EliminationPreconditionFailed, os.str(), "qmi");
  }

  const Residual res(P, uvw);
  Candidate c = constructive(P, uvw, res, Vp, Up);
  out.strategy = 1;
  if (c.theta.size() == 0) {
    c.theta = Mat::Zero(uvw.U.rows(), uvw.V.rows());
    c.lmax = res.lmax(c.theta);
  }
  Mat F = res.F(c.theta);
  if (!(c.lmax < -strict_eps(F))) {
    c = refine(res, c, 3000);
    out.strategy = 2;
    F = res.F(c.theta);
  }
  out.theta = c.theta;
  out.lambda_max = lambda_max(F);
  out.residual_norm = norm2(F);
  if (!(out.lambda_max < -strict_eps(F))) {
    std::ostringstream os;
    os << "no controller block with a negative definite residual found (lambda_max = "
       << out.lambda_max << ")";
    throw Error(ErrorCode::ReconstructionFailed, os.str(), "qmi");
  }
  return out;
}

}  // namespace dh2
