#include "dh2/synthesis.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <numeric>
#include <sstream>

namespace dh2 {

namespace {

double rcond_svd(const Mat& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  return s(0) == 0.0 ? 0.0 : s(s.size() - 1) / s(0);
}

}  // namespace

Completion reconstruct_XK(const Mat& X, const Mat& Y) {
  const Eigen::Index k = X.rows();
  const Mat I = Mat::Identity(k, k);
  const Mat R = I - X * Y;
  Eigen::JacobiSVD<Mat> svd(R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  Completion c;
  c.sigma_min = k ? s(k - 1) : 1.0;
  const double scale = 1.0 + norm2(X) * norm2(Y);
  if (c.sigma_min < 1e-10 * scale) {
    std::ostringstream os;
    os << "I - XY is nearly singular (sigma_min = " << c.sigma_min << ")";
    throw Error(ErrorCode::NearSingularCompletion, os.str(), "completion");
  }
  if (s(0) / c.sigma_min > 1e8) {
    const Vec root = s.cwiseSqrt();
    c.M = svd.matrixU() * root.asDiagonal();
    c.N = svd.matrixV() * root.asDiagonal();
  } else {
    c.M = R;
    c.N = I;
  }
  Mat lhs(2 * k, 2 * k), rhs(2 * k, 2 * k);
  lhs << Y, I, c.N.transpose(), Mat::Zero(k, k);
  rhs << I, X, Mat::Zero(k, k), c.M.transpose();
  // XK · lhs = rhs
  c.XK = sym(lhs.transpose().fullPivLu().solve(rhs.transpose()).transpose());
  return c;
}

PairExtension extend_pair(const Mat& x11_ij, const Mat& x11_ji, const Mat& x12_ij,
                          const Mat& y11_ij, const Mat& y11_ji, const Mat& y12_ij) {
  const Eigen::Index n = x11_ij.rows();
  Mat XP(2 * n, 2 * n), YP(2 * n, 2 * n);
  XP << x11_ij, x12_ij, x12_ij.transpose(), -x11_ji;
  YP << y11_ij, y12_ij, y12_ij.transpose(), -y11_ji;
  if (rcond_svd(YP) < 1e-12)
    throw Error(ErrorCode::SingularY, "dual pair multiplier is singular", "extension");

  PairExtension ext;
  ext.diff = sym(XP - YP.inverse());
  Eigen::SelfAdjointEigenSolver<Mat> es(ext.diff);
  // descending order
  Vec w = es.eigenvalues().reverse();
  Mat V = es.eigenvectors().rowwise().reverse();
  const double norm = w.cwiseAbs().maxCoeff();
  const double thr = 1e-9 * (norm > 0.0 ? norm : 1.0);
  int pos = 0, neg = 0;
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    if (w(t) > thr) ++pos;
    if (w(t) < -thr) ++neg;
  }
  if (pos > n || neg > n) {
    std::ostringstream os;
    os << "X^P - inv(Y^P) has inertia (+" << pos << ", -" << neg << "), expected (+" << n << ", -"
       << n << ")";
    throw Error(ErrorCode::InertiaMismatch, os.str(), "extension");
  }
  for (Eigen::Index t = 0; t < w.size(); ++t) {
    if (std::abs(w(t)) > thr) continue;
    w(t) = t < n ? thr : -thr;
    ++ext.perturbed;
  }
  const Mat Vb = V * w.cwiseAbs().cwiseSqrt().asDiagonal();
  ext.vplus = Vb.leftCols(n);
  ext.vminus = Vb.rightCols(n);

  ext.M12.resize(2 * n, 6 * n);
  ext.M12 << ext.vplus, ext.vplus, ext.vplus, ext.vminus, ext.vminus, ext.vminus;
  ext.M12 /= std::sqrt(3.0);

  PairFamilies& p = ext.families;
  p.x11p_ij = x11_ij;
  p.x11p_ji = x11_ji;
  p.x12p = x12_ij;
  p.x11c_ij = Mat::Identity(3 * n, 3 * n);
  p.x11c_ji = Mat::Identity(3 * n, 3 * n);
  p.x12c = Mat::Zero(3 * n, 3 * n);
  p.x11pc_ij = ext.M12.topLeftCorner(n, 3 * n);
  p.x12pc = ext.M12.topRightCorner(n, 3 * n);
  p.x12cp = ext.M12.bottomLeftCorner(n, 3 * n).transpose();
  p.x11pc_ji = -ext.M12.bottomRightCorner(n, 3 * n);
  return ext;
}

ExtendedMultipliers extend_multipliers(const Topology& topology, const MultiplierSet& xm,
                                       const MultiplierSet& ym) {
  ExtendedMultipliers out;
  for (auto [a, b] : topology.edges()) {
    const int i = b, j = a, w = topology.width(a, b);
    const PairExtension e = extend_pair(xm.get11(i, j, w), xm.get11(j, i, w), xm.get12(i, j, w),
                                        ym.get11(i, j, w), ym.get11(j, i, w), ym.get12(i, j, w));
    out.pairs[{i, j}] = e.families;
  }
  return out;
}

ZBlocks group_scales(const ZBlocks& zi, const std::vector<int>& perm) {
  const Eigen::Index n = zi.Z11.rows();
  if (static_cast<Eigen::Index>(perm.size()) != n)
    throw Error(ErrorCode::DimensionMismatch, "permutation does not match the scale size");
  ZBlocks zg{Mat(n, n), Mat(n, n), Mat(n, n)};
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      zg.Z11(perm[a], perm[b]) = zi.Z11(a, b);
      zg.Z12(perm[a], perm[b]) = zi.Z12(a, b);
      zg.Z22(perm[a], perm[b]) = zi.Z22(a, b);
    }
  return zg;
}

Mat assemble_Pi(const Mat& XK, double rho, const ZBlocks& z, int q, int f) {
  const int k2 = static_cast<int>(XK.rows());
  const int ns = static_cast<int>(z.Z11.rows());
  const int m_in = k2 + ns + f, p_out = k2 + ns + q;
  Mat P = Mat::Zero(m_in + p_out, m_in + p_out);
  P.block(0, 0, k2, k2) = -XK;
  P.block(k2, k2, ns, ns) = z.Z22;
  P.block(k2 + ns, k2 + ns, f, f) = -rho * Mat::Identity(f, f);
  const int o = m_in;
  P.block(o, o, k2, k2) = XK;
  P.block(o + k2, o + k2, ns, ns) = z.Z11;
  P.block(o + k2 + ns, o + k2 + ns, q, q).setIdentity();
  P.block(k2, o + k2, ns, ns) = z.Z12.transpose();
  P.block(o + k2, k2, ns, ns) = z.Z12;
  return sym(P);
}

}  // namespace dh2
