#include "dh2/synthesis.hpp"

namespace dh2 {

namespace {

// n×m selector placing an n-block at row offset `at` of an m-dimensional space.
Mat selector(int n, int at, int m) {
  Mat e = Mat::Zero(n, m);
  e.block(0, at, n, n).setIdentity();
  return e;
}

}  // namespace

FlatStateSpace close_central(const GeneralizedPlant& g, const CentralController& k) {
  const Eigen::Index n = g.A.rows(), nk = k.AK.rows();
  FlatStateSpace cl;
  cl.A.resize(n + nk, n + nk);
  cl.A << g.A + g.B2 * k.DK * g.C2, g.B2 * k.CK, k.BK * g.C2, k.AK;
  cl.B.resize(n + nk, g.B1.cols());
  cl.B << g.B1 + g.B2 * k.DK * g.D21, k.BK * g.D21;
  cl.C.resize(g.C1.rows(), n + nk);
  cl.C << g.C1 + g.D12 * k.DK * g.C2, g.D12 * k.CK;
  cl.D = g.D11 + g.D12 * k.DK * g.D21;
  return cl;
}

CentralResult synthesize_central(const NetworkModel& model, double gamma,
                                 const sdp::SolverSettings& solver, double eps) {
  const GeneralizedPlant g = assemble_generalized_plant(model);
  if (g.D22.size() && g.D22.cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorCode::HypothesisViolated, "centralized synthesis requires D22 = 0", "central");
  const int n = static_cast<int>(g.A.rows()), nu = static_cast<int>(g.B2.cols());
  const int ny = static_cast<int>(g.C2.rows()), nw = static_cast<int>(g.B1.cols());
  const int nz = static_cast<int>(g.C1.rows());

  sdp::SdpProblem pb;
  const sdp::Var X = pb.add_symmetric(n, "X"), Y = pb.add_symmetric(n, "Y");
  const sdp::Var K = pb.add_rectangular(n, n, "K"), Lv = pb.add_rectangular(n, ny, "L");
  const sdp::Var M = pb.add_rectangular(nu, n, "M"), N = pb.add_rectangular(nu, ny, "N");
  const sdp::Var Z = pb.add_symmetric(nw, "Z");

  // Adds [[Y, I], [I, X]] on the 2n-block at `at`.
  auto add_coupling = [&](sdp::AffineMatrixExpr& e, int at, int m) {
    e.add_congruence(Y, selector(n, at, m));
    e.add_congruence(X, selector(n, at + n, m));
    Mat c = Mat::Zero(m, m);
    c.block(at, at + n, n, n).setIdentity();
    c.block(at + n, at, n, n).setIdentity();
    e.add_constant(c);
  };

  // [[XX, AAᵀ, CCᵀ], [AA, XX, 0], [CC, 0, I]]
  {
    const int m = 4 * n + nz, r1a = 0, r1b = n, r2a = 2 * n, r2b = 3 * n, r3 = 4 * n;
    sdp::AffineMatrixExpr e(m);
    add_coupling(e, 0, m);
    add_coupling(e, 2 * n, m);
    const Mat E1a = selector(n, r1a, m), E1b = selector(n, r1b, m);
    const Mat E2a = selector(n, r2a, m), E2b = selector(n, r2b, m), E3 = selector(nz, r3, m);
    e.add_term(Y, E2a.transpose() * g.A, E1a);
    e.add_term(M, E2a.transpose() * g.B2, E1a);
    e.add_term(N, E2a.transpose() * g.B2, g.C2 * E1b);
    e.add_term(K, E2b.transpose(), E1a);
    e.add_term(X, E2b.transpose(), g.A * E1b);
    e.add_term(Lv, E2b.transpose(), g.C2 * E1b);
    e.add_term(Y, E3.transpose() * g.C1, E1a);
    e.add_term(M, E3.transpose() * g.D12, E1a);
    e.add_term(N, E3.transpose() * g.D12, g.C2 * E1b);
    Mat c = E2a.transpose() * g.A * E1b + E3.transpose() * g.C1 * E1b;
    c = c + c.transpose();
    c += E3.transpose() * E3;
    e.add_constant(c);
    pb.add_lmi(std::move(e), sdp::Sense::PositiveDefinite, eps, "state");
  }
  // [[Z, BBᵀ, DDᵀ], [BB, XX, 0], [DD, 0, I]]
  {
    const int m = nw + 2 * n + nz, r2a = nw, r2b = nw + n, r3 = nw + 2 * n;
    sdp::AffineMatrixExpr e(m);
    const Mat E1 = selector(nw, 0, m), E2a = selector(n, r2a, m), E2b = selector(n, r2b, m);
    const Mat E3 = selector(nz, r3, m);
    e.add_congruence(Z, E1);
    add_coupling(e, nw, m);
    e.add_term(N, E2a.transpose() * g.B2, g.D21 * E1);
    e.add_term(X, E2b.transpose(), g.B1 * E1);
    e.add_term(Lv, E2b.transpose(), g.D21 * E1);
    e.add_term(N, E3.transpose() * g.D12, g.D21 * E1);
    Mat c = E2a.transpose() * g.B1 * E1 + E3.transpose() * g.D11 * E1;
    c = c + c.transpose();
    c += E3.transpose() * E3;
    e.add_constant(c);
    pb.add_lmi(std::move(e), sdp::Sense::PositiveDefinite, eps, "performance");
  }
  sdp::LinearExpr tr;
  tr.add_inner(Z, Mat::Identity(nw, nw));
  tr.add_constant(-gamma * gamma);
  pb.add_linear_le(std::move(tr), eps, "trace");

  CentralResult res;
  res.solution = sdp::solve(pb, solver);
  if (res.solution.status == sdp::SolveStatus::Infeasible)
    throw Error(ErrorCode::Infeasible, "centralized problem is infeasible: " + res.solution.message,
                "central");
  if (res.solution.status != sdp::SolveStatus::Feasible)
    throw Error(ErrorCode::NumericalFailure,
                std::string("centralized solve ended with ") +
                    sdp::status_name(res.solution.status) + ": " + res.solution.message,
                "central");

  const Mat Xv = sym(res.solution.value(X)), Yv = sym(res.solution.value(Y));
  const Mat Kv = res.solution.value(K), Lval = res.solution.value(Lv);
  const Mat Mv = res.solution.value(M), Nv = res.solution.value(N);
  const Mat U = Mat::Identity(n, n) - Xv * Yv;
  const auto lu = U.fullPivLu();
  if (!lu.isInvertible() || lu.rcond() < 1e-12)
    throw Error(ErrorCode::NearSingularCompletion, "I - XY is nearly singular", "central");

  CentralController& k = res.controller;
  k.DK = Nv;
  k.CK = Mv - k.DK * g.C2 * Yv;
  k.BK = lu.solve(Lval - Xv * g.B2 * k.DK);
  k.AK = lu.solve(Kv - Xv * (g.A + g.B2 * k.DK * g.C2) * Yv - U * k.BK * g.C2 * Yv -
                  Xv * g.B2 * k.CK);

  res.closed = close_central(g, k);
  res.spectral_radius = spectral_radius(res.closed.A);
  if (res.spectral_radius < 1.0) {
    res.h2 = h2_norm_lyapunov(res.closed);
    res.verified = res.h2 < gamma;
  }
  return res;
}

}  // namespace dh2
