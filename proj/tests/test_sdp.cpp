#include "dh2/sdp.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>

using namespace dh2;
using namespace dh2::sdp;

namespace {

Mat random_symmetric(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  Mat a(n, n);
  for (Eigen::Index k = 0; k < a.size(); ++k) a.data()[k] = nd(rng);
  return sym(a);
}

SdpProblem threshold_problem(double g) {
  // [[g − x, 0], [0, x − 1]] ⪰ 0 is feasible exactly for g ≥ 1.
  SdpProblem p;
  const Var x = p.add_scalar("x");
  AffineMatrixExpr e(2);
  Mat c = Mat::Zero(2, 2);
  c(0, 0) = g;
  c(1, 1) = -1.0;
  e.add_constant(c);
  Mat G = Mat::Zero(2, 2);
  G(0, 0) = -1.0;
  G(1, 1) = 1.0;
  e.add_scaled(x, G);
  p.add_lmi(std::move(e), Sense::PositiveDefinite, 1e-9);
  return p;
}

}  // namespace

TEST(Expr, EvaluateMatchesDefinition) {
  SdpProblem p;
  const Var V = p.add_symmetric(2, "V");
  const Var R = p.add_rectangular(2, 3, "R");
  const Var s = p.add_scalar("s");
  EXPECT_EQ(p.scalar_count(), 3 + 6 + 1);

  Vec y(p.scalar_count());
  for (int k = 0; k < y.size(); ++k) y(k) = 0.3 * k - 1.0;
  Mat Vv = unvech(y.segment(V.offset, 3), 2);
  Mat Rv = Eigen::Map<const Mat>(y.data() + R.offset, 2, 3);
  const double sv = y(s.offset);

  Mat W(2, 3), A(2, 3), B(2, 3);
  W << 1, 2, 0, -1, 0, 3;
  A << 0, 1, 1, 2, 0, -1;
  B << 1, 1, 0, 0, 2, 1;
  AffineMatrixExpr e(3);
  e.add_congruence(V, W, 2.0);
  e.add_cross(R, A, Mat::Identity(3, 3));
  e.add_scaled(s, Mat::Identity(3, 3));
  e.add_congruence_diff(V, A, B);

  const Mat expect = 2.0 * W.transpose() * Vv * W + A.transpose() * Rv + Rv.transpose() * A +
                     sv * Mat::Identity(3, 3) + A.transpose() * Vv * A - B.transpose() * Vv * B;
  EXPECT_LT((e.evaluate(y) - expect).norm(), 1e-12);
}

TEST(Solve, LargestEigenvalueByMinimization) {
  for (int n : {2, 5}) {
    const Mat A = random_symmetric(n, 17 + n);
    SdpProblem p;
    const Var t = p.add_scalar("t");
    AffineMatrixExpr e(n);
    e.add_constant(-A);
    e.add_scaled(t, Mat::Identity(n, n));
    p.add_lmi(std::move(e), Sense::PositiveDefinite, 0.0);
    LinearExpr obj;
    obj.add_scalar(t, 1.0);
    p.set_objective(obj);
    const auto sol = solve(p);
    ASSERT_EQ(sol.status, SolveStatus::Feasible) << sol.message;
    EXPECT_NEAR(sol.scalar(t), lambda_max(A), 1e-6 * (1.0 + std::abs(lambda_max(A))));
  }
}

TEST(Solve, LinearConstraintOptimum) {
  SdpProblem p;
  const Var a = p.add_scalar("a");
  const Var b = p.add_scalar("b");
  LinearExpr ge;
  ge.add_scalar(a, 1.0).add_scalar(b, 1.0);
  p.add_linear_ge(ge, 3.0);  // a + b ≥ 3
  LinearExpr pa;
  pa.add_scalar(a, 1.0);
  p.add_linear_ge(pa, 0.0);
  LinearExpr pb;
  pb.add_scalar(b, 1.0);
  p.add_linear_ge(pb, 0.0);
  LinearExpr obj;
  obj.add_scalar(a, 1.0).add_scalar(b, 2.0);
  p.set_objective(obj);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::Feasible) << sol.message;
  EXPECT_NEAR(sol.objective, 3.0, 1e-6);
  EXPECT_NEAR(sol.scalar(a), 3.0, 1e-5);
}

TEST(Solve, LyapunovFeasibility) {
  Mat A(2, 2);
  A << 0.9, 0.5, 0.0, 0.7;
  SdpProblem p;
  const Var X = p.add_symmetric(2, "X");
  AffineMatrixExpr pos(2);
  pos.add_congruence(X, Mat::Identity(2, 2));
  p.add_lmi(std::move(pos), Sense::PositiveDefinite, 1e-6);
  AffineMatrixExpr dec(2);
  dec.add_congruence_diff(X, A, Mat::Identity(2, 2));
  p.add_lmi(std::move(dec), Sense::NegativeDefinite, 1e-6);
  const auto sol = solve(p);
  ASSERT_EQ(sol.status, SolveStatus::Feasible) << sol.message;
  EXPECT_TRUE(sol.verified);
  const Mat Xv = sol.value(X);
  EXPECT_GT(lambda_min(Xv), 0.0);
  EXPECT_LT(lambda_max(A.transpose() * Xv * A - Xv), 0.0);
  const auto m = check_margins(p, sol.y);
  EXPECT_TRUE(m.verified);
  EXPECT_TRUE(m.strict);
}

TEST(Solve, UnstableLyapunovIsInfeasible) {
  Mat A(2, 2);
  A << 1.05, 0.0, 0.3, 0.5;
  SdpProblem p;
  const Var X = p.add_symmetric(2, "X");
  AffineMatrixExpr pos(2);
  pos.add_congruence(X, Mat::Identity(2, 2));
  p.add_lmi(std::move(pos), Sense::PositiveDefinite, 1e-6);
  AffineMatrixExpr dec(2);
  dec.add_congruence_diff(X, A, Mat::Identity(2, 2));
  p.add_lmi(std::move(dec), Sense::NegativeDefinite, 1e-6);
  EXPECT_EQ(solve(p).status, SolveStatus::Infeasible);
}

TEST(Solve, ContradictoryBoundsInfeasible) {
  SdpProblem p;
  const Var X = p.add_symmetric(3, "X");
  AffineMatrixExpr up(3), down(3);
  up.add_congruence(X, Mat::Identity(3, 3)).add_constant(-Mat::Identity(3, 3));
  down.add_congruence(X, Mat::Identity(3, 3)).add_constant(Mat::Identity(3, 3));
  p.add_lmi(std::move(up), Sense::PositiveDefinite, 0.0);     // X ⪰ I
  p.add_lmi(std::move(down), Sense::NegativeDefinite, 0.0);   // X ⪯ −I
  EXPECT_EQ(solve(p).status, SolveStatus::Infeasible);
}

TEST(Solve, ExpiredDeadlineReportsBudget) {
  SolverSettings s;
  s.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  EXPECT_EQ(solve(threshold_problem(2.0), s).status, SolveStatus::Budget);
}

TEST(Margins, HandPoint) {
  const SdpProblem p = threshold_problem(2.0);
  Vec y(1);
  y << 1.5;
  const auto m = check_margins(p, y);
  ASSERT_EQ(m.lmi_margins.size(), 1u);
  EXPECT_NEAR(m.lmi_margins[0], 0.5 - 1e-9, 1e-12);
  EXPECT_TRUE(m.strict);
  y << 2.5;
  const auto bad = check_margins(p, y);
  EXPECT_NEAR(bad.lmi_margins[0], -0.5 - 1e-9, 1e-12);
  EXPECT_FALSE(bad.verified);
}

TEST(Bisection, ConvergesToThreshold) {
  const auto r = bisect_gamma(threshold_problem, 0.25, 4.0, 1e-4);
  EXPECT_GE(r.gamma, 1.0 - 1e-6);
  EXPECT_LE(r.gamma, 1.0 + 1e-3);
  EXPECT_EQ(r.solution.status, SolveStatus::Feasible);
  EXPECT_GT(r.probes, 3);
}

TEST(Bisection, InfeasibleAtHiThrows) {
  try {
    bisect_gamma(threshold_problem, 0.1, 0.8, 1e-3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InfeasibleAtHi);
  }
}

TEST(Triplets, WritesEveryConstraint) {
  std::ostringstream os;
  threshold_problem(1.5).write_triplets(os);
  EXPECT_FALSE(os.str().empty());
}
