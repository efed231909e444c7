#include "dh2/bench.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace dh2;

namespace {

Mat scalar(double v) { return Mat::Constant(1, 1, v); }

template <class F>
ErrorCode error_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::NumericalFailure;
}

// Hand-evaluated residual [I; Γ]ᵀ P [I; Γ] with Γ = UᵀΘV + W.
Mat hand_residual(const Mat& P, const UVW& uvw, const Mat& theta) {
  const Mat G = uvw.U.transpose() * theta * uvw.V + uvw.W;
  Mat stack(G.cols() + G.rows(), G.cols());
  stack << Mat::Identity(G.cols(), G.cols()), G;
  return stack.transpose() * P * stack;
}

// Two scalar nodes whose interconnection is passive for the chosen signs.
NetworkModel passive_pair(double sign0) {
  NetworkModel m;
  m.topology = Topology(2);
  m.topology.set_width(0, 1, 1);
  for (int i = 0; i < 2; ++i) {
    const double sg = i == 0 ? sign0 : -sign0;
    auto s = SubsystemRealization::zeros(1, 1, 1, 1, 1, 1);
    s.ATT << 1.1;
    s.ATS << 0.1;
    s.AST << 0.1 * sg;
    s.ASS << 0.5 * sg;
    s.BTd << 1.0;
    s.BTu << 1.0;
    s.CzT << 1.0;
    s.CyT << 1.0;
    s.Dzu << 0.1;
    m.nodes.push_back(s);
  }
  return m;
}

double flat_h2(const ClosedLoopNetwork& c) { return h2_norm_lyapunov(assemble_interconnected(c.network)); }

}  // namespace

TEST(RecoverRho, Branches) {
  EXPECT_DOUBLE_EQ(recover_rho(2.0, 1.0), 2.0);
  EXPECT_DOUBLE_EQ(recover_rho(0.1, 0.5), 2.0);
  EXPECT_DOUBLE_EQ(recover_rho(1.0, 1.0), 1.0);
}

TEST(Completion, ScalarHandSolution) {
  const auto c = reconstruct_XK(scalar(2.0), scalar(2.0));
  Mat expect(2, 2);
  expect << 2, -3, -3, 6;
  EXPECT_LT((c.XK - expect).norm(), 1e-12);
  EXPECT_NEAR(c.XK.inverse()(0, 0), 2.0, 1e-12);
}

TEST(Completion, DegenerateRejected) {
  EXPECT_EQ(error_of([] { reconstruct_XK(Mat::Identity(2, 2), Mat::Identity(2, 2)); }),
            ErrorCode::NearSingularCompletion);
}

TEST(Extension, DiagonalUnitSplit) {
  // Y^P = I and X^P = diag(2, 0) give X^P − (Y^P)⁻¹ = diag(1, −1).
  const auto e = extend_pair(scalar(2.0), scalar(0.0), scalar(0.0), scalar(1.0), scalar(-1.0),
                             scalar(0.0));
  Mat expect(2, 6);
  expect << 1, 1, 1, 0, 0, 0, 0, 0, 0, 1, 1, 1;
  EXPECT_LT((e.M12.cwiseAbs() - expect / std::sqrt(3.0)).norm(), 1e-12);
  EXPECT_EQ(e.perturbed, 0);
}

TEST(Extension, ScaledSplit) {
  // X^P = diag(5, −8), Y^P = I.
  const auto e = extend_pair(scalar(5.0), scalar(8.0), scalar(0.0), scalar(1.0), scalar(-1.0),
                             scalar(0.0));
  EXPECT_NEAR(std::abs(e.vplus(0, 0)), 2.0, 1e-12);
  EXPECT_NEAR(std::abs(e.vminus(1, 0)), 3.0, 1e-12);
  Mat d(2, 2);
  d << 4, 0, 0, -9;
  EXPECT_LT((e.vplus * e.vplus.transpose() - e.vminus * e.vminus.transpose() - d).norm(), 1e-12);
}

TEST(Extension, InertiaAndSingularity) {
  EXPECT_EQ(error_of([] {
              extend_pair(scalar(2.0), scalar(-2.0), scalar(0.0), scalar(1.0), scalar(-1.0),
                          scalar(0.0));
            }),
            ErrorCode::InertiaMismatch);
  EXPECT_EQ(error_of([] {
              extend_pair(scalar(2.0), scalar(0.0), scalar(0.0), scalar(0.0), scalar(0.0),
                          scalar(0.0));
            }),
            ErrorCode::SingularY);
}

TEST(Pi, ZeroScalesLayout) {
  Mat XK(2, 2);
  XK << 2, -3, -3, 6;
  ZBlocks z{Mat::Zero(2, 2), Mat::Zero(2, 2), Mat::Zero(2, 2)};
  const Mat P = assemble_Pi(XK, 1.0, z, 1, 1);
  // diag(−X^K, 0, −I_f, X^K, 0, I_q)
  Mat expect = Mat::Zero(10, 10);
  expect.block(0, 0, 2, 2) = -XK;
  expect(4, 4) = -1.0;
  expect.block(5, 5, 2, 2) = XK;
  expect(9, 9) = 1.0;
  ASSERT_EQ(P.rows(), 10);
  EXPECT_LT((P - expect).norm(), 1e-15);
  const UVW uvw{Mat::Identity(5, 5), Mat::Identity(5, 5), Mat::Zero(5, 5)};
  EXPECT_EQ(error_of([&] { solve_theta_qmi(P, uvw); }),
            ErrorCode::SingularPi);
}

TEST(Qmi, IdentityDominatedCase) {
  const int r = 3, c = 2;
  Mat P = Mat::Zero(r + c, r + c);
  P.topLeftCorner(c, c) = -Mat::Identity(c, c);
  P.bottomRightCorner(r, r) = Mat::Identity(r, r);
  const UVW uvw{Mat::Identity(r, r), Mat::Identity(c, c), Mat::Zero(r, c)};
  const auto q = solve_theta_qmi(P, uvw);
  EXPECT_LT(lambda_max(hand_residual(P, uvw, q.theta)), 0.0);
  EXPECT_NEAR(q.lambda_max, lambda_max(hand_residual(P, uvw, q.theta)), 1e-10);
}

TEST(Qmi, ScalarStabilizationAgainstGrid) {
  // x+ = 2x + θx: residual −1 + (2 + θ)² is negative on the open interval (−3, −1).
  Mat P(2, 2);
  P << -1, 0, 0, 1;
  const UVW uvw{scalar(1.0), scalar(1.0), scalar(2.0)};
  int hits = 0;
  for (int t = 0; t <= 400; ++t) {
    const double th = -5.0 + 0.02 * t;
    if (lambda_max(hand_residual(P, uvw, scalar(th))) < 0.0) ++hits;
  }
  ASSERT_GT(hits, 0);
  const auto q = solve_theta_qmi(P, uvw);
  const double th = q.theta(0, 0);
  EXPECT_GT(th, -3.0);
  EXPECT_LT(th, -1.0);
  EXPECT_LT(lambda_max(hand_residual(P, uvw, q.theta)), 0.0);
}

TEST(Qmi, PreconditionFailureReported) {
  Mat P(2, 2);
  P << -1, 0, 0, 1;
  const UVW uvw{scalar(1.0), scalar(0.0), scalar(2.0)};
  EXPECT_EQ(error_of([&] { solve_theta_qmi(P, uvw); }), ErrorCode::EliminationPreconditionFailed);
}

TEST(Distributed, TriangleAtOne) {
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto r = synthesize_distributed(model, 1.0);
  EXPECT_TRUE(r.report.verified) << r.report.message;
  for (auto [a, b] : model.topology.edges())
    EXPECT_EQ(r.controllers.ctrl_topology.width(a, b), 3 * model.topology.width(a, b));
  const auto flat = assemble_interconnected(r.closed.network);
  EXPECT_LT(spectral_radius(flat.A), 1.0);
  EXPECT_TRUE(well_posed(r.closed.network).ok);
  EXPECT_LT(flat_h2(r.closed), 1.0);
  for (const auto& q : r.qmi) EXPECT_LT(q.lambda_max, 0.0);
}

TEST(Distributed, CycleTen) {
  const auto t = cycle_topology(10);
  const auto model = gen_oscillator(t, random_oscillator_params(t, 1));
  const auto r = synthesize_distributed(model, 10.0);
  EXPECT_TRUE(r.report.verified) << r.report.message;
  EXPECT_LT(flat_h2(r.closed), 10.0);
}

TEST(Distributed, UnstabilizableNodeInfeasible) {
  auto model = gen_oscillator(triangle_topology(), triangle_params());
  model.nodes[1].BTu.setZero();
  model.nodes[1].ATT << 1.5, 0.0, 0.0, 1.5;
  model.nodes[1].ATS.setZero();
  const auto e = error_of([&] { synthesize_distributed(model, 100.0); });
  EXPECT_EQ(e, ErrorCode::Infeasible);
}

TEST(Distributed, HypothesisChecked) {
  auto model = gen_oscillator(triangle_topology(), triangle_params());
  model.nodes[0].Dyd(0, 0) = 0.1;
  EXPECT_EQ(error_of([&] { synthesize_distributed(model, 1.0); }), ErrorCode::HypothesisViolated);
  model = gen_oscillator(triangle_topology(), triangle_params());
  model.nodes[2].BSd(0, 0) = 0.1;
  EXPECT_EQ(error_of([&] { build_existence_problem(model, 1.0, SynthesisMode::Distributed); }),
            ErrorCode::HypothesisViolated);
}

TEST(Distributed, LmiSizesIndependentOfNetworkSize) {
  std::vector<NodeLmiDims> ref;
  for (int L : {3, 8, 40}) {
    const auto t = cycle_topology(L);
    const auto ep = build_existence_problem(gen_oscillator(t, random_oscillator_params(t, 2)), 10.0,
                                            SynthesisMode::Distributed);
    ASSERT_EQ(static_cast<int>(ep.dims.size()), L);
    if (ref.empty()) ref.push_back(ep.dims[0]);
    for (const auto& d : ep.dims) EXPECT_EQ(d, ref[0]) << "L = " << L;
  }
}

TEST(Central, TriangleBaseline) {
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto c = synthesize_central(model, 0.22);
  EXPECT_TRUE(c.verified);
  EXPECT_LT(h2_norm_lyapunov(c.closed), 0.22);
  const auto g = assemble_generalized_plant(model);
  EXPECT_EQ(c.controller.AK.rows(), g.A.rows());
}

TEST(Central, StableDecoupledPlantAcceptsGenerousBound) {
  NetworkModel m;
  m.topology = Topology(1);
  auto s = SubsystemRealization::zeros(2, 0, 1, 1, 1, 1);
  s.ATT << 0.5, 0.1, 0.0, 0.3;
  s.BTd << 1.0, 0.0;
  s.BTu << 0.0, 1.0;
  s.CzT << 1.0, 0.0;
  s.CyT << 0.0, 1.0;
  m.nodes.push_back(s);
  const auto c = synthesize_central(m, 50.0);
  EXPECT_TRUE(c.verified);
  EXPECT_LT(c.h2, 50.0);
}

TEST(Decentralized, PassivePairSucceeds) {
  const auto model = passive_pair(-1.0);
  const auto r = synthesize_decentralized(model, 10.0, passivity_multipliers(model.topology));
  EXPECT_TRUE(r.report.verified) << r.report.message;
  EXPECT_EQ(r.controllers.ctrl_topology.total_channels(), 0);
  for (double lm : r.report.residuals.lambda_max) EXPECT_LT(lm, 0.0);
  EXPECT_LT(flat_h2(r.closed), 10.0);
}

TEST(Decentralized, ZeroMultipliersSingular) {
  const auto model = passive_pair(-1.0);
  EXPECT_EQ(error_of([&] {
              synthesize_decentralized(model, 10.0, MultiplierSet::zeros(model.topology));
            }),
            ErrorCode::SingularZ);
}

TEST(Decentralized, TriangleWithPassivityIsReportedNotAssumed) {
  // Position coupling is not passive; the outcome is recorded either way.
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  try {
    const auto r = synthesize_decentralized(model, 10.0, passivity_multipliers(model.topology));
    EXPECT_TRUE(r.report.verified);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Infeasible) << e.what();
  }
}
