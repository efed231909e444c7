#include "dh2/bench.hpp"

#include <gtest/gtest.h>

#include <complex>

using namespace dh2;

namespace {

NetworkModel two_scalar_nodes() {
  NetworkModel m;
  m.topology = Topology(2);
  m.topology.set_width(0, 1, 1);
  for (int i = 0; i < 2; ++i) {
    auto s = SubsystemRealization::zeros(1, 1, 1, 1, 0, 0);
    s.ATT << 0.5;
    s.ATS << 0.1;
    s.AST << 1.0;
    s.BTd << 1.0;
    s.CzT << 1.0;
    m.nodes.push_back(s);
  }
  return m;
}

using CMat = Eigen::MatrixXcd;

CMat transfer(const FlatStateSpace& s, std::complex<double> z) {
  const Eigen::Index n = s.A.rows();
  CMat zI = CMat::Identity(n, n) * z;
  CMat res = s.C.cast<std::complex<double>>() *
             (zI - s.A.cast<std::complex<double>>()).partialPivLu().solve(s.B.cast<std::complex<double>>());
  return res + s.D.cast<std::complex<double>>();
}

}  // namespace

TEST(Topology, WidthsAreSymmetric) {
  Topology t(4);
  t.set_width(2, 0, 3);
  t.set_width(1, 3, 1);
  EXPECT_EQ(t.width(0, 2), 3);
  EXPECT_EQ(t.width(2, 0), 3);
  EXPECT_EQ(t.width(0, 1), 0);
  EXPECT_EQ(t.neighbors(0), (std::vector<int>{2}));
  EXPECT_EQ(t.channel_total(2), 3);
  EXPECT_EQ(t.total_channels(), 8);
  EXPECT_EQ(t.edges().size(), 2u);
}

TEST(Topology, CanonicalLayoutFollowsNeighborOrder) {
  Topology t(4);
  t.set_width(1, 3, 2);
  t.set_width(1, 0, 1);
  t.set_width(1, 2, 3);
  const auto layout = canonical_channel_layout(t, 1);
  ASSERT_EQ(layout.size(), 3u);
  EXPECT_EQ(layout[0], (ChannelSlot{0, 0, 1}));
  EXPECT_EQ(layout[1], (ChannelSlot{2, 1, 3}));
  EXPECT_EQ(layout[2], (ChannelSlot{3, 4, 2}));
}

TEST(Interconnection, TwoScalarNodesFlatten) {
  const auto flat = assemble_interconnected(two_scalar_nodes());
  Mat A(2, 2);
  A << 0.5, 0.1, 0.1, 0.5;
  EXPECT_LT((flat.A - A).norm(), 1e-14);
  EXPECT_LT((flat.B - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_LT((flat.C - Mat::Identity(2, 2)).norm(), 1e-14);
  EXPECT_NEAR(spectral_radius(flat.A), 0.6, 1e-12);
}

TEST(Interconnection, SingularInterconnectionDetected) {
  auto m = two_scalar_nodes();
  // s = o_j = ASS s_j gives Δ − ASS singular when both ASS = 1
  for (auto& nd : m.nodes) nd.ASS << 1.0;
  EXPECT_FALSE(well_posed(m).ok);
  try {
    assemble_interconnected(m);
    FAIL() << "expected SingularInterconnection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SingularInterconnection);
  }
}

TEST(Interconnection, DimensionMismatchRejected) {
  auto m = two_scalar_nodes();
  m.nodes[1].ATS = Mat::Zero(1, 2);
  try {
    m.validate();
    FAIL() << "expected DimensionMismatch";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(Interconnection, OscillatorMatchesHandAssembly) {
  // Two masses joined by one spring; the flat model is written out by hand.
  OscillatorParams p;
  p.mass = {2.0, 1.0};
  p.damping = {1.0, 3.0};
  const Topology t = cycle_topology(2);
  p.stiffness[{0, 1}] = 1.5;
  const auto g = assemble_generalized_plant(gen_oscillator(t, p));
  const double T = 0.1;
  Mat A = Mat::Zero(4, 4);
  A << 1, T, 0, 0,                                       //
      -1.5 * T / 2.0, 1 - 1.0 * T / 2.0, 1.5 * T / 2.0, 0,  //
      0, 0, 1, T,                                        //
      1.5 * T / 1.0, 0, -1.5 * T / 1.0, 1 - 3.0 * T / 1.0;
  EXPECT_LT((g.A - A).norm(), 1e-14);
  EXPECT_LT(g.D22.norm(), 1e-15);
}

TEST(Linalg, KernelBasis) {
  Mat m(2, 3);
  m << 1, 0, 0, 0, 1, 0;
  const Mat k = kernel_basis(m);
  ASSERT_EQ(k.cols(), 1);
  EXPECT_NEAR(std::abs(k(2, 0)), 1.0, 1e-14);
  EXPECT_LT((m * k).norm(), 1e-14);

  const Mat full = Mat::Identity(3, 3);
  EXPECT_EQ(kernel_basis(full).cols(), 0);

  Mat r(1, 3);
  r << 1, 1, 1;
  const Mat kr = kernel_basis(r);
  ASSERT_EQ(kr.cols(), 2);
  EXPECT_LT((r * kr).norm(), 1e-14);
  EXPECT_LT((kr.transpose() * kr - Mat::Identity(2, 2)).norm(), 1e-13);
}

TEST(Linalg, VechRoundTrip) {
  Mat s(3, 3);
  s << 1, 2, 3, 2, 4, 5, 3, 5, 6;
  const Vec v = vech(s);
  ASSERT_EQ(v.size(), vech_size(3));
  EXPECT_EQ(v(0), 1);
  EXPECT_EQ(v(1), 2);
  EXPECT_EQ(v(3), 4);
  EXPECT_EQ(unvech(v, 3), s);
}

TEST(Linalg, InertiaCounts) {
  Mat d = Vec::Map(std::vector<double>{3, -1, 0, 2}.data(), 4).asDiagonal();
  const Inertia in = inertia(d);
  EXPECT_EQ(in.positive, 2);
  EXPECT_EQ(in.negative, 1);
  EXPECT_EQ(in.zero, 1);
}

TEST(ClosedLoop, NetworkAndFlatCompositionAgree) {
  // Closing each node locally and then interconnecting must give the same
  // input-output map as closing the flat plant with the flat controller.
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto r = synthesize_distributed(model, 1.0);
  const auto net = assemble_interconnected(r.closed.network);
  const auto fk = flatten_controller(r.controllers);
  const auto flat = close_central(assemble_generalized_plant(model), {fk.A, fk.B, fk.C, fk.D});
  ASSERT_EQ(net.B.cols(), flat.B.cols());
  ASSERT_EQ(net.C.rows(), flat.C.rows());
  for (std::complex<double> z : {std::complex<double>(1.3, 0.0), std::polar(1.0, 0.7),
                                 std::polar(1.0, 2.5), std::complex<double>(-1.1, 0.4)}) {
    const CMat a = transfer(net, z), b = transfer(flat, z);
    EXPECT_LT((a - b).norm(), 1e-8 * (1.0 + b.norm())) << "z = " << z;
  }
  EXPECT_NEAR(h2_norm_lyapunov(net), h2_norm_lyapunov(flat), 1e-8);
}
