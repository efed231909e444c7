#include "dh2/bench.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace dh2;

namespace {

struct Instance {
  std::string name;
  NetworkModel model;
  double gamma;
  SynthesisMode mode;
  SynthesisResult result;
};

NetworkModel passive_pair() {
  NetworkModel m;
  m.topology = Topology(2);
  m.topology.set_width(0, 1, 1);
  for (int i = 0; i < 2; ++i) {
    const double sg = i == 0 ? -1.0 : 1.0;
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

const std::vector<Instance>& corpus() {
  static const std::vector<Instance> all = [] {
    std::vector<Instance> v;
    auto add = [&](std::string name, NetworkModel m, double g, SynthesisMode mode) {
      Instance in{std::move(name), std::move(m), g, mode, {}};
      in.result = mode == SynthesisMode::Distributed
                      ? synthesize_distributed(in.model, g)
                      : synthesize_decentralized(in.model, g, passivity_multipliers(in.model.topology));
      v.push_back(std::move(in));
    };
    add("triangle", gen_oscillator(triangle_topology(), triangle_params()), 1.0,
        SynthesisMode::Distributed);
    for (int L : {2, 5}) {
      const auto t = cycle_topology(L);
      add("cycle" + std::to_string(L), gen_oscillator(t, random_oscillator_params(t, 4)), 10.0,
          SynthesisMode::Distributed);
    }
    add("pair", passive_pair(), 10.0, SynthesisMode::Distributed);
    add("pair-dec", passive_pair(), 10.0, SynthesisMode::Decentralized);
    return v;
  }();
  return all;
}

NetworkModel example_model() {
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

AnalysisCertificate example_certificate() {
  AnalysisCertificate c;
  c.gamma = 1.88;
  c.X = {Mat::Constant(1, 1, 1.75), Mat::Constant(1, 1, 1.75)};
  c.rho = {20.0, 20.0};
  c.mult = MultiplierSet::zeros(example_model().topology);
  c.mult.x11[{0, 1}] = Mat::Constant(1, 1, -0.2);
  c.mult.x11[{1, 0}] = Mat::Constant(1, 1, -0.2);
  return c;
}

AnalysisCertificate closed_certificate(const Instance& in) {
  return {in.result.XK, in.result.rho, in.result.closed_multipliers, in.gamma};
}

Mat random_mat(std::mt19937_64& rng, int r, int c) {
  std::normal_distribution<double> nd;
  Mat m(r, c);
  for (Eigen::Index a = 0; a < m.size(); ++a) m.data()[a] = nd(rng);
  return m;
}

}  // namespace

TEST(Neutrality, InternalSuppliesCancel) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> nodes(2, 7), width(1, 3);
  std::bernoulli_distribution coin(0.5);
  for (int trial = 0; trial < 100; ++trial) {
    const int L = nodes(rng);
    Topology t(L);
    for (int i = 0; i < L; ++i)
      for (int j = i + 1; j < L; ++j)
        if (j == i + 1 || coin(rng)) t.set_width(i, j, width(rng));
    MultiplierSet m;
    for (auto [a, b] : t.edges()) {
      const int w = t.width(a, b);
      m.x11[{a, b}] = sym(random_mat(rng, w, w));
      m.x11[{b, a}] = sym(random_mat(rng, w, w));
      m.x12[{b, a}] = random_mat(rng, w, w);
    }
    // Random outputs; inputs follow from s_ij = o_ji.
    std::vector<Vec> o(L), s(L);
    std::vector<std::vector<ChannelSlot>> lay(L);
    for (int i = 0; i < L; ++i) {
      lay[i] = canonical_channel_layout(t, i);
      o[i] = random_mat(rng, t.channel_total(i), 1);
      s[i] = Vec::Zero(t.channel_total(i));
    }
    for (int i = 0; i < L; ++i)
      for (const auto& slot : lay[i])
        for (const auto& back : lay[slot.neighbor])
          if (back.neighbor == i) s[i].segment(slot.offset, slot.width) = o[slot.neighbor].segment(back.offset, back.width);
    double sum = 0.0, scale = 0.0;
    for (int i = 0; i < L; ++i) {
      const double si = internal_supply(assemble_Z_blocks(t, m, i), s[i], o[i]);
      sum += si;
      scale += std::abs(si);
    }
    EXPECT_LT(std::abs(sum), 1e-9 * (1.0 + scale)) << "trial " << trial;
  }
}

TEST(Dissipation, ExampleCertificate) {
  const auto r = trajectory_dissipation_check(example_model(), example_certificate(), 1000, 17);
  EXPECT_TRUE(r.ok) << r.message;
  EXPECT_TRUE(r.decreasing_free);
  EXPECT_LE(r.worst_slack, 0.0);
}

TEST(Dissipation, SearchedCertificate) {
  const auto model = example_model();
  const auto ap = build_analysis_problem(model, 1.9);
  const auto sol = sdp::solve(ap.problem);
  ASSERT_EQ(sol.status, sdp::SolveStatus::Feasible);
  const auto cert = extract_analysis_certificate(ap, sol);
  ASSERT_TRUE(analysis_residuals(model, cert).verified);
  const auto r = trajectory_dissipation_check(model, cert, 1000, 5);
  EXPECT_TRUE(r.ok) << r.message;
  EXPECT_TRUE(r.decreasing_free);
}

TEST(Dissipation, ClosedLoopCertificates) {
  for (const auto& in : corpus()) {
    ASSERT_TRUE(in.result.report.verified) << in.name;
    const auto r = trajectory_dissipation_check(in.result.closed.network, closed_certificate(in), 1000, 99);
    EXPECT_TRUE(r.ok) << in.name << ": " << r.message;
    EXPECT_TRUE(r.decreasing_free) << in.name;
    EXPECT_LT(r.worst_neutrality, 1e-9) << in.name;
  }
}

TEST(Reconstruction, CompletionPostconditions) {
  for (const auto& in : corpus()) {
    const auto& cert = in.result.certificate;
    for (size_t i = 0; i < in.result.completions.size(); ++i) {
      const auto& c = in.result.completions[i];
      const Mat& X = cert.X[i];
      const Mat& Y = cert.Y[i];
      const Eigen::Index k = X.rows();
      const double sx = 1.0 + X.norm(), sy = 1.0 + Y.norm();
      EXPECT_LT((c.M * c.N.transpose() - (Mat::Identity(k, k) - X * Y)).norm(), 1e-8 * sx * sy);
      Mat lhs(2 * k, 2 * k), rhs(2 * k, 2 * k);
      lhs << Y, Mat::Identity(k, k), c.N.transpose(), Mat::Zero(k, k);
      rhs << Mat::Identity(k, k), X, Mat::Zero(k, k), c.M.transpose();
      EXPECT_LT((c.XK * lhs - rhs).norm(), 1e-8 * (1.0 + c.XK.norm()) * (1.0 + lhs.norm()))
          << in.name;
      EXPECT_GT(lambda_min(c.XK), 0.0) << in.name;
      EXPECT_LT((c.XK.topLeftCorner(k, k) - X).norm(), 1e-8 * sx) << in.name;
      EXPECT_LT((c.XK.inverse().topLeftCorner(k, k) - Y).norm(), 1e-8 * sy) << in.name;
    }
  }
}

TEST(Reconstruction, RankSplitIdentity) {
  for (const auto& in : corpus()) {
    for (const auto& e : in.result.extensions) {
      const Eigen::Index n = e.vplus.cols();
      Mat M22 = Mat::Identity(6 * n, 6 * n);
      M22.bottomRightCorner(3 * n, 3 * n) *= -1.0;
      // Perturbed zero eigenvalues shift the product by at most the threshold.
      const double tol = 1e-9 * (1.0 + e.diff.norm()) * (1 + e.perturbed);
      EXPECT_LT((e.M12 * M22 * e.M12.transpose() - e.diff).norm(), tol) << in.name;
    }
  }
}

TEST(Reconstruction, QmiResidualsNegative) {
  for (const auto& in : corpus()) {
    ASSERT_EQ(in.result.qmi.size(), in.model.nodes.size());
    for (const auto& q : in.result.qmi) {
      EXPECT_LT(q.lambda_max, 0.0) << in.name;
      EXPECT_LT(q.projection_v, 0.0);
      EXPECT_GT(q.projection_u, 0.0);
    }
    for (double lm : in.result.report.residuals.lambda_max) EXPECT_LT(lm, 0.0) << in.name;
  }
}

TEST(RhoRecovery, BothInequalitiesHold) {
  for (const auto& in : corpus()) {
    const auto& cert = in.result.certificate;
    const Topology& t = in.model.topology;
    for (size_t i = 0; i < in.model.nodes.size(); ++i) {
      const auto& nd = in.model.nodes[i];
      const double rho = recover_rho(cert.alpha[i], cert.beta[i]);
      ZBlocks z, w;
      if (in.mode == SynthesisMode::Distributed) {
        z = assemble_Z_blocks(t, cert.xmult, static_cast<int>(i));
        w = assemble_Z_blocks(t, cert.ymult, static_cast<int>(i));
      } else {
        z = assemble_Z_blocks(t, passivity_multipliers(t), static_cast<int>(i));
        const Mat winv = z.full().inverse();
        const Eigen::Index n = nd.n();
        w = {winv.topLeftCorner(n, n), winv.topRightCorner(n, n), winv.bottomRightCorner(n, n)};
      }
      Mat cy(nd.ny(), nd.k() + nd.n() + nd.f());
      cy << nd.CyT, nd.CyS, nd.Dyd;
      Mat bu(nd.nu(), nd.k() + nd.n() + nd.q());
      bu << nd.BTu.transpose(), nd.BSu.transpose(), nd.Dzu.transpose();
      const Mat tp = build_Ti(nd) * kernel_basis(cy);
      const Mat sp = build_Si(nd) * kernel_basis(bu);
      const Mat storage = tp.transpose() * supply_middle(cert.X[i], z, nd.q(), nd.f(), rho) * tp;
      const Mat dual = sp.transpose() * supply_middle(cert.Y[i], w, nd.q(), nd.f(), 1.0 / rho) * sp;
      EXPECT_LE(lambda_max(storage), 0.0) << in.name << " node " << i;
      EXPECT_GE(lambda_min(dual), 0.0) << in.name << " node " << i;
    }
  }
}

TEST(Soundness, CertifiedBoundExceedsTrueNorm) {
  for (const auto& in : corpus()) {
    const auto flat = assemble_interconnected(in.result.closed.network);
    const double h2 = h2_norm_lyapunov(flat);
    EXPECT_LT(h2, in.gamma) << in.name;
    EXPECT_LE(h2 * h2, in.result.report.residuals.trace_sum * (1.0 + 1e-8)) << in.name;
    EXPECT_NEAR(h2, h2_norm_freqgrid(flat, 1 << 14), 1e-6 * h2) << in.name;
  }
  const auto flat = assemble_interconnected(example_model());
  EXPECT_LE(h2_norm_lyapunov(flat), std::sqrt(3.5));
}

TEST(Monotonicity, FeasibilityPersistsForLargerBounds) {
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  for (double g : {1.0, 2.0, 8.0}) {
    const auto ep = build_existence_problem(model, g, SynthesisMode::Distributed);
    EXPECT_EQ(sdp::solve(ep.problem).status, sdp::SolveStatus::Feasible) << "gamma " << g;
  }
  const auto ex = example_model();
  for (double g : {1.9, 2.5, 5.0})
    EXPECT_EQ(sdp::solve(build_analysis_problem(ex, g).problem).status, sdp::SolveStatus::Feasible);
}
