// One line per acceptance criterion; exits nonzero when any criterion fails.

#include "dh2/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace dh2;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
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

AnalysisCertificate example_certificate(double gamma) {
  AnalysisCertificate c;
  c.gamma = gamma;
  c.X = {Mat::Constant(1, 1, 1.75), Mat::Constant(1, 1, 1.75)};
  c.rho = {20.0, 20.0};
  c.mult = MultiplierSet::zeros(example_model().topology);
  c.mult.x11[{0, 1}] = Mat::Constant(1, 1, -0.2);
  c.mult.x11[{1, 0}] = Mat::Constant(1, 1, -0.2);
  return c;
}

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

struct Instance {
  std::string name;
  NetworkModel model;
  double gamma;
  SynthesisMode mode;
  SynthesisResult result;
};

std::vector<Instance> build_corpus() {
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
  for (int L : {2, 5, 10}) {
    const auto t = cycle_topology(L);
    add("cycle" + std::to_string(L), gen_oscillator(t, random_oscillator_params(t, 1)), 10.0,
        SynthesisMode::Distributed);
  }
  add("pair", passive_pair(), 10.0, SynthesisMode::Distributed);
  add("pair-decentralized", passive_pair(), 10.0, SynthesisMode::Decentralized);
  return v;
}

const std::vector<Instance>& corpus() {
  static const std::vector<Instance> c = build_corpus();
  return c;
}

// ------------------------------------------------------------- criteria

Outcome criterion1() {
  const auto t0 = Clock::now();
  const auto rep = analysis_residuals(example_model(), example_certificate(1.88));
  const double gmin = std::sqrt(rep.trace_sum);
  const double secs = seconds_since(t0);
  bool neg = true;
  for (double lm : rep.lambda_max) neg = neg && lm < 0.0;
  std::ostringstream os;
  os << "lambda_max = (" << rep.lambda_max[0] << ", " << rep.lambda_max[1] << "), gamma_min = " << gmin
     << ", " << secs << " s";
  return {neg && std::abs(gmin - std::sqrt(3.5)) < 1e-3 && secs < 1.0, os.str()};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  const auto flat = assemble_interconnected(example_model());
  const double lyap = h2_norm_lyapunov(flat);
  const double grid = h2_norm_freqgrid(flat, 1 << 14);
  const double secs = seconds_since(t0);
  const double rel = std::abs(lyap - grid) / lyap;
  std::ostringstream os;
  os << "lyapunov = " << lyap << ", grid = " << grid << ", rel = " << rel << ", " << secs << " s";
  return {rel < 1e-6 && lyap >= 1.63 && lyap <= 1.70 && secs < 1.0, os.str()};
}

Outcome criterion3() {
  const auto t0 = Clock::now();
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto r = synthesize_distributed(model, 1.0);
  const double secs = seconds_since(t0);
  bool widths = true;
  for (auto [a, b] : model.topology.edges())
    widths = widths && r.controllers.ctrl_topology.width(a, b) == 3;
  const bool wp = well_posed(r.closed.network).ok;
  const auto flat = assemble_interconnected(r.closed.network);
  const double radius = spectral_radius(flat.A);
  const double h2 = h2_norm_lyapunov(flat);
  std::ostringstream os;
  os << "feasible, n_C = 3: " << widths << ", well-posed: " << wp << ", radius = " << radius
     << ", H2 = " << h2 << ", certificate verified: " << r.report.verified << ", " << secs << " s";
  return {widths && wp && radius < 1.0 && h2 < 1.0 && r.report.verified && secs < 30.0, os.str()};
}

Outcome criterion4() {
  const auto t0 = Clock::now();
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto c = synthesize_central(model, 0.22);
  const double secs = seconds_since(t0);
  const double h2 = h2_norm_lyapunov(c.closed);
  std::ostringstream os;
  os << "H2 = " << h2 << ", radius = " << c.spectral_radius << ", " << secs << " s";
  return {c.verified && h2 < 0.22 && secs < 30.0, os.str()};
}

Outcome criterion5() {
  BenchOptions opt;
  opt.gamma = 10.0;
  opt.budget_secs = 600.0;
  const BenchRow d50 = bench_one(50, BenchMode::Distributed, opt);
  const BenchRow c50 = bench_one(50, BenchMode::Central, opt);
  const BenchRow d1000 = bench_one(1000, BenchMode::Distributed, opt);

  // Per-node LMI sizes depend only on the local block sizes, which the
  // generator fixes for every L; check that across all benchmark sizes.
  bool dims_equal = true;
  NodeLmiDims ref;
  bool have_ref = false;
  for (int L : {3, 10, 50, 200, 1000}) {
    const auto t = cycle_topology(L);
    const auto ep = build_existence_problem(gen_oscillator(t, random_oscillator_params(t, opt.seed)),
                                            opt.gamma, SynthesisMode::Distributed);
    for (const auto& d : ep.dims) {
      if (!have_ref) {
        ref = d;
        have_ref = true;
      }
      dims_equal = dims_equal && d == ref;
    }
  }
  const bool central_done = c50.status == "feasible" || c50.status == "over-budget";
  // A central run stopped by the budget still bounds the ratio from below.
  const double ratio = c50.wall_ms / std::max(d50.wall_ms, 1e-9);
  std::ostringstream os;
  os << "L=50 distributed " << d50.wall_ms << " ms (" << d50.status << "), central " << c50.wall_ms
     << " ms (" << c50.status << "), ratio " << ratio << "; L=1000 distributed " << d1000.wall_ms
     << " ms (" << d1000.status << "); per-node dims (" << ref.storage << ", " << ref.dual << ", "
     << ref.coupling << ") identical: " << dims_equal;
  const bool pass = d50.status == "feasible" && central_done && ratio >= 50.0 &&
                    d1000.status == "feasible" && d1000.wall_ms < 600e3 && dims_equal;
  return {pass, os.str()};
}

Outcome criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> nodes(2, 8), width(1, 3);
  std::bernoulli_distribution coin(0.4);
  std::normal_distribution<double> nd;
  auto rnd = [&](int r, int c) {
    Mat m(r, c);
    for (Eigen::Index a = 0; a < m.size(); ++a) m.data()[a] = nd(rng);
    return m;
  };
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int L = nodes(rng);
    Topology t(L);
    for (int i = 0; i < L; ++i)
      for (int j = i + 1; j < L; ++j)
        if (j == i + 1 || coin(rng)) t.set_width(i, j, width(rng));
    MultiplierSet m;
    for (auto [a, b] : t.edges()) {
      const int w = t.width(a, b);
      m.x11[{a, b}] = sym(rnd(w, w));
      m.x11[{b, a}] = sym(rnd(w, w));
      m.x12[{b, a}] = rnd(w, w);
    }
    std::vector<std::vector<ChannelSlot>> lay(L);
    for (int i = 0; i < L; ++i) lay[i] = canonical_channel_layout(t, i);
    // A short random trajectory of channel outputs; inputs follow s_ij = o_ji.
    for (int step = 0; step < 10; ++step) {
      std::vector<Vec> o(L), s(L);
      for (int i = 0; i < L; ++i) {
        o[i] = rnd(t.channel_total(i), 1);
        s[i] = Vec::Zero(t.channel_total(i));
      }
      for (int i = 0; i < L; ++i)
        for (const auto& slot : lay[i])
          for (const auto& back : lay[slot.neighbor])
            if (back.neighbor == i)
              s[i].segment(slot.offset, slot.width) = o[slot.neighbor].segment(back.offset, back.width);
      double sum = 0.0;
      for (int i = 0; i < L; ++i) sum += internal_supply(assemble_Z_blocks(t, m, i), s[i], o[i]);
      worst = std::max(worst, std::abs(sum));
    }
  }
  std::ostringstream os;
  os << "100 random networks x 10 steps, worst |sum| = " << worst;
  return {worst < 1e-9, os.str()};
}

Outcome criterion7() {
  struct Case {
    std::string name;
    NetworkModel model;
    AnalysisCertificate cert;
  };
  std::vector<Case> cases;
  cases.push_back({"example", example_model(), example_certificate(1.88)});
  {
    const auto ap = build_analysis_problem(example_model(), 1.9);
    const auto sol = sdp::solve(ap.problem);
    if (sol.status == sdp::SolveStatus::Feasible)
      cases.push_back({"example-searched", example_model(), extract_analysis_certificate(ap, sol)});
  }
  for (const auto& in : corpus())
    if (in.result.report.verified)
      cases.push_back({in.name, in.result.closed.network,
                       {in.result.XK, in.result.rho, in.result.closed_multipliers, in.gamma}});
  bool ok = true;
  double worst = -1e300;
  std::ostringstream os;
  for (size_t c = 0; c < cases.size(); ++c) {
    if (!analysis_residuals(cases[c].model, cases[c].cert).verified) continue;
    const auto r = trajectory_dissipation_check(cases[c].model, cases[c].cert, 1000, 700 + c);
    worst = std::max(worst, r.worst_slack);
    if (!r.ok || !r.decreasing_free) {
      ok = false;
      os << cases[c].name << " failed: " << r.message << "; ";
    }
  }
  os << cases.size() << " certificates, 1000 steps each, worst step slack = " << worst;
  return {ok && cases.size() >= 7, os.str()};
}

Outcome criterion8() {
  double worst_eq = 0.0, worst_split = 0.0, worst_qmi = -1e300;
  bool pd = true;
  for (const auto& in : corpus()) {
    const auto& cert = in.result.certificate;
    for (size_t i = 0; i < in.result.completions.size(); ++i) {
      const auto& c = in.result.completions[i];
      const Mat& X = cert.X[i];
      const Mat& Y = cert.Y[i];
      const Eigen::Index k = X.rows();
      Mat lhs(2 * k, 2 * k), rhs(2 * k, 2 * k);
      lhs << Y, Mat::Identity(k, k), c.N.transpose(), Mat::Zero(k, k);
      rhs << Mat::Identity(k, k), X, Mat::Zero(k, k), c.M.transpose();
      const double scale = (1.0 + c.XK.norm()) * (1.0 + lhs.norm());
      worst_eq = std::max(worst_eq, (c.XK * lhs - rhs).norm() / scale);
      worst_eq = std::max(worst_eq, (c.XK.topLeftCorner(k, k) - X).norm() / (1.0 + X.norm()));
      worst_eq = std::max(worst_eq, (c.XK.inverse().topLeftCorner(k, k) - Y).norm() / (1.0 + Y.norm()));
      pd = pd && lambda_min(c.XK) > 0.0;
    }
    for (const auto& e : in.result.extensions) {
      const Eigen::Index n = e.vplus.cols();
      Mat M22 = Mat::Identity(6 * n, 6 * n);
      M22.bottomRightCorner(3 * n, 3 * n) *= -1.0;
      worst_split = std::max(worst_split, (e.M12 * M22 * e.M12.transpose() - e.diff).norm() /
                                              (1.0 + e.diff.norm()) / (1 + e.perturbed));
    }
    for (const auto& q : in.result.qmi) worst_qmi = std::max(worst_qmi, q.lambda_max);
  }
  std::ostringstream os;
  os << corpus().size() << " instances; completion residual " << worst_eq << ", X^K > 0: " << pd
     << "; rank split " << worst_split << "; worst QMI lambda_max " << worst_qmi;
  return {worst_eq < 1e-8 && pd && worst_split < 1e-9 && worst_qmi < 0.0, os.str()};
}

Outcome criterion9() {
  double worst_storage = -1e300, worst_dual = 1e300;
  for (const auto& in : corpus()) {
    const auto& cert = in.result.certificate;
    const Topology& t = in.model.topology;
    for (size_t i = 0; i < in.model.nodes.size(); ++i) {
      const auto& nd = in.model.nodes[i];
      const int ii = static_cast<int>(i);
      const double rho = recover_rho(cert.alpha[i], cert.beta[i]);
      ZBlocks z, w;
      if (in.mode == SynthesisMode::Distributed) {
        z = assemble_Z_blocks(t, cert.xmult, ii);
        w = assemble_Z_blocks(t, cert.ymult, ii);
      } else {
        z = assemble_Z_blocks(t, passivity_multipliers(t), ii);
        const Mat inv = z.full().inverse();
        const Eigen::Index n = nd.n();
        w = {inv.topLeftCorner(n, n), inv.topRightCorner(n, n), inv.bottomRightCorner(n, n)};
      }
      Mat cy(nd.ny(), nd.k() + nd.n() + nd.f());
      cy << nd.CyT, nd.CyS, nd.Dyd;
      Mat bu(nd.nu(), nd.k() + nd.n() + nd.q());
      bu << nd.BTu.transpose(), nd.BSu.transpose(), nd.Dzu.transpose();
      const Mat tp = build_Ti(nd) * kernel_basis(cy);
      const Mat sp = build_Si(nd) * kernel_basis(bu);
      worst_storage = std::max(
          worst_storage,
          lambda_max(tp.transpose() * supply_middle(cert.X[i], z, nd.q(), nd.f(), rho) * tp));
      worst_dual = std::min(
          worst_dual,
          lambda_min(sp.transpose() * supply_middle(cert.Y[i], w, nd.q(), nd.f(), 1.0 / rho) * sp));
    }
  }
  std::ostringstream os;
  os << "storage margin " << -worst_storage << ", dual margin " << worst_dual;
  return {worst_storage <= 0.0 && worst_dual >= 0.0, os.str()};
}

Outcome criterion10() {
  const auto model = gen_oscillator(triangle_topology(), triangle_params());
  const auto r = synthesize_distributed(model, 1.0);
  const auto g = assemble_generalized_plant(model);
  const auto k = flatten_controller(r.controllers);
  const double h2 = h2_norm_lyapunov(close_central(g, {k.A, k.B, k.C, k.D}));
  const int seeds = 30;
  const int horizon = 2 * settle_horizon(r.report.spectral_radius, 4000);
  std::vector<double> tails;
  for (int s = 0; s < seeds; ++s) {
    const auto sim = simulate_flat(g, k, Vec::Zero(g.A.rows()), Vec::Zero(k.A.rows()),
                                   NoiseKind::White, horizon, 1000 + s);
    tails.push_back(sim.tail_mean_z2);
  }
  double mean = 0.0, var = 0.0;
  for (double t : tails) mean += t;
  mean /= seeds;
  for (double t : tails) var += (t - mean) * (t - mean);
  const double se = std::sqrt(var / (seeds - 1) / seeds);
  const double dev = std::abs(mean - h2 * h2);
  std::ostringstream os;
  os << seeds << " seeds x " << horizon << " steps: tail mean |z|^2 = " << mean << " +- " << se
     << ", H2^2 = " << h2 * h2 << ", deviation = " << dev / se << " SE";
  return {dev <= 3.0 * se, os.str()};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"example certificate", criterion1},
      {"example H2 norm", criterion2},
      {"triangle distributed synthesis", criterion3},
      {"triangle centralized baseline", criterion4},
      {"scaling", criterion5},
      {"neutrality", criterion6},
      {"dissipation", criterion7},
      {"reconstruction", criterion8},
      {"rho recovery", criterion9},
      {"stochastic consistency", criterion10},
  };
  int failures = 0;
  for (size_t c = 0; c < criteria.size(); ++c) {
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failures;
    std::printf("[%s] %zu %s: %s (%.2f s)\n", o.pass ? "PASS" : "FAIL", c + 1,
                criteria[c].first.c_str(), o.detail.c_str(), seconds_since(t0));
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
