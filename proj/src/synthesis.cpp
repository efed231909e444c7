#include "dh2/synthesis.hpp"

#include <algorithm>
#include <sstream>

namespace dh2 {

namespace {

bool is_zero(const Mat& m) { return m.size() == 0 || m.cwiseAbs().maxCoeff() == 0.0; }

// Row groups shared by T_i and S_i: x, x+, o, s, z, d.
struct RowGroups {
  Mat x, xp, o, s, z, d;
};

RowGroups split_rows(const Mat& m, const SubsystemRealization& nd) {
  const int k = nd.k(), n = nd.n(), q = nd.q(), f = nd.f();
  RowGroups g;
  int r = 0;
  g.x = m.middleRows(r, k);
  r += k;
  g.xp = m.middleRows(r, k);
  r += k;
  g.o = m.middleRows(r, n);
  r += n;
  g.s = m.middleRows(r, n);
  r += n;
  g.z = m.middleRows(r, q);
  r += q;
  g.d = m.middleRows(r, f);
  return g;
}

struct PairVars {
  const std::map<std::pair<int, int>, sdp::Var>* v11;
  const std::map<std::pair<int, int>, sdp::Var>* v12;
};

// Channel part [o; s]ᵀ Z [o; s] with Z assembled from the pair variables.
void add_channel_terms(sdp::AffineMatrixExpr& e, const RowGroups& g,
                       const std::vector<ChannelSlot>& layout, int i, const PairVars& pv) {
  for (const auto& slot : layout) {
    const int j = slot.neighbor;
    const Mat ro = g.o.middleRows(slot.offset, slot.width);
    const Mat rs = g.s.middleRows(slot.offset, slot.width);
    e.add_congruence(pv.v11->at({i, j}), ro, -1.0);
    e.add_congruence(pv.v11->at({j, i}), rs, 1.0);
    if (j < i)
      e.add_cross(pv.v12->at({i, j}), ro, rs, -1.0);
    else
      e.add_cross(pv.v12->at({j, i}), rs, ro, 1.0);
  }
}

void add_fixed_channel(sdp::AffineMatrixExpr& e, const RowGroups& g, const Mat& zfull) {
  Mat os(g.o.rows() + g.s.rows(), g.o.cols());
  os << g.o, g.s;
  e.add_constant(os.transpose() * zfull * os);
}

void check_hypotheses(const NetworkModel& model) {
  for (size_t i = 0; i < model.nodes.size(); ++i) {
    const auto& nd = model.nodes[i];
    if (!is_zero(nd.BSd) || !is_zero(nd.Dyd)) {
      std::ostringstream os;
      os << "node " << i + 1 << ": synthesis requires B^Sd = 0 and D^yd = 0";
      throw Error(ErrorCode::HypothesisViolated, os.str());
    }
  }
}

}  // namespace

MultiplierSet passivity_multipliers(const Topology& topology) {
  MultiplierSet m;
  for (auto [a, b] : topology.edges()) {
    const int w = topology.width(a, b);
    m.x11[{a, b}] = Mat::Zero(w, w);
    m.x11[{b, a}] = Mat::Zero(w, w);
    m.x12[{b, a}] = 0.5 * Mat::Identity(w, w);
  }
  return m;
}

double recover_rho(double alpha, double beta) {
  if (!(alpha > 0.0) || !(beta > 0.0))
    throw Error(ErrorCode::DimensionMismatch, "recover_rho needs positive alpha and beta");
  return alpha * beta >= 1.0 ? alpha : 1.0 / beta;
}

ExistenceProblem build_existence_problem(const NetworkModel& model, double gamma,
                                         SynthesisMode mode, const ExistenceOptions& opt) {
  model.validate();
  check_hypotheses(model);
  const Topology& topo = model.topology;
  const int L = topo.node_count();

  ExistenceProblem ep;
  ep.mode = mode;
  ep.gamma = gamma;
  sdp::SdpProblem& pb = ep.problem;

  std::vector<ZBlocks> fixed_z(L);
  std::vector<Mat> fixed_w(L);
  if (mode == SynthesisMode::Distributed) {
    for (auto [a, b] : topo.edges()) {
      const int w = topo.width(a, b);
      const std::string tag = "(" + std::to_string(a + 1) + "," + std::to_string(b + 1) + ")";
      const std::string rtag = "(" + std::to_string(b + 1) + "," + std::to_string(a + 1) + ")";
      ep.x11[{a, b}] = pb.add_symmetric(w, "X11" + tag);
      ep.x11[{b, a}] = pb.add_symmetric(w, "X11" + rtag);
      ep.x12[{b, a}] = pb.add_rectangular(w, w, "X12" + rtag);
      ep.y11[{a, b}] = pb.add_symmetric(w, "Y11" + tag);
      ep.y11[{b, a}] = pb.add_symmetric(w, "Y11" + rtag);
      ep.y12[{b, a}] = pb.add_rectangular(w, w, "Y12" + rtag);
    }
  } else {
    ep.fixed = opt.fixed ? *opt.fixed : passivity_multipliers(topo);
    ep.fixed.validate(topo);
    for (int i = 0; i < L; ++i) {
      fixed_z[i] = assemble_Z_blocks(topo, ep.fixed, i);
      const Mat zf = fixed_z[i].full();
      if (zf.rows() == 0) {
        fixed_w[i] = zf;
        continue;
      }
      Eigen::JacobiSVD<Mat> svd(zf);
      const Vec& sv = svd.singularValues();
      if (sv(sv.size() - 1) <= 1e-12 * std::max(1.0, sv(0))) {
        std::ostringstream os;
        os << "node " << i + 1 << ": fixed interconnection scale matrix is singular";
        throw Error(ErrorCode::SingularZ, os.str());
      }
      fixed_w[i] = sym(zf.inverse());
    }
  }

  const double eps = opt.eps;
  sdp::LinearExpr trace_sum;
  double dzd = 0.0;
  for (int i = 0; i < L; ++i) {
    const auto& nd = model.nodes[i];
    const int k = nd.k();
    const std::string id = std::to_string(i + 1);
    ep.X.push_back(pb.add_symmetric(k, "X" + id));
    ep.Y.push_back(pb.add_symmetric(k, "Y" + id));
    ep.alpha.push_back(pb.add_scalar("alpha" + id));
    ep.beta.push_back(pb.add_scalar("beta" + id));
    const auto layout = canonical_channel_layout(topo, i);
    NodeLmiDims dims;

    // Storage inequality projected on ker(C^y).
    {
      Mat cy(nd.ny(), nd.k() + nd.n() + nd.f());
      cy << nd.CyT, nd.CyS, nd.Dyd;
      const Mat tp = build_Ti(nd) * kernel_basis(cy);
      const RowGroups g = split_rows(tp, nd);
      sdp::AffineMatrixExpr e(static_cast<int>(tp.cols()));
      e.add_congruence_diff(ep.X[i], g.xp, g.x);
      if (mode == SynthesisMode::Distributed)
        add_channel_terms(e, g, layout, i, {&ep.x11, &ep.x12});
      else
        add_fixed_channel(e, g, fixed_z[i].full());
      e.add_constant(g.z.transpose() * g.z);
      e.add_scaled(ep.alpha[i], -(g.d.transpose() * g.d));
      dims.storage = e.dim();
      pb.add_lmi(std::move(e), sdp::Sense::NegativeDefinite, eps, "storage" + id);
    }
    // Dual inequality projected on ker([B^u; D^zu]ᵀ).
    {
      Mat bu(nd.nu(), nd.k() + nd.n() + nd.q());
      bu << nd.BTu.transpose(), nd.BSu.transpose(), nd.Dzu.transpose();
      const Mat sp = build_Si(nd) * kernel_basis(bu);
      const RowGroups g = split_rows(sp, nd);
      sdp::AffineMatrixExpr e(static_cast<int>(sp.cols()));
      e.add_congruence_diff(ep.Y[i], g.xp, g.x);
      if (mode == SynthesisMode::Distributed)
        add_channel_terms(e, g, layout, i, {&ep.y11, &ep.y12});
      else
        add_fixed_channel(e, g, fixed_w[i]);
      e.add_constant(g.z.transpose() * g.z);
      e.add_scaled(ep.beta[i], -(g.d.transpose() * g.d));
      dims.dual = e.dim();
      pb.add_lmi(std::move(e), sdp::Sense::PositiveDefinite, eps, "dual" + id);
    }
    // Coupling [X I; I Y].
    {
      Mat top = Mat::Zero(k, 2 * k), bottom = Mat::Zero(k, 2 * k);
      top.leftCols(k).setIdentity();
      bottom.rightCols(k).setIdentity();
      sdp::AffineMatrixExpr e(2 * k);
      e.add_congruence(ep.X[i], top);
      e.add_congruence(ep.Y[i], bottom);
      Mat off = Mat::Zero(2 * k, 2 * k);
      off.topRightCorner(k, k).setIdentity();
      off.bottomLeftCorner(k, k).setIdentity();
      e.add_constant(off);
      dims.coupling = e.dim();
      pb.add_lmi(std::move(e), sdp::Sense::PositiveDefinite, std::max(eps, opt.coupling_delta),
                 "coupling" + id);
    }
    sdp::LinearExpr a, b;
    a.add_scalar(ep.alpha[i], 1.0);
    b.add_scalar(ep.beta[i], 1.0);
    pb.add_linear_ge(std::move(a), eps, "alpha" + id);
    pb.add_linear_ge(std::move(b), eps, "beta" + id);

    trace_sum.add_inner(ep.X[i], nd.BTd * nd.BTd.transpose());
    dzd += nd.Dzd.squaredNorm();
    ep.dims.push_back(dims);
  }
  trace_sum.add_constant(dzd - gamma * gamma);
  pb.add_linear_le(std::move(trace_sum), eps, "performance");

  if (opt.regularize) {
    sdp::LinearExpr obj;
    for (int i = 0; i < L; ++i) {
      const int k = model.nodes[i].k();
      obj.add_inner(ep.X[i], Mat::Identity(k, k));
      obj.add_inner(ep.Y[i], Mat::Identity(k, k));
    }
    pb.set_objective(std::move(obj));
  }
  return ep;
}

AnalysisProblem build_analysis_problem(const NetworkModel& model, double gamma, double eps) {
  model.validate();
  for (size_t i = 0; i < model.nodes.size(); ++i)
    if (!is_zero(model.nodes[i].BSd))
      throw Error(ErrorCode::HypothesisViolated,
                  "node " + std::to_string(i + 1) + ": analysis requires B^Sd = 0");
  const Topology& topo = model.topology;
  AnalysisProblem ap;
  ap.gamma = gamma;
  sdp::SdpProblem& pb = ap.problem;
  for (auto [a, b] : topo.edges()) {
    const int w = topo.width(a, b);
    ap.x11[{a, b}] = pb.add_symmetric(w);
    ap.x11[{b, a}] = pb.add_symmetric(w);
    ap.x12[{b, a}] = pb.add_rectangular(w, w);
  }
  sdp::LinearExpr trace_sum;
  double dzd = 0.0;
  for (int i = 0; i < topo.node_count(); ++i) {
    const auto& nd = model.nodes[i];
    const std::string id = std::to_string(i + 1);
    ap.X.push_back(pb.add_symmetric(nd.k(), "X" + id));
    ap.rho.push_back(pb.add_scalar("rho" + id));
    const Mat T = build_Ti(nd);
    const RowGroups g = split_rows(T, nd);
    sdp::AffineMatrixExpr e(static_cast<int>(T.cols()));
    e.add_congruence_diff(ap.X[i], g.xp, g.x);
    add_channel_terms(e, g, canonical_channel_layout(topo, i), i, {&ap.x11, &ap.x12});
    e.add_constant(g.z.transpose() * g.z);
    e.add_scaled(ap.rho[i], -(g.d.transpose() * g.d));
    pb.add_lmi(std::move(e), sdp::Sense::NegativeDefinite, eps, "dissipation" + id);
    sdp::AffineMatrixExpr pos(nd.k());
    pos.add_congruence(ap.X[i], Mat::Identity(nd.k(), nd.k()));
    pb.add_lmi(std::move(pos), sdp::Sense::PositiveDefinite, eps, "storage" + id);
    sdp::LinearExpr r;
    r.add_scalar(ap.rho[i], 1.0);
    pb.add_linear_ge(std::move(r), eps, "rho" + id);
    trace_sum.add_inner(ap.X[i], nd.BTd * nd.BTd.transpose());
    dzd += nd.Dzd.squaredNorm();
  }
  trace_sum.add_constant(dzd - gamma * gamma);
  pb.add_linear_le(std::move(trace_sum), eps, "performance");
  return ap;
}

AnalysisCertificate extract_analysis_certificate(const AnalysisProblem& ap,
                                                 const sdp::SdpSolution& sol) {
  AnalysisCertificate c;
  c.gamma = ap.gamma;
  for (size_t i = 0; i < ap.X.size(); ++i) {
    c.X.push_back(sym(sol.value(ap.X[i])));
    c.rho.push_back(sol.scalar(ap.rho[i]));
  }
  for (const auto& [key, v] : ap.x11) c.mult.x11[key] = sym(sol.value(v));
  for (const auto& [key, v] : ap.x12) c.mult.x12[key] = sol.value(v);
  return c;
}

NetworkModel collapse_to_single_node(const NetworkModel& model) {
  const GeneralizedPlant g = assemble_generalized_plant(model);
  SubsystemRealization s = SubsystemRealization::zeros(
      static_cast<int>(g.A.rows()), 0, static_cast<int>(g.B1.cols()), static_cast<int>(g.C1.rows()),
      static_cast<int>(g.B2.cols()), static_cast<int>(g.C2.rows()));
  s.ATT = g.A;
  s.BTd = g.B1;
  s.BTu = g.B2;
  s.CzT = g.C1;
  s.CyT = g.C2;
  s.Dzd = g.D11;
  s.Dzu = g.D12;
  s.Dyd = g.D21;
  s.Dyu = g.D22;
  NetworkModel out;
  out.topology = Topology(1);
  out.nodes.push_back(std::move(s));
  return out;
}

SynthesisCertificate extract_certificate(const ExistenceProblem& ep, const sdp::SdpSolution& sol) {
  SynthesisCertificate c;
  c.gamma = ep.gamma;
  for (size_t i = 0; i < ep.X.size(); ++i) {
    c.X.push_back(sym(sol.value(ep.X[i])));
    c.Y.push_back(sym(sol.value(ep.Y[i])));
    c.alpha.push_back(sol.scalar(ep.alpha[i]));
    c.beta.push_back(sol.scalar(ep.beta[i]));
  }
  if (ep.mode == SynthesisMode::Distributed) {
    for (const auto& [key, v] : ep.x11) c.xmult.x11[key] = sym(sol.value(v));
    for (const auto& [key, v] : ep.x12) c.xmult.x12[key] = sol.value(v);
    for (const auto& [key, v] : ep.y11) c.ymult.x11[key] = sym(sol.value(v));
    for (const auto& [key, v] : ep.y12) c.ymult.x12[key] = sol.value(v);
  } else {
    c.xmult = ep.fixed;
  }
  return c;
}

}  // namespace dh2
