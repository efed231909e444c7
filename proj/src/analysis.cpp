#include "dh2/analysis.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <random>
#include <sstream>

namespace dh2 {

Mat MultiplierSet::get11(int i, int j, int width) const {
  auto it = x11.find({i, j});
  if (it == x11.end()) return Mat::Zero(width, width);
  return it->second;
}

Mat MultiplierSet::get12(int i, int j, int width) const {
  if (i <= j) throw Error(ErrorCode::DimensionMismatch, "X12 is stored for i > j only");
  auto it = x12.find({i, j});
  if (it == x12.end()) return Mat::Zero(width, width);
  return it->second;
}

MultiplierSet MultiplierSet::zeros(const Topology& topology) {
  MultiplierSet m;
  for (auto [a, b] : topology.edges()) {
    const int w = topology.width(a, b);
    m.x11[{a, b}] = Mat::Zero(w, w);
    m.x11[{b, a}] = Mat::Zero(w, w);
    m.x12[{b, a}] = Mat::Zero(w, w);
  }
  return m;
}

void MultiplierSet::validate(const Topology& topology) const {
  for (const auto& [k, m] : x11) {
    const int w = topology.width(k.first, k.second);
    if (m.rows() != w || m.cols() != w)
      throw Error(ErrorCode::DimensionMismatch, "X11 block has wrong size");
    if (w > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + m.cwiseAbs().maxCoeff()))
      throw Error(ErrorCode::DimensionMismatch, "X11 block is not symmetric");
  }
  for (const auto& [k, m] : x12) {
    if (k.first <= k.second) throw Error(ErrorCode::DimensionMismatch, "X12 stored with i <= j");
    const int w = topology.width(k.first, k.second);
    if (m.rows() != w || m.cols() != w)
      throw Error(ErrorCode::DimensionMismatch, "X12 block has wrong size");
  }
}

Mat ZBlocks::full() const {
  const Eigen::Index n = Z11.rows();
  Mat z(2 * n, 2 * n);
  z << Z11, Z12, Z12.transpose(), Z22;
  return z;
}

ZBlocks assemble_Z_blocks(const Topology& topology, const MultiplierSet& mult, int i) {
  const auto layout = canonical_channel_layout(topology, i);
  const int n = topology.channel_total(i);
  ZBlocks z{Mat::Zero(n, n), Mat::Zero(n, n), Mat::Zero(n, n)};
  for (const auto& slot : layout) {
    const int j = slot.neighbor, o = slot.offset, w = slot.width;
    z.Z11.block(o, o, w, w) = -mult.get11(i, j, w);
    z.Z22.block(o, o, w, w) = mult.get11(j, i, w);
    z.Z12.block(o, o, w, w) = j < i ? Mat(-mult.get12(i, j, w)) : Mat(mult.get12(j, i, w).transpose());
  }
  return z;
}

Topology closed_loop_topology(const Topology& plant, const Topology& ctrl) {
  Topology t(plant.node_count());
  for (auto [a, b] : plant.edges()) t.set_width(a, b, plant.width(a, b) + ctrl.width(a, b));
  for (auto [a, b] : ctrl.edges())
    if (plant.width(a, b) == 0)
      throw Error(ErrorCode::DimensionMismatch, "controller channel without plant channel");
  return t;
}

MultiplierSet closed_loop_multipliers(const ExtendedMultipliers& ext) {
  MultiplierSet m;
  for (const auto& [key, p] : ext.pairs) {
    const auto [i, j] = key;
    auto join = [](const Mat& a, const Mat& b, const Mat& c, const Mat& d) {
      Mat out(a.rows() + c.rows(), a.cols() + b.cols());
      out << a, b, c, d;
      return out;
    };
    m.x11[{i, j}] = join(p.x11p_ij, p.x11pc_ij, p.x11pc_ij.transpose(), p.x11c_ij);
    m.x11[{j, i}] = join(p.x11p_ji, p.x11pc_ji, p.x11pc_ji.transpose(), p.x11c_ji);
    m.x12[{i, j}] = join(p.x12p, p.x12pc, p.x12cp, p.x12c);
  }
  return m;
}

ZBlocks closed_loop_scales(const Topology& plant, const Topology& ctrl,
                           const ExtendedMultipliers& ext, int node) {
  const Topology closed = closed_loop_topology(plant, ctrl);
  const MultiplierSet m = closed_loop_multipliers(ext);
  m.validate(closed);
  return assemble_Z_blocks(closed, m, node);
}

Mat build_Ti(const SubsystemRealization& s) {
  const int k = s.k(), n = s.n(), f = s.f(), q = s.q();
  Mat T = Mat::Zero(2 * k + 2 * n + q + f, k + n + f);
  int r = 0;
  T.block(r, 0, k, k).setIdentity();
  r += k;
  T.block(r, 0, k, k) = s.ATT;
  T.block(r, k, k, n) = s.ATS;
  T.block(r, k + n, k, f) = s.BTd;
  r += k;
  T.block(r, 0, n, k) = s.AST;
  T.block(r, k, n, n) = s.ASS;
  T.block(r, k + n, n, f) = s.BSd;
  r += n;
  T.block(r, k, n, n).setIdentity();
  r += n;
  T.block(r, 0, q, k) = s.CzT;
  T.block(r, k, q, n) = s.CzS;
  T.block(r, k + n, q, f) = s.Dzd;
  r += q;
  T.block(r, k + n, f, f).setIdentity();
  return T;
}

Mat build_Si(const SubsystemRealization& s) {
  const int k = s.k(), n = s.n(), f = s.f(), q = s.q();
  Mat S = Mat::Zero(2 * k + 2 * n + q + f, k + n + q);
  int r = 0;
  S.block(r, 0, k, k) = s.ATT.transpose();
  S.block(r, k, k, n) = s.AST.transpose();
  S.block(r, k + n, k, q) = s.CzT.transpose();
  r += k;
  S.block(r, 0, k, k) = -Mat::Identity(k, k);
  r += k;
  S.block(r, k, n, n) = -Mat::Identity(n, n);
  r += n;
  S.block(r, 0, n, k) = s.ATS.transpose();
  S.block(r, k, n, n) = s.ASS.transpose();
  S.block(r, k + n, n, q) = s.CzS.transpose();
  r += n;
  S.block(r, k + n, q, q) = -Mat::Identity(q, q);
  r += q;
  S.block(r, 0, f, k) = s.BTd.transpose();
  S.block(r, k, f, n) = s.BSd.transpose();
  S.block(r, k + n, f, q) = s.Dzd.transpose();
  return S;
}

Mat supply_middle(const Mat& X, const ZBlocks& z, int q, int f, double rho) {
  return block_diag({Mat(-X), X, z.full(), Mat::Identity(q, q), Mat(-rho * Mat::Identity(f, f))});
}

ResidualReport analysis_residuals(const NetworkModel& model, const AnalysisCertificate& cert) {
  model.validate();
  const int L = model.topology.node_count();
  if (static_cast<int>(cert.X.size()) != L || static_cast<int>(cert.rho.size()) != L)
    throw Error(ErrorCode::DimensionMismatch, "certificate size differs from node count");
  cert.mult.validate(model.topology);
  for (const auto& nd : model.nodes)
    if (nd.BSd.size() && nd.BSd.cwiseAbs().maxCoeff() != 0.0)
      throw Error(ErrorCode::HypothesisViolated, "B^Sd must vanish for the certificate test");

  ResidualReport rep;
  rep.verified = cert.gamma > 0.0;
  for (int i = 0; i < L; ++i) {
    const auto& nd = model.nodes[i];
    const Mat& X = cert.X[i];
    if (X.rows() != nd.k() || X.cols() != nd.k())
      throw Error(ErrorCode::DimensionMismatch, "storage matrix has wrong size");
    const ZBlocks z = assemble_Z_blocks(model.topology, cert.mult, i);
    const Mat T = build_Ti(nd);
    const Mat R = sym(T.transpose() * supply_middle(X, z, nd.q(), nd.f(), cert.rho[i]) * T);
    const double lm = lambda_max(R);
    const double eps = strict_eps(R);
    const bool pd = X.size() == 0 || (Eigen::LLT<Mat>(sym(X)).info() == Eigen::Success &&
                                       lambda_min(X) > 0.0);
    rep.residuals.push_back(R);
    rep.lambda_max.push_back(lm);
    rep.eps.push_back(eps);
    rep.storage_pd.push_back(pd);
    if (!(lm <= -eps) || !pd || !(cert.rho[i] > 0.0)) rep.verified = false;
    rep.trace_sum += (nd.BTd.transpose() * X * nd.BTd).trace() + nd.Dzd.squaredNorm();
  }
  rep.slack = cert.gamma * cert.gamma - rep.trace_sum;
  if (!(rep.slack > 0.0)) rep.verified = false;
  return rep;
}

double internal_supply(const ZBlocks& z, const Vec& s, const Vec& o) {
  Vec os(o.size() + s.size());
  os << o, s;
  return -os.dot(z.full() * os);
}

DissipationResult trajectory_dissipation_check(const NetworkModel& model,
                                               const AnalysisCertificate& cert, int horizon,
                                               std::uint64_t seed) {
  DissipationResult res;
  res.seed = seed;
  const int L = model.topology.node_count();
  const Mat delta = build_delta(model.topology);
  std::vector<ZBlocks> z(L);
  std::vector<int> koff(L + 1, 0), noff(L + 1, 0), foff(L + 1, 0);
  Mat ASS_all = block_diag([&] {
    std::vector<Mat> b;
    for (const auto& nd : model.nodes) b.push_back(nd.ASS);
    return b;
  }());
  for (int i = 0; i < L; ++i) {
    z[i] = assemble_Z_blocks(model.topology, cert.mult, i);
    koff[i + 1] = koff[i] + model.nodes[i].k();
    noff[i + 1] = noff[i] + model.nodes[i].n();
    foff[i + 1] = foff[i] + model.nodes[i].f();
  }
  const auto lu = (delta - ASS_all).fullPivLu();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nrm(0.0, 1.0);

  // Runs one trajectory; returns false if a check failed.
  auto run = [&](bool with_noise) {
    Vec x(koff[L]);
    for (int t = 0; t < x.size(); ++t) x(t) = nrm(rng);
    double prev_V = -1.0;
    for (int step = 0; step < horizon; ++step) {
      Vec d = Vec::Zero(foff[L]);
      if (with_noise)
        for (int t = 0; t < d.size(); ++t) d(t) = nrm(rng);
      // (Δ − A^SS) s = A^ST x + B^Sd d
      Vec rhs(noff[L]);
      for (int i = 0; i < L; ++i) {
        const auto& nd = model.nodes[i];
        rhs.segment(noff[i], nd.n()) = nd.AST * x.segment(koff[i], nd.k()) +
                                       nd.BSd * d.segment(foff[i], nd.f());
      }
      const Vec s = noff[L] ? Vec(lu.solve(rhs)) : Vec(0);
      const Vec o = delta * s;
      Vec xn(koff[L]);
      double sum_int = 0.0, V = 0.0;
      for (int i = 0; i < L; ++i) {
        const auto& nd = model.nodes[i];
        const Vec xi = x.segment(koff[i], nd.k());
        const Vec si = s.segment(noff[i], nd.n());
        const Vec oi = o.segment(noff[i], nd.n());
        const Vec di = d.segment(foff[i], nd.f());
        const Vec xp = nd.ATT * xi + nd.ATS * si + nd.BTd * di;
        const Vec zi = nd.CzT * xi + nd.CzS * si + nd.Dzd * di;
        xn.segment(koff[i], nd.k()) = xp;
        const double s_int = internal_supply(z[i], si, oi);
        const double s_ext = cert.rho[i] * di.squaredNorm() - zi.squaredNorm();
        const double dV = xp.dot(cert.X[i] * xp) - xi.dot(cert.X[i] * xi);
        const double mag = std::abs(xp.dot(cert.X[i] * xp)) + std::abs(xi.dot(cert.X[i] * xi)) +
                           std::abs(s_int) + std::abs(s_ext);
        // Scale-free slack; steps where every term vanished carry no information.
        if (mag > 1e-250) res.worst_slack = std::max(res.worst_slack, (dV - s_int - s_ext) / mag);
        sum_int += s_int;
        V += xi.dot(cert.X[i] * xi);
      }
      res.worst_neutrality = std::max(res.worst_neutrality, std::abs(sum_int));
      if (!with_noise) {
        if (prev_V >= 0.0 && !(V < prev_V) && V > 1e-300) return false;
        prev_V = V;
      }
      x = xn;
    }
    return true;
  };

  const bool noisy_ok = run(true);
  res.decreasing_free = run(false);
  const bool dissipation_ok = res.worst_slack <= 1e-9;
  const bool neutral_ok = res.worst_neutrality <= 1e-9;
  res.ok = noisy_ok && dissipation_ok && neutral_ok && res.decreasing_free;
  std::ostringstream os;
  os << "worst relative dissipation slack " << res.worst_slack << ", worst neutrality "
     << res.worst_neutrality << ", free-response decrease " << (res.decreasing_free ? "yes" : "no");
  res.message = os.str();
  return res;
}

}  // namespace dh2
