#include "dh2/netmodel.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <sstream>

namespace dh2 {

namespace {

std::pair<int, int> key(int i, int j) { return {std::min(i, j), std::max(i, j)}; }

void expect_dims(const Mat& m, Eigen::Index r, Eigen::Index c, const char* name) {
  if (m.rows() != r || m.cols() != c) {
    std::ostringstream os;
    os << "block " << name << " is " << m.rows() << "x" << m.cols() << ", expected " << r << "x"
       << c;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
}

Mat rows_of(const Mat& m, const std::vector<int>& idx) {
  Mat out(idx.size(), m.cols());
  for (size_t r = 0; r < idx.size(); ++r) out.row(r) = m.row(idx[r]);
  return out;
}

Mat cols_of(const Mat& m, const std::vector<int>& idx) {
  Mat out(m.rows(), idx.size());
  for (size_t c = 0; c < idx.size(); ++c) out.col(c) = m.col(idx[c]);
  return out;
}

struct Aggregate {
  Mat ATT, ATS, AST, ASS, BTd, BSd, BTu, BSu, CzT, CzS, Dzd, Dzu, CyT, CyS, Dyd, Dyu;
};

Aggregate aggregate(const NetworkModel& model) {
  auto collect = [&](auto getter) {
    std::vector<Mat> blocks;
    blocks.reserve(model.nodes.size());
    for (const auto& nd : model.nodes) blocks.push_back(getter(nd));
    return block_diag(blocks);
  };
  Aggregate a;
  a.ATT = collect([](const SubsystemRealization& s) { return s.ATT; });
  a.ATS = collect([](const SubsystemRealization& s) { return s.ATS; });
  a.AST = collect([](const SubsystemRealization& s) { return s.AST; });
  a.ASS = collect([](const SubsystemRealization& s) { return s.ASS; });
  a.BTd = collect([](const SubsystemRealization& s) { return s.BTd; });
  a.BSd = collect([](const SubsystemRealization& s) { return s.BSd; });
  a.BTu = collect([](const SubsystemRealization& s) { return s.BTu; });
  a.BSu = collect([](const SubsystemRealization& s) { return s.BSu; });
  a.CzT = collect([](const SubsystemRealization& s) { return s.CzT; });
  a.CzS = collect([](const SubsystemRealization& s) { return s.CzS; });
  a.Dzd = collect([](const SubsystemRealization& s) { return s.Dzd; });
  a.Dzu = collect([](const SubsystemRealization& s) { return s.Dzu; });
  a.CyT = collect([](const SubsystemRealization& s) { return s.CyT; });
  a.CyS = collect([](const SubsystemRealization& s) { return s.CyS; });
  a.Dyd = collect([](const SubsystemRealization& s) { return s.Dyd; });
  a.Dyu = collect([](const SubsystemRealization& s) { return s.Dyu; });
  return a;
}

double reciprocal_condition(const Mat& m) {
  if (m.size() == 0) return 1.0;
  Eigen::JacobiSVD<Mat> svd(m);
  const Vec& s = svd.singularValues();
  if (s(0) == 0.0) return 0.0;
  return s(s.size() - 1) / s(0);
}

constexpr double kWellPosedRcond = 1e-12;

// Solves (Δ − A^SS) X = rhs after checking conditioning.
Mat interconnection_solve(const NetworkModel& model, const Mat& ASS, const Mat& rhs) {
  const Mat K = build_delta(model.topology) - ASS;
  const double rc = reciprocal_condition(K);
  if (rc < kWellPosedRcond) {
    std::ostringstream os;
    os << "interconnection is ill-posed (reciprocal condition " << rc << ")";
    throw Error(ErrorCode::SingularInterconnection, os.str());
  }
  if (K.size() == 0) return Mat::Zero(0, rhs.cols());
  return K.fullPivLu().solve(rhs);
}

}  // namespace

int Topology::width(int i, int j) const {
  if (i == j) return 0;
  auto it = widths_.find(key(i, j));
  return it == widths_.end() ? 0 : it->second;
}

void Topology::set_width(int i, int j, int w) {
  if (i == j) throw Error(ErrorCode::DimensionMismatch, "self-connections are not allowed");
  if (i < 0 || j < 0 || i >= node_count_ || j >= node_count_)
    throw Error(ErrorCode::DimensionMismatch, "edge endpoint out of range");
  if (w < 0) throw Error(ErrorCode::DimensionMismatch, "negative channel width");
  if (w == 0)
    widths_.erase(key(i, j));
  else
    widths_[key(i, j)] = w;
}

std::vector<std::pair<int, int>> Topology::edges() const {
  std::vector<std::pair<int, int>> out;
  for (const auto& [k, w] : widths_)
    if (w > 0) out.push_back(k);
  return out;
}

std::vector<int> Topology::neighbors(int i) const {
  std::vector<int> out;
  for (const auto& [k, w] : widths_) {
    if (w <= 0) continue;
    if (k.first == i) out.push_back(k.second);
    if (k.second == i) out.push_back(k.first);
  }
  std::sort(out.begin(), out.end());
  return out;
}

int Topology::channel_total(int i) const {
  int n = 0;
  for (const auto& [k, w] : widths_)
    if (k.first == i || k.second == i) n += w;
  return n;
}

int Topology::total_channels() const {
  int n = 0;
  for (const auto& [k, w] : widths_) n += 2 * w;
  return n;
}

std::vector<ChannelSlot> canonical_channel_layout(const Topology& topology, int node) {
  if (node < 0 || node >= topology.node_count())
    throw Error(ErrorCode::DimensionMismatch, "node index out of range");
  std::vector<ChannelSlot> out;
  int offset = 0;
  for (int j : topology.neighbors(node)) {
    const int w = topology.width(node, j);
    out.push_back({j, offset, w});
    offset += w;
  }
  return out;
}

SubsystemRealization SubsystemRealization::zeros(int k, int n, int f, int q, int nu, int ny) {
  SubsystemRealization s;
  s.ATT = Mat::Zero(k, k);
  s.ATS = Mat::Zero(k, n);
  s.AST = Mat::Zero(n, k);
  s.ASS = Mat::Zero(n, n);
  s.BTd = Mat::Zero(k, f);
  s.BSd = Mat::Zero(n, f);
  s.BTu = Mat::Zero(k, nu);
  s.BSu = Mat::Zero(n, nu);
  s.CzT = Mat::Zero(q, k);
  s.CzS = Mat::Zero(q, n);
  s.Dzd = Mat::Zero(q, f);
  s.Dzu = Mat::Zero(q, nu);
  s.CyT = Mat::Zero(ny, k);
  s.CyS = Mat::Zero(ny, n);
  s.Dyd = Mat::Zero(ny, f);
  s.Dyu = Mat::Zero(ny, nu);
  return s;
}

void SubsystemRealization::validate(int expected_n) const {
  const Eigen::Index k = ATT.rows(), n = ASS.rows(), f = BTd.cols(), q = CzT.rows(),
                     nu = BTu.cols(), ny = CyT.rows();
  expect_dims(ATT, k, k, "A^TT");
  expect_dims(ATS, k, n, "A^TS");
  expect_dims(AST, n, k, "A^ST");
  expect_dims(ASS, n, n, "A^SS");
  expect_dims(BTd, k, f, "B^Td");
  expect_dims(BSd, n, f, "B^Sd");
  expect_dims(BTu, k, nu, "B^Tu");
  expect_dims(BSu, n, nu, "B^Su");
  expect_dims(CzT, q, k, "C^zT");
  expect_dims(CzS, q, n, "C^zS");
  expect_dims(Dzd, q, f, "D^zd");
  expect_dims(Dzu, q, nu, "D^zu");
  expect_dims(CyT, ny, k, "C^yT");
  expect_dims(CyS, ny, n, "C^yS");
  expect_dims(Dyd, ny, f, "D^yd");
  expect_dims(Dyu, ny, nu, "D^yu");
  if (n != expected_n) {
    std::ostringstream os;
    os << "interconnection width " << n << " differs from topology channel total " << expected_n;
    throw Error(ErrorCode::DimensionMismatch, os.str());
  }
  if (Dyu.size() && Dyu.cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorCode::HypothesisViolated, "D^yu must be zero");
}

void NetworkModel::validate() const {
  if (static_cast<int>(nodes.size()) != topology.node_count())
    throw Error(ErrorCode::DimensionMismatch, "node count differs from topology");
  for (int i = 0; i < topology.node_count(); ++i) nodes[i].validate(topology.channel_total(i));
}

Mat build_delta(const Topology& topology) {
  const int L = topology.node_count();
  std::vector<int> off(L + 1, 0);
  for (int i = 0; i < L; ++i) off[i + 1] = off[i] + topology.channel_total(i);
  std::vector<std::vector<ChannelSlot>> layouts(L);
  for (int i = 0; i < L; ++i) layouts[i] = canonical_channel_layout(topology, i);
  Mat delta = Mat::Zero(off[L], off[L]);
  for (int i = 0; i < L; ++i) {
    for (const auto& slot : layouts[i]) {
      const int j = slot.neighbor;
      const auto it = std::find_if(layouts[j].begin(), layouts[j].end(),
                                   [&](const ChannelSlot& s) { return s.neighbor == i; });
      for (int t = 0; t < slot.width; ++t) delta(off[i] + slot.offset + t, off[j] + it->offset + t) = 1.0;
    }
  }
  return delta;
}

WellPosedness well_posed(const NetworkModel& model) {
  model.validate();
  const Aggregate a = aggregate(model);
  WellPosedness wp;
  wp.rcond = reciprocal_condition(build_delta(model.topology) - a.ASS);
  wp.ok = wp.rcond >= kWellPosedRcond;
  return wp;
}

FlatStateSpace assemble_interconnected(const NetworkModel& model) {
  model.validate();
  const Aggregate a = aggregate(model);
  Mat rhs(a.AST.rows(), a.AST.cols() + a.BSd.cols());
  rhs << a.AST, a.BSd;
  const Mat sol = interconnection_solve(model, a.ASS, rhs);
  const Mat sx = sol.leftCols(a.AST.cols());
  const Mat sd = sol.rightCols(a.BSd.cols());
  FlatStateSpace fs;
  fs.A = a.ATT + a.ATS * sx;
  fs.B = a.BTd + a.ATS * sd;
  fs.C = a.CzT + a.CzS * sx;
  fs.D = a.Dzd + a.CzS * sd;
  return fs;
}

GeneralizedPlant assemble_generalized_plant(const NetworkModel& model) {
  model.validate();
  const Aggregate a = aggregate(model);
  const Eigen::Index nk = a.AST.cols(), nf = a.BSd.cols(), nu = a.BSu.cols();
  Mat rhs(a.AST.rows(), nk + nf + nu);
  rhs << a.AST, a.BSd, a.BSu;
  const Mat sol = interconnection_solve(model, a.ASS, rhs);
  const Mat sx = sol.leftCols(nk), sd = sol.middleCols(nk, nf), su = sol.rightCols(nu);
  GeneralizedPlant g;
  g.A = a.ATT + a.ATS * sx;
  g.B1 = a.BTd + a.ATS * sd;
  g.B2 = a.BTu + a.ATS * su;
  g.C1 = a.CzT + a.CzS * sx;
  g.C2 = a.CyT + a.CyS * sx;
  g.D11 = a.Dzd + a.CzS * sd;
  g.D12 = a.Dzu + a.CzS * su;
  g.D21 = a.Dyd + a.CyS * sd;
  g.D22 = a.Dyu + a.CyS * su;
  return g;
}

UVW build_uvw(const SubsystemRealization& p, int nc) {
  if (p.Dyu.size() && p.Dyu.cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorCode::HypothesisViolated, "D^yu must be zero");
  if (nc < 0) throw Error(ErrorCode::DimensionMismatch, "negative controller channel width");
  const int k = p.k(), n = p.n(), f = p.f(), q = p.q(), nu = p.nu(), ny = p.ny();
  const int m_in = 2 * k + n + nc + f;
  const int p_out = 2 * k + n + nc + q;
  const int ox = 0, oxi = k, os = 2 * k, osc = 2 * k + n, od = 2 * k + n + nc;

  Mat Ut = Mat::Zero(p_out, k + nc + nu);
  Ut.block(ox, k + nc, k, nu) = p.BTu;
  Ut.block(oxi, 0, k, k) = Mat::Identity(k, k);
  Ut.block(os, k + nc, n, nu) = p.BSu;
  Ut.block(osc, k, nc, nc) = Mat::Identity(nc, nc);
  Ut.block(od, k + nc, q, nu) = p.Dzu;

  Mat V = Mat::Zero(k + nc + ny, m_in);
  V.block(0, oxi, k, k) = Mat::Identity(k, k);
  V.block(k, osc, nc, nc) = Mat::Identity(nc, nc);
  V.block(k + nc, ox, ny, k) = p.CyT;
  V.block(k + nc, os, ny, n) = p.CyS;
  V.block(k + nc, od, ny, f) = p.Dyd;

  Mat W = Mat::Zero(p_out, m_in);
  W.block(ox, ox, k, k) = p.ATT;
  W.block(ox, os, k, n) = p.ATS;
  W.block(ox, od, k, f) = p.BTd;
  W.block(os, ox, n, k) = p.AST;
  W.block(os, os, n, n) = p.ASS;
  W.block(os, od, n, f) = p.BSd;
  W.block(od, ox, q, k) = p.CzT;
  W.block(od, os, q, n) = p.CzS;
  W.block(od, od, q, f) = p.Dzd;
  return {Ut.transpose(), V, W};
}

std::vector<int> interleave_permutation(const std::vector<ChannelSlot>& plant,
                                        const std::vector<ChannelSlot>& ctrl) {
  int n = 0;
  for (const auto& s : plant) n += s.width;
  for (const auto& c : ctrl) {
    const bool known = std::any_of(plant.begin(), plant.end(), [&](const ChannelSlot& s) {
      return s.neighbor == c.neighbor && s.width > 0;
    });
    if (!known && c.width > 0)
      throw Error(ErrorCode::DimensionMismatch,
                  "controller channel to a node that is not a plant neighbor");
  }
  std::vector<int> perm;
  for (const auto& s : plant) {
    for (int t = 0; t < s.width; ++t) perm.push_back(s.offset + t);
    for (const auto& c : ctrl)
      if (c.neighbor == s.neighbor)
        for (int t = 0; t < c.width; ++t) perm.push_back(n + c.offset + t);
  }
  return perm;
}

ClosedLoopLocal close_local(const SubsystemRealization& plant,
                            const std::vector<ChannelSlot>& plant_layout,
                            const std::vector<ChannelSlot>& ctrl_layout, const Mat& theta) {
  int nc = 0;
  for (const auto& c : ctrl_layout) nc += c.width;
  const UVW uvw = build_uvw(plant, nc);
  if (theta.rows() != uvw.U.rows() || theta.cols() != uvw.V.rows())
    throw Error(ErrorCode::DimensionMismatch, "controller block does not match plant dimensions");
  ClosedLoopLocal cl;
  cl.gamma = uvw.U.transpose() * theta * uvw.V + uvw.W;
  cl.channel_perm = interleave_permutation(plant_layout, ctrl_layout);

  const int k = plant.k(), ns = plant.n() + nc, f = plant.f(), q = plant.q();
  std::vector<int> xs(2 * k), chan(ns), dist(f), perf(q);
  for (int i = 0; i < 2 * k; ++i) xs[i] = i;
  for (int i = 0; i < ns; ++i) chan[i] = 2 * k + cl.channel_perm[i];
  for (int i = 0; i < f; ++i) dist[i] = 2 * k + ns + i;
  for (int i = 0; i < q; ++i) perf[i] = 2 * k + ns + i;

  const Mat& G = cl.gamma;
  SubsystemRealization& s = cl.node;
  s = SubsystemRealization::zeros(2 * k, ns, f, q, 0, 0);
  const Mat rx = rows_of(G, xs), rs = rows_of(G, chan), rz = rows_of(G, perf);
  s.ATT = cols_of(rx, xs);
  s.ATS = cols_of(rx, chan);
  s.BTd = cols_of(rx, dist);
  s.AST = cols_of(rs, xs);
  s.ASS = cols_of(rs, chan);
  s.BSd = cols_of(rs, dist);
  s.CzT = cols_of(rz, xs);
  s.CzS = cols_of(rz, chan);
  s.Dzd = cols_of(rz, dist);
  return cl;
}

SubsystemRealization controller_as_subsystem(const Mat& theta, const ThetaShape& sh) {
  if (theta.rows() != sh.rows() || theta.cols() != sh.cols())
    throw Error(ErrorCode::DimensionMismatch, "controller block shape mismatch");
  SubsystemRealization s = SubsystemRealization::zeros(sh.k, sh.nc, sh.ny, sh.nu, 0, 0);
  s.ATT = theta.block(0, 0, sh.k, sh.k);
  s.ATS = theta.block(0, sh.k, sh.k, sh.nc);
  s.BTd = theta.block(0, sh.k + sh.nc, sh.k, sh.ny);
  s.AST = theta.block(sh.k, 0, sh.nc, sh.k);
  s.ASS = theta.block(sh.k, sh.k, sh.nc, sh.nc);
  s.BSd = theta.block(sh.k, sh.k + sh.nc, sh.nc, sh.ny);
  s.CzT = theta.block(sh.k + sh.nc, 0, sh.nu, sh.k);
  s.CzS = theta.block(sh.k + sh.nc, sh.k, sh.nu, sh.nc);
  s.Dzd = theta.block(sh.k + sh.nc, sh.k + sh.nc, sh.nu, sh.ny);
  return s;
}

}  // namespace dh2
