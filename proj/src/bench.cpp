#include "dh2/bench.hpp"

#include <chrono>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace dh2 {

void OscillatorParams::validate(const Topology& topology) const {
  const int L = topology.node_count();
  if (static_cast<int>(mass.size()) != L || static_cast<int>(damping.size()) != L)
    throw Error(ErrorCode::DimensionMismatch, "oscillator parameters: one mass and damping per node");
  if (!(sample_time > 0.0)) throw Error(ErrorCode::DimensionMismatch, "sample time must be positive");
  for (int i = 0; i < L; ++i)
    if (!(mass[i] > 0.0) || !(damping[i] >= 0.0))
      throw Error(ErrorCode::DimensionMismatch, "oscillator parameters: m > 0 and b >= 0 required");
  for (auto [a, b] : topology.edges()) {
    if (topology.width(a, b) != 1)
      throw Error(ErrorCode::DimensionMismatch, "oscillator edges carry one channel");
    auto it = stiffness.find({a, b});
    if (it == stiffness.end() || !(it->second > 0.0))
      throw Error(ErrorCode::DimensionMismatch, "missing or non-positive stiffness");
  }
}

Topology cycle_topology(int L) {
  Topology t(L);
  if (L == 2) t.set_width(0, 1, 1);
  if (L >= 3)
    for (int i = 0; i < L; ++i) t.set_width(i, (i + 1) % L, 1);
  return t;
}

Topology triangle_topology() { return cycle_topology(3); }

OscillatorParams triangle_params() {
  OscillatorParams p;
  p.mass = {3.0, 1.0, 2.0};
  p.damping = {2.0, 1.0, 4.0};
  for (auto e : triangle_topology().edges()) p.stiffness[e] = 1.0;
  return p;
}

OscillatorParams random_oscillator_params(const Topology& topology, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u12(1.0, 2.0), u23(2.0, 3.0);
  OscillatorParams p;
  for (int i = 0; i < topology.node_count(); ++i) {
    p.mass.push_back(u12(rng));
    p.damping.push_back(u23(rng));
  }
  for (auto e : topology.edges()) p.stiffness[e] = u12(rng);
  return p;
}

NetworkModel gen_oscillator(const Topology& topology, const OscillatorParams& p) {
  p.validate(topology);
  const double T = p.sample_time;
  NetworkModel model;
  model.topology = topology;
  for (int i = 0; i < topology.node_count(); ++i) {
    const auto layout = canonical_channel_layout(topology, i);
    const int n = topology.channel_total(i);
    const double m = p.mass[i];
    SubsystemRealization s = SubsystemRealization::zeros(2, n, 1, 2, 1, 1);
    double ksum = 0.0;
    for (const auto& slot : layout) {
      const double kij = p.stiffness.at({std::min(i, slot.neighbor), std::max(i, slot.neighbor)});
      ksum += kij;
      s.ATS(1, slot.offset) = kij * T / m;
      s.AST(slot.offset, 0) = 1.0;
    }
    s.ATT << 1.0, T, -ksum * T / m, 1.0 - p.damping[i] * T / m;
    s.BTd << 0.0, T / m;
    s.BTu << 0.0, T / m;
    s.CzT.setIdentity();
    s.CyT << 1.0, 0.0;
    model.nodes.push_back(std::move(s));
  }
  model.validate();
  return model;
}

// ------------------------------------------------------------- simulation

FlatStateSpace flatten_controller(const ControllerRealization& ctrl) {
  NetworkModel net;
  net.topology = ctrl.ctrl_topology;
  for (size_t i = 0; i < ctrl.theta.size(); ++i)
    net.nodes.push_back(controller_as_subsystem(ctrl.theta[i], ctrl.shapes[i]));
  try {
    return assemble_interconnected(net);
  } catch (const Error& e) {
    throw Error(ErrorCode::IllPosed, std::string("controller network: ") + e.what());
  }
}

int settle_horizon(double radius, int min_steps) {
  if (!(radius < 1.0)) return min_steps;
  const double tau = radius > 0.0 ? -1.0 / std::log(radius) : 1.0;
  return std::max(min_steps, static_cast<int>(std::ceil(2.0 * 10.0 * tau)));
}

SimulationResult simulate_closed_loop(const NetworkModel& model, const ControllerRealization& ctrl,
                                      const Vec& x0, const Vec& xi0, NoiseKind noise, int horizon,
                                      std::uint64_t seed) {
  GeneralizedPlant g;
  try {
    g = assemble_generalized_plant(model);
  } catch (const Error& e) {
    throw Error(ErrorCode::IllPosed, std::string("plant network: ") + e.what());
  }
  return simulate_flat(g, flatten_controller(ctrl), x0, xi0, noise, horizon, seed);
}

SimulationResult simulate_flat(const GeneralizedPlant& g, const FlatStateSpace& k, const Vec& x0,
                               const Vec& xi0, NoiseKind noise, int horizon, std::uint64_t seed) {
  if (x0.size() != g.A.rows() || xi0.size() != k.A.rows())
    throw Error(ErrorCode::DimensionMismatch, "initial state sizes do not match the closed loop");
  if (g.D22.size() && g.D22.cwiseAbs().maxCoeff() != 0.0)
    throw Error(ErrorCode::IllPosed, "simulation requires D22 = 0");

  SimulationResult r;
  r.seed = seed;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Vec x = x0, xi = xi0;
  const Eigen::Index nd = g.B1.cols();
  for (int t = 0; t < horizon; ++t) {
    Vec d = Vec::Zero(nd);
    if (noise == NoiseKind::White)
      for (Eigen::Index a = 0; a < nd; ++a) d(a) = normal(rng);
    const Vec y = g.C2 * x + g.D21 * d;
    const Vec u = k.C * xi + k.D * y;
    const Vec z = g.C1 * x + g.D11 * d + g.D12 * u;
    r.x.push_back(x);
    r.xi.push_back(xi);
    r.u.push_back(u);
    r.z.push_back(z);
    r.d.push_back(d);
    x = g.A * x + g.B1 * d + g.B2 * u;
    xi = k.A * xi + k.B * y;
  }
  r.tail_start = horizon / 2;
  double acc = 0.0;
  for (int t = r.tail_start; t < horizon; ++t) acc += r.z[t].squaredNorm();
  r.tail_mean_z2 = horizon > r.tail_start ? acc / (horizon - r.tail_start) : 0.0;
  return r;
}

void SimulationResult::write_csv(std::ostream& os) const {
  auto head = [&](const char* name, const std::vector<Vec>& v) {
    if (v.empty()) return;
    for (Eigen::Index a = 0; a < v.front().size(); ++a) os << ',' << name << a + 1;
  };
  os << "step";
  head("x", x);
  head("xi", xi);
  head("u", u);
  head("z", z);
  head("d", d);
  os << '\n';
  os.precision(12);
  for (size_t t = 0; t < x.size(); ++t) {
    os << t;
    for (const auto* series : {&x, &xi, &u, &z, &d})
      for (Eigen::Index a = 0; a < (*series)[t].size(); ++a) os << ',' << (*series)[t](a);
    os << '\n';
  }
}

// ---------------------------------------------------------------- scaling

const char* bench_mode_name(BenchMode m) {
  return m == BenchMode::Distributed ? "distributed" : "central";
}

BenchRow bench_one(int L, BenchMode mode, const BenchOptions& opt) {
  BenchRow row;
  row.L = L;
  row.mode = mode;
  row.seed = opt.seed;
  row.achieved_gamma = opt.gamma;
  try {
    const Topology topo = cycle_topology(L);
    NetworkModel model = gen_oscillator(topo, random_oscillator_params(topo, opt.seed));
    if (mode == BenchMode::Central) model = collapse_to_single_node(model);

    using clock = std::chrono::steady_clock;
    const auto t0 = clock::now();
    sdp::SolverSettings s = opt.solver;
    s.deadline = t0 + std::chrono::duration_cast<clock::duration>(
                          std::chrono::duration<double>(opt.budget_secs));
    const ExistenceProblem ep =
        build_existence_problem(model, opt.gamma, SynthesisMode::Distributed);
    row.variables = ep.problem.scalar_count();
    row.dims = ep.dims;
    const sdp::SdpSolution sol = sdp::solve(ep.problem, s);
    row.wall_ms = std::chrono::duration<double, std::milli>(clock::now() - t0).count();
    switch (sol.status) {
      case sdp::SolveStatus::Feasible: row.status = "feasible"; break;
      case sdp::SolveStatus::Infeasible: row.status = "infeasible"; break;
      case sdp::SolveStatus::Budget: row.status = "over-budget"; break;
      default: row.status = "numerical-failure"; break;
    }
    row.verified = sol.status == sdp::SolveStatus::Feasible && sol.verified;
  } catch (const Error& e) {
    row.status = std::string("error:") + error_name(e.code());
  }
  return row;
}

std::vector<BenchRow> bench_scaling(const std::vector<int>& sizes,
                                    const std::vector<BenchMode>& modes, const BenchOptions& opt) {
  std::vector<BenchRow> rows;
  for (int L : sizes)
    for (BenchMode m : modes) rows.push_back(bench_one(L, m, opt));
  return rows;
}

void write_bench_header(std::ostream& os) {
  os << "L,mode,seed,status,wall_ms,achieved_gamma,verified\n";
}

void write_bench_row(std::ostream& os, const BenchRow& r) {
  os << r.L << ',' << bench_mode_name(r.mode) << ',' << r.seed << ',' << r.status << ','
     << r.wall_ms << ',' << r.achieved_gamma << ',' << (r.verified ? 1 : 0) << '\n';
}

}  // namespace dh2
