#include "dh2/synthesis.hpp"

#include <sstream>

namespace dh2 {

namespace {

std::string node_tag(const std::string& stage, int i) {
  return stage + " (node " + std::to_string(i + 1) + ")";
}

template <class F>
auto tagged(const std::string& stage, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (!e.stage().empty()) throw;
    throw Error(e.code(), e.what(), stage);
  }
}

sdp::SdpSolution solve_existence(const ExistenceProblem& ep, const sdp::SolverSettings& s) {
  sdp::SdpSolution sol = sdp::solve(ep.problem, s);
  switch (sol.status) {
    case sdp::SolveStatus::Feasible:
      return sol;
    case sdp::SolveStatus::Infeasible:
      throw Error(ErrorCode::Infeasible, "existence problem is infeasible " + sol.message,
                  "existence");
    default:
      throw Error(ErrorCode::NumericalFailure,
                  std::string("existence solve ended with ") + sdp::status_name(sol.status) +
                      ": " + sol.message,
                  "existence");
  }
}

// Solves the existence problem and completes every X_i; on a near-singular
// completion the problem is re-solved once with a strengthened coupling.
void solve_and_complete(const NetworkModel& model, double gamma, SynthesisMode mode,
                        const SynthesisOptions& opt, SynthesisResult& r) {
  ExistenceOptions eo = opt.existence;
  for (int attempt = 0;; ++attempt) {
    const ExistenceProblem ep = build_existence_problem(model, gamma, mode, eo);
    r.dims = ep.dims;
    r.solution = solve_existence(ep, opt.solver);
    r.certificate = extract_certificate(ep, r.solution);
    r.completions.clear();
    try {
      for (size_t i = 0; i < r.certificate.X.size(); ++i)
        r.completions.push_back(reconstruct_XK(r.certificate.X[i], r.certificate.Y[i]));
      break;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NearSingularCompletion || attempt > 0) throw;
      eo.coupling_delta = std::max(eo.coupling_delta, 1e-6);
    }
  }
  r.XK.clear();
  r.rho.clear();
  for (size_t i = 0; i < r.completions.size(); ++i) {
    r.XK.push_back(r.completions[i].XK);
    r.rho.push_back(recover_rho(r.certificate.alpha[i], r.certificate.beta[i]));
  }
}

}  // namespace

ClosedLoopNetwork close_network(const NetworkModel& model, const ControllerRealization& ctrl) {
  ClosedLoopNetwork out;
  out.ctrl_topology = ctrl.ctrl_topology;
  out.network.topology = closed_loop_topology(model.topology, ctrl.ctrl_topology);
  for (int i = 0; i < model.topology.node_count(); ++i) {
    const auto pl = canonical_channel_layout(model.topology, i);
    const auto cl = canonical_channel_layout(ctrl.ctrl_topology, i);
    out.network.nodes.push_back(close_local(model.nodes[i], pl, cl, ctrl.theta[i]).node);
  }
  return out;
}

SynthesisResult synthesize_distributed(const NetworkModel& model, double gamma,
                                       const SynthesisOptions& opt) {
  SynthesisResult r;
  solve_and_complete(model, gamma, SynthesisMode::Distributed, opt, r);
  const Topology& topo = model.topology;
  const int L = topo.node_count();

  Topology ctrl(L);
  for (auto [a, b] : topo.edges()) {
    const int i = b, j = a, w = topo.width(a, b);
    ctrl.set_width(a, b, 3 * w);
    const auto& xm = r.certificate.xmult;
    const auto& ym = r.certificate.ymult;
    PairExtension e = tagged("extension", [&] {
      return extend_pair(xm.get11(i, j, w), xm.get11(j, i, w), xm.get12(i, j, w),
                         ym.get11(i, j, w), ym.get11(j, i, w), ym.get12(i, j, w));
    });
    r.extended.pairs[{i, j}] = e.families;
    r.extensions.push_back(std::move(e));
  }
  r.controllers.ctrl_topology = ctrl;
  r.closed_multipliers = closed_loop_multipliers(r.extended);
  const Topology closed = closed_loop_topology(topo, ctrl);

  for (int i = 0; i < L; ++i) {
    const auto& nd = model.nodes[i];
    const int nc = ctrl.channel_total(i);
    const auto perm = interleave_permutation(canonical_channel_layout(topo, i),
                                             canonical_channel_layout(ctrl, i));
    const ZBlocks z = group_scales(assemble_Z_blocks(closed, r.closed_multipliers, i), perm);
    QmiResult q = tagged(node_tag("qmi", i), [&] {
      const UVW uvw = build_uvw(nd, nc);
      return solve_theta_qmi(assemble_Pi(r.XK[i], r.rho[i], z, nd.q(), nd.f()), uvw);
    });
    r.controllers.theta.push_back(q.theta);
    r.controllers.shapes.push_back({nd.k(), nc, nd.nu(), nd.ny()});
    r.qmi.push_back(std::move(q));
  }

  r.closed = close_network(model, r.controllers);
  r.report = verify_closed_loop(r.closed, r.XK, r.rho, r.closed_multipliers, gamma);
  return r;
}

SynthesisResult synthesize_decentralized(const NetworkModel& model, double gamma,
                                         const MultiplierSet& fixed, const SynthesisOptions& opt) {
  SynthesisOptions o = opt;
  o.existence.fixed = fixed;
  SynthesisResult r;
  solve_and_complete(model, gamma, SynthesisMode::Decentralized, o, r);
  const Topology& topo = model.topology;
  const int L = topo.node_count();
  r.controllers.ctrl_topology = Topology(L);
  r.closed_multipliers = fixed;

  for (int i = 0; i < L; ++i) {
    const auto& nd = model.nodes[i];
    const ZBlocks z = assemble_Z_blocks(topo, fixed, i);
    QmiResult q = tagged(node_tag("qmi", i), [&] {
      return solve_theta_qmi(assemble_Pi(r.XK[i], r.rho[i], z, nd.q(), nd.f()), build_uvw(nd, 0));
    });
    r.controllers.theta.push_back(q.theta);
    r.controllers.shapes.push_back({nd.k(), 0, nd.nu(), nd.ny()});
    r.qmi.push_back(std::move(q));
  }

  r.closed = close_network(model, r.controllers);
  r.report = verify_closed_loop(r.closed, r.XK, r.rho, r.closed_multipliers, gamma);
  return r;
}

}  // namespace dh2
