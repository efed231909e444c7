// dh2ctl: command-line front end for analysis, synthesis, simulation and benchmarks.
#include "dh2/bench.hpp"
#include "dh2/controller_io.hpp"
#include "dh2/model_io.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>

namespace {

using namespace dh2;

enum Exit : int { kOk = 0, kNotVerified = 1, kParse = 2, kHypothesis = 3, kReconstruction = 4 };

int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::ParseError:
    case ErrorCode::DimensionMismatch:
      return kParse;
    case ErrorCode::HypothesisViolated:
    case ErrorCode::SingularInterconnection:
    case ErrorCode::SingularZ:
    case ErrorCode::IllPosed:
      return kHypothesis;
    case ErrorCode::NearSingularCompletion:
    case ErrorCode::SingularY:
    case ErrorCode::InertiaMismatch:
    case ErrorCode::SingularPi:
    case ErrorCode::EliminationPreconditionFailed:
    case ErrorCode::ReconstructionFailed:
      return kReconstruction;
    default:
      return kNotVerified;
  }
}

struct Bracket {
  double lo = 0.0, hi = 0.0;
};

std::optional<Bracket> parse_bracket(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto colon = s.find(':');
  if (colon == std::string::npos) throw Error(ErrorCode::ParseError, "--bisect expects lo:hi");
  Bracket b;
  try {
    b.lo = std::stod(s.substr(0, colon));
    b.hi = std::stod(s.substr(colon + 1));
  } catch (const std::exception&) {
    throw Error(ErrorCode::ParseError, "--bisect expects two numbers lo:hi");
  }
  if (!(b.lo > 0.0 && b.hi > b.lo)) throw Error(ErrorCode::ParseError, "--bisect needs 0 < lo < hi");
  return b;
}

void emit(const Json& report, const std::string& out) {
  if (out.empty())
    std::cout << report.dump(1) << '\n';
  else
    write_json_file(out, report);
}

Json residual_json(const ResidualReport& r) {
  Json j;
  j["verified"] = r.verified;
  j["lambda_max"] = r.lambda_max;
  j["strictness"] = r.eps;
  j["trace_sum"] = r.trace_sum;
  j["trace_slack"] = r.slack;
  j["gamma_min"] = std::sqrt(std::max(0.0, r.trace_sum));
  return j;
}

Json verification_json(const VerificationReport& v) {
  Json j;
  j["verified"] = v.verified;
  j["well_posed"] = v.well_posed.ok;
  j["well_posed_rcond"] = v.well_posed.rcond;
  j["spectral_radius"] = v.spectral_radius;
  j["h2"] = v.h2;
  j["gamma"] = v.gamma;
  j["residuals"] = residual_json(v.residuals);
  j["message"] = v.message;
  return j;
}

// ------------------------------------------------------------------ analyze

struct AnalyzeArgs {
  std::string model, cert, out, bisect;
  std::optional<double> gamma;
  double eps = 1e-7;
};

int cmd_analyze(const AnalyzeArgs& a) {
  const NetworkModel model = model_from_json(read_json_file(a.model));
  Json report;
  if (!a.cert.empty()) {
    AnalysisCertificate cert = certificate_from_json(read_json_file(a.cert), model);
    if (a.gamma) cert.gamma = *a.gamma;
    const ResidualReport r = analysis_residuals(model, cert);
    report = residual_json(r);
    report["gamma"] = cert.gamma;
    emit(report, a.out);
    return r.verified ? kOk : kNotVerified;
  }
  const auto bracket = parse_bracket(a.bisect);
  if (!a.gamma && !bracket)
    throw Error(ErrorCode::ParseError, "analyze without --cert needs --gamma or --bisect");
  double gamma = a.gamma.value_or(0.0);
  sdp::SdpSolution sol;
  if (bracket) {
    auto builder = [&](double g) { return build_analysis_problem(model, g, a.eps).problem; };
    try {
      const auto b = sdp::bisect_gamma(builder, bracket->lo, bracket->hi, 1e-3);
      gamma = b.gamma;
      sol = b.solution;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::InfeasibleAtHi) throw;
      report["status"] = "infeasible";
      report["message"] = e.what();
      emit(report, a.out);
      return kNotVerified;
    }
  }
  const AnalysisProblem ap = build_analysis_problem(model, gamma, a.eps);
  if (!bracket) sol = sdp::solve(ap.problem);
  report["status"] = sdp::status_name(sol.status);
  report["gamma"] = gamma;
  if (sol.status != sdp::SolveStatus::Feasible) {
    report["message"] = sol.message;
    emit(report, a.out);
    return kNotVerified;
  }
  const AnalysisCertificate cert = extract_analysis_certificate(ap, sol);
  const ResidualReport r = analysis_residuals(model, cert);
  report["residuals"] = residual_json(r);
  report["certificate"] = certificate_to_json(cert);
  report["verified"] = r.verified;
  emit(report, a.out);
  return r.verified ? kOk : kNotVerified;
}

// -------------------------------------------------------------------- synth

struct SynthArgs {
  std::string model, mode = "distributed", out, report, bisect, multipliers;
  std::optional<double> gamma;
  double eps = 1e-7;
  double budget = 0.0;
};

int cmd_synth(const SynthArgs& a) {
  const NetworkModel model = model_from_json(read_json_file(a.model));
  const auto bracket = parse_bracket(a.bisect);
  if (!a.gamma && !bracket) throw Error(ErrorCode::ParseError, "synth needs --gamma or --bisect");
  sdp::SolverSettings solver;
  if (a.budget > 0.0)
    solver.deadline = std::chrono::steady_clock::now() +
                      std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                          std::chrono::duration<double>(a.budget));

  Json report;
  report["mode"] = a.mode;
  if (a.mode == "central") {
    double gamma = a.gamma.value_or(0.0);
    if (bracket) {
      // The centralized problem reuses the existence builder on the collapsed plant.
      const NetworkModel flat = collapse_to_single_node(model);
      auto builder = [&](double g) {
        return build_existence_problem(flat, g, SynthesisMode::Distributed).problem;
      };
      gamma = sdp::bisect_gamma(builder, bracket->lo, bracket->hi, 1e-3, solver).gamma;
      gamma *= 1.0 + 1e-3;
    }
    const CentralResult c = synthesize_central(model, gamma, solver, a.eps);
    report["gamma"] = gamma;
    report["h2"] = c.h2;
    report["spectral_radius"] = c.spectral_radius;
    report["verified"] = c.verified;
    if (c.verified && !a.out.empty()) write_json_file(a.out, {{"central", central_to_json(c.controller)}});
    emit(report, a.report);
    return c.verified ? kOk : kNotVerified;
  }

  const bool distributed = a.mode == "distributed";
  if (!distributed && a.mode != "decentralized")
    throw Error(ErrorCode::ParseError, "unknown mode '" + a.mode + "'");
  const MultiplierSet fixed = a.multipliers.empty()
                                  ? passivity_multipliers(model.topology)
                                  : multipliers_from_json(read_json_file(a.multipliers), model.topology);
  SynthesisOptions opt;
  opt.existence.eps = a.eps;
  opt.solver = solver;
  double gamma = a.gamma.value_or(0.0);
  if (bracket) {
    ExistenceOptions eo = opt.existence;
    if (!distributed) eo.fixed = fixed;
    const SynthesisMode mode = distributed ? SynthesisMode::Distributed : SynthesisMode::Decentralized;
    auto builder = [&](double g) { return build_existence_problem(model, g, mode, eo).problem; };
    gamma = sdp::bisect_gamma(builder, bracket->lo, bracket->hi, 1e-3, solver).gamma;
    gamma *= 1.0 + 1e-3;
  }
  const SynthesisResult r = distributed ? synthesize_distributed(model, gamma, opt)
                                        : synthesize_decentralized(model, gamma, fixed, opt);
  report["gamma"] = gamma;
  report["verification"] = verification_json(r.report);
  Json q = Json::array();
  for (const auto& s : r.qmi)
    q.push_back({{"strategy", s.strategy}, {"lambda_max", s.lambda_max}, {"norm", s.residual_norm}});
  report["controller_residuals"] = q;
  report["verified"] = r.report.verified;
  if (r.report.verified && !a.out.empty()) write_json_file(a.out, controllers_to_json(r.controllers));
  emit(report, a.report);
  return r.report.verified ? kOk : kNotVerified;
}

// ------------------------------------------------------------------- h2norm

int cmd_h2norm(const std::string& model_path, const std::string& ctrl_path) {
  const NetworkModel model = model_from_json(read_json_file(model_path));
  FlatStateSpace sys;
  if (ctrl_path.empty()) {
    sys = assemble_interconnected(model);
  } else {
    const Json j = read_json_file(ctrl_path);
    const GeneralizedPlant g = assemble_generalized_plant(model);
    if (j.contains("central")) {
      sys = close_central(g, central_from_json(j.at("central")));
    } else {
      const FlatStateSpace k = flatten_controller(controllers_from_json(j));
      sys = close_central(g, {k.A, k.B, k.C, k.D});
    }
  }
  const StabilityResult st = is_stable(sys);
  Json out{{"spectral_radius", st.radius}, {"stable", st.stable}};
  if (st.stable) out["h2"] = h2_norm_lyapunov(sys);
  std::cout << out.dump(1) << '\n';
  return st.stable ? kOk : kNotVerified;
}

// ----------------------------------------------------------------- simulate

struct SimArgs {
  std::string model, controllers, out, noise = "zero";
  int horizon = 0;
  int runs = 1;
  std::uint64_t seed = 1;
};

int cmd_simulate(const SimArgs& a) {
  const NetworkModel model = model_from_json(read_json_file(a.model));
  const Json j = read_json_file(a.controllers);
  const GeneralizedPlant g = assemble_generalized_plant(model);
  FlatStateSpace k;
  if (j.contains("central")) {
    const CentralController c = central_from_json(j.at("central"));
    k = {c.AK, c.BK, c.CK, c.DK};
  } else {
    k = flatten_controller(controllers_from_json(j));
  }
  const FlatStateSpace cl = close_central(g, {k.A, k.B, k.C, k.D});
  const StabilityResult st = is_stable(cl);
  const int horizon = a.horizon > 0 ? a.horizon : settle_horizon(st.radius);
  const NoiseKind noise = a.noise == "white" ? NoiseKind::White : NoiseKind::Zero;
  if (a.noise != "white" && a.noise != "zero")
    throw Error(ErrorCode::ParseError, "--noise must be zero or white");

  std::vector<double> tails;
  for (int run = 0; run < a.runs; ++run) {
    const std::uint64_t seed = a.seed + static_cast<std::uint64_t>(run);
    Vec x0 = Vec::Zero(g.A.rows());
    if (noise == NoiseKind::Zero) {
      std::mt19937_64 rng(seed);
      std::normal_distribution<double> n;
      for (Eigen::Index t = 0; t < x0.size(); ++t) x0(t) = n(rng);
    }
    const SimulationResult r = simulate_flat(g, k, x0, Vec::Zero(k.A.rows()), noise, horizon, seed);
    tails.push_back(r.tail_mean_z2);
    if (run == 0 && !a.out.empty()) {
      std::ofstream os(a.out);
      if (!os) throw Error(ErrorCode::ParseError, "cannot write " + a.out);
      r.write_csv(os);
    }
  }
  double mean = 0.0, var = 0.0;
  for (double t : tails) mean += t;
  mean /= static_cast<double>(tails.size());
  for (double t : tails) var += (t - mean) * (t - mean);
  const double se = tails.size() > 1 ? std::sqrt(var / static_cast<double>(tails.size() - 1) /
                                                 static_cast<double>(tails.size()))
                                     : 0.0;
  Json out{{"runs", a.runs},       {"horizon", horizon},        {"seed", a.seed},
           {"tail_mean_z2", mean}, {"tail_standard_error", se}, {"spectral_radius", st.radius}};
  if (st.stable) out["h2_squared"] = std::pow(h2_norm_lyapunov(cl), 2);
  std::cout << out.dump(1) << '\n';
  return st.stable ? kOk : kNotVerified;
}

// -------------------------------------------------------------------- bench

int cmd_bench(const std::vector<int>& sizes, const std::vector<std::string>& modes,
              const BenchOptions& opt, const std::string& out) {
  std::vector<BenchMode> ms;
  for (const auto& m : modes) {
    if (m == "distributed")
      ms.push_back(BenchMode::Distributed);
    else if (m == "central")
      ms.push_back(BenchMode::Central);
    else
      throw Error(ErrorCode::ParseError, "unknown bench mode '" + m + "'");
  }
  std::ofstream file;
  if (!out.empty()) {
    file.open(out);
    if (!file) throw Error(ErrorCode::ParseError, "cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  write_bench_header(os);
  bool all_ok = true;
  for (int L : sizes)
    for (BenchMode m : ms) {
      const BenchRow row = bench_one(L, m, opt);
      write_bench_row(os, row);
      os.flush();
      if (m == BenchMode::Distributed && !row.verified) all_ok = false;
    }
  return all_ok ? kOk : kNotVerified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed and decentralized H2 synthesis for interconnected systems"};
  app.require_subcommand(1);

  AnalyzeArgs an;
  auto* analyze = app.add_subcommand("analyze", "check or search for an analysis certificate");
  analyze->add_option("--model", an.model, "model file")->required()->check(CLI::ExistingFile);
  analyze->add_option("--cert", an.cert, "certificate file")->check(CLI::ExistingFile);
  analyze->add_option("--gamma", an.gamma, "performance level");
  analyze->add_option("--bisect", an.bisect, "bisection bracket lo:hi");
  analyze->add_option("--eps-strict", an.eps, "strictness of the matrix inequalities");
  analyze->add_option("--out", an.out, "report file (stdout when absent)");

  SynthArgs sy;
  auto* synth = app.add_subcommand("synth", "synthesize controllers");
  synth->add_option("--model", sy.model, "model file")->required()->check(CLI::ExistingFile);
  synth->add_option("--mode", sy.mode, "distributed | decentralized | central");
  synth->add_option("--gamma", sy.gamma, "performance level");
  synth->add_option("--bisect", sy.bisect, "bisection bracket lo:hi");
  synth->add_option("--multipliers", sy.multipliers, "fixed multipliers (decentralized)")
      ->check(CLI::ExistingFile);
  synth->add_option("--eps-strict", sy.eps, "strictness of the matrix inequalities");
  synth->add_option("--budget-secs", sy.budget, "solver time budget");
  synth->add_option("--out", sy.out, "controller file");
  synth->add_option("--report", sy.report, "report file (stdout when absent)");

  std::string h2_model, h2_ctrl;
  auto* h2 = app.add_subcommand("h2norm", "H2 norm of the open or closed loop");
  h2->add_option("--model", h2_model, "model file")->required()->check(CLI::ExistingFile);
  h2->add_option("--controllers", h2_ctrl, "controller file")->check(CLI::ExistingFile);

  SimArgs sa;
  auto* sim = app.add_subcommand("simulate", "simulate the closed loop");
  sim->add_option("--model", sa.model, "model file")->required()->check(CLI::ExistingFile);
  sim->add_option("--controllers", sa.controllers, "controller file")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--noise", sa.noise, "zero | white");
  sim->add_option("--horizon", sa.horizon, "number of steps (default from the decay rate)");
  sim->add_option("--runs", sa.runs, "number of seeds")->check(CLI::PositiveNumber);
  sim->add_option("--seed", sa.seed, "first seed");
  sim->add_option("--out", sa.out, "CSV time series of the first run");

  std::vector<int> sizes{3, 10, 50};
  std::vector<std::string> modes{"distributed", "central"};
  BenchOptions bo;
  std::string bench_out;
  auto* bench = app.add_subcommand("bench", "existence-problem timing on cycle networks");
  bench->add_option("--sizes", sizes, "network sizes")->delimiter(',');
  bench->add_option("--modes", modes, "distributed,central")->delimiter(',');
  bench->add_option("--gamma", bo.gamma, "performance level");
  bench->add_option("--budget-secs", bo.budget_secs, "per-row time budget");
  bench->add_option("--seed", bo.seed, "parameter seed");
  bench->add_option("--out", bench_out, "CSV file (stdout when absent)");

  std::string topo = "cycle", gen_out;
  int gen_L = 3;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-oscillator", "write an oscillator network model");
  gen->add_option("--topology", topo, "triangle | cycle");
  gen->add_option("--L", gen_L, "number of nodes (cycle)")->check(CLI::PositiveNumber);
  gen->add_option("--seed", gen_seed, "parameter seed (cycle)");
  gen->add_option("--out", gen_out, "model file (stdout when absent)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kParse;
  }

  try {
    if (*analyze) return cmd_analyze(an);
    if (*synth) return cmd_synth(sy);
    if (*h2) return cmd_h2norm(h2_model, h2_ctrl);
    if (*sim) return cmd_simulate(sa);
    if (*bench) return cmd_bench(sizes, modes, bo, bench_out);
    if (*gen) {
      NetworkModel m;
      if (topo == "triangle") {
        m = gen_oscillator(triangle_topology(), triangle_params());
      } else if (topo == "cycle") {
        const Topology t = cycle_topology(gen_L);
        m = gen_oscillator(t, random_oscillator_params(t, gen_seed));
      } else {
        throw Error(ErrorCode::ParseError, "unknown topology '" + topo + "'");
      }
      emit(model_to_json(m), gen_out);
      return kOk;
    }
  } catch (const Error& e) {
    std::cerr << "error [" << error_name(e.code()) << "]";
    if (!e.stage().empty()) std::cerr << " stage " << e.stage();
    std::cerr << ": " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const Json::exception& e) {
    std::cerr << "error [ParseError]: " << e.what() << '\n';
    return kParse;
  }
  return kOk;
}
