#pragma once

#include "dh2/analysis.hpp"
#include "dh2/netmodel.hpp"
#include "dh2/sdp.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dh2 {

using dh2::kernel_basis;

enum class SynthesisMode { Distributed, Decentralized };

struct ExistenceOptions {
  double eps = 1e-7;            // strictness of every matrix inequality
  double coupling_delta = 0.0;  // [X I; I Y] ⪰ max(eps, coupling_delta)·I
  bool regularize = false;      // minimize Σ trace(X_i + Y_i) instead of a pure feasibility solve
  // Decentralized mode: fixed plant multipliers (passivity when absent).
  std::optional<MultiplierSet> fixed;
};

// Sizes of the three per-node matrix inequalities.
struct NodeLmiDims {
  int storage = 0;  // projected dissipation inequality in X
  int dual = 0;     // projected dual inequality in Y
  int coupling = 0; // [X I; I Y]
  bool operator==(const NodeLmiDims&) const = default;
};

struct ExistenceProblem {
  sdp::SdpProblem problem;
  SynthesisMode mode = SynthesisMode::Distributed;
  double gamma = 0.0;
  std::vector<sdp::Var> X, Y, alpha, beta;
  std::map<std::pair<int, int>, sdp::Var> x11, y11;  // ordered pairs
  std::map<std::pair<int, int>, sdp::Var> x12, y12;  // i > j
  MultiplierSet fixed;                               // decentralized mode
  std::vector<NodeLmiDims> dims;
};

// Passivity multipliers X11 = 0, X12 = ½I on every edge.
MultiplierSet passivity_multipliers(const Topology& topology);

// Throws HypothesisViolated unless B^Sd = 0 and D^yd = 0 on every node;
// SingularZ in decentralized mode when a node's fixed Z matrix is singular.
ExistenceProblem build_existence_problem(const NetworkModel& model, double gamma,
                                         SynthesisMode mode, const ExistenceOptions& opt = {});

// Search for an analysis certificate: per node X_i ≻ 0, ρ_i > 0 and pair
// multipliers with T_iᵀ M_i T_i ≺ 0 and the trace bound below γ².
struct AnalysisProblem {
  sdp::SdpProblem problem;
  double gamma = 0.0;
  std::vector<sdp::Var> X, rho;
  std::map<std::pair<int, int>, sdp::Var> x11, x12;
};
AnalysisProblem build_analysis_problem(const NetworkModel& model, double gamma, double eps = 1e-7);
AnalysisCertificate extract_analysis_certificate(const AnalysisProblem& ap,
                                                 const sdp::SdpSolution& sol);

// The flattened plant as one subsystem without interconnection channels.
NetworkModel collapse_to_single_node(const NetworkModel& model);

struct SynthesisCertificate {
  std::vector<Mat> X, Y;
  std::vector<double> alpha, beta;
  MultiplierSet xmult, ymult;
  double gamma = 0.0;
};

SynthesisCertificate extract_certificate(const ExistenceProblem& ep, const sdp::SdpSolution& sol);

double recover_rho(double alpha, double beta);

// ---------------------------------------------------------------- step 1

struct Completion {
  Mat XK;
  Mat M, N;  // M Nᵀ = I − X Y
  double sigma_min = 0.0;
};
// Throws NearSingularCompletion when σ_min(I − XY) < 1e-10·(1 + ‖X‖‖Y‖).
Completion reconstruct_XK(const Mat& X, const Mat& Y);

// ---------------------------------------------------------------- step 2

struct PairExtension {
  PairFamilies families;
  Mat diff;           // X^P − (Y^P)⁻¹
  Mat vplus, vminus;  // scaled eigenvectors, diff = V⁺V⁺ᵀ − V⁻V⁻ᵀ
  Mat M12;
  int perturbed = 0;  // eigenvalues moved off zero
};

// Pair (i, j) with i > j; blocks are the plant multipliers of that pair.
PairExtension extend_pair(const Mat& x11_ij, const Mat& x11_ji, const Mat& x12_ij,
                          const Mat& y11_ij, const Mat& y11_ji, const Mat& y12_ij);
ExtendedMultipliers extend_multipliers(const Topology& topology, const MultiplierSet& xm,
                                       const MultiplierSet& ym);

// ---------------------------------------------------------------- step 3

// z holds the closed-loop scales in grouped channel order (plant, then controller).
Mat assemble_Pi(const Mat& XK, double rho, const ZBlocks& z, int q, int f);

// Interleaved closed-loop scales reordered to grouped order.
ZBlocks group_scales(const ZBlocks& interleaved, const std::vector<int>& perm);

struct QmiResult {
  Mat theta;
  double lambda_max = 0.0;  // of F(Θ)
  double residual_norm = 0.0;
  int strategy = 0;         // 1 constructive, 2 refined
  double projection_v = 0.0;  // λ_max of the V-side projection (must be < 0)
  double projection_u = 0.0;  // λ_min of the U-side projection (must be > 0)
};

// Residual F(Θ) = [I; UᵀΘV + W]ᵀ P [I; UᵀΘV + W].
Mat qmi_residual(const Mat& P, const UVW& uvw, const Mat& theta);

// Throws EliminationPreconditionFailed, SingularPi or ReconstructionFailed.
QmiResult solve_theta_qmi(const Mat& P, const UVW& uvw);

// ---------------------------------------------------------------- pipelines

struct ControllerRealization {
  Topology ctrl_topology;
  std::vector<Mat> theta;
  std::vector<ThetaShape> shapes;
};

struct SynthesisResult {
  ControllerRealization controllers;
  SynthesisCertificate certificate;
  sdp::SdpSolution solution;
  std::vector<Mat> XK;
  std::vector<double> rho;
  std::vector<Completion> completions;
  std::vector<PairExtension> extensions;
  ExtendedMultipliers extended;
  MultiplierSet closed_multipliers;
  std::vector<QmiResult> qmi;
  ClosedLoopNetwork closed;
  VerificationReport report;
  std::vector<NodeLmiDims> dims;
};

struct SynthesisOptions {
  ExistenceOptions existence;
  sdp::SolverSettings solver;
};

// Throws Infeasible when the existence problem has no solution; step errors
// carry the stage name ("completion", "extension", "qmi", ...).
SynthesisResult synthesize_distributed(const NetworkModel& model, double gamma,
                                       const SynthesisOptions& opt = {});
SynthesisResult synthesize_decentralized(const NetworkModel& model, double gamma,
                                         const MultiplierSet& fixed,
                                         const SynthesisOptions& opt = {});

// Builds the closed loop of plant and controllers (interleaved channels).
ClosedLoopNetwork close_network(const NetworkModel& model, const ControllerRealization& ctrl);

// ------------------------------------------------------------- centralized

struct CentralController {
  Mat AK, BK, CK, DK;
};

struct CentralResult {
  CentralController controller;
  sdp::SdpSolution solution;
  FlatStateSpace closed;
  double spectral_radius = 0.0;
  double h2 = 0.0;
  bool verified = false;
};

FlatStateSpace close_central(const GeneralizedPlant& g, const CentralController& k);

// Full-order output feedback on the flattened plant; requires D22 = 0.
CentralResult synthesize_central(const NetworkModel& model, double gamma,
                                 const sdp::SolverSettings& solver = {}, double eps = 1e-7);

}  // namespace dh2
