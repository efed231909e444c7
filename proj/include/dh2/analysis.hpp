#pragma once

#include "dh2/netmodel.hpp"

#include <cstdint>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dh2 {

// ---------------------------------------------------------------- stability

struct StabilityResult {
  bool stable = false;
  double radius = 0.0;
};
StabilityResult is_stable(const FlatStateSpace& sys);
double spectral_radius(const Mat& A);

// Solves Aᵀ X A − X + Q = 0 through a complex Schur factorization of A.
Mat dlyap(const Mat& A, const Mat& Q);

double h2_norm_lyapunov(const FlatStateSpace& sys);
// Test oracle: periodic trapezoid rule on [−π, π) with grid_size samples.
double h2_norm_freqgrid(const FlatStateSpace& sys, int grid_size);

// --------------------------------------------------------- interconnection scales

// X11 per ordered pair (i, j), X12 for i > j only. Missing entries read as zero.
struct MultiplierSet {
  std::map<std::pair<int, int>, Mat> x11;
  std::map<std::pair<int, int>, Mat> x12;

  Mat get11(int i, int j, int width) const;
  Mat get12(int i, int j, int width) const;  // requires i > j
  static MultiplierSet zeros(const Topology& topology);
  void validate(const Topology& topology) const;
};

struct ZBlocks {
  Mat Z11, Z12, Z22;
  Mat full() const;  // [[Z11, Z12], [Z12ᵀ, Z22]]
};
ZBlocks assemble_Z_blocks(const Topology& topology, const MultiplierSet& mult, int node);

// Per-pair families produced by the multiplier extension, stored for i > j.
struct PairFamilies {
  Mat x11p_ij, x11p_ji, x12p;
  Mat x11c_ij, x11c_ji, x12c;
  Mat x11pc_ij, x11pc_ji, x12pc, x12cp;
};
struct ExtendedMultipliers {
  std::map<std::pair<int, int>, PairFamilies> pairs;
};

// Closed-loop topology: per edge, width n_ij + n_ij^C.
Topology closed_loop_topology(const Topology& plant, const Topology& ctrl);
// Pair multipliers of the closed loop in interleaved channel order.
MultiplierSet closed_loop_multipliers(const ExtendedMultipliers& ext);
ZBlocks closed_loop_scales(const Topology& plant, const Topology& ctrl,
                           const ExtendedMultipliers& ext, int node);

// --------------------------------------------------------------- certificates

Mat build_Ti(const SubsystemRealization& node);
Mat build_Si(const SubsystemRealization& node);

// Middle matrix diag(−X, X, [[Z11, Z12], [Z12ᵀ, Z22]], I_q, −ρ I_f).
Mat supply_middle(const Mat& X, const ZBlocks& z, int q, int f, double rho);

struct AnalysisCertificate {
  std::vector<Mat> X;
  std::vector<double> rho;
  MultiplierSet mult;
  double gamma = 0.0;
};

// "≺ 0" is read as λ_max ≤ −strict_eps(M).
inline double strict_eps(const Mat& m) { return 1e-8 * (1.0 + norm2(m)); }

struct ResidualReport {
  std::vector<Mat> residuals;
  std::vector<double> lambda_max;
  std::vector<double> eps;
  std::vector<bool> storage_pd;
  double trace_sum = 0.0;
  double slack = 0.0;  // γ² − trace_sum
  bool verified = false;
};

ResidualReport analysis_residuals(const NetworkModel& model, const AnalysisCertificate& cert);

// --------------------------------------------------------- closed-loop checks

struct ClosedLoopNetwork {
  NetworkModel network;  // closed-loop nodes, interleaved channels, no u / y
  Topology ctrl_topology;
};

struct VerificationReport {
  ResidualReport residuals;
  bool hypothesis_ok = false;
  WellPosedness well_posed;
  double spectral_radius = 0.0;
  double h2 = 0.0;
  double gamma = 0.0;
  bool verified = false;
  std::string message;
};

VerificationReport verify_closed_loop(const ClosedLoopNetwork& closed,
                                      const std::vector<Mat>& XK, const std::vector<double>& rho,
                                      const MultiplierSet& closed_mult, double gamma);

// ----------------------------------------------------------- trajectory checks

struct DissipationResult {
  bool ok = false;
  double worst_slack = -std::numeric_limits<double>::infinity();  // max of ΔV − σ, should be ≤ 0
  double worst_neutrality = 0.0;  // max |Σ_i σ_i^int|
  bool decreasing_free = false;   // V strictly decreasing under zero disturbance
  std::uint64_t seed = 0;
  std::string message;
};

DissipationResult trajectory_dissipation_check(const NetworkModel& model,
                                               const AnalysisCertificate& cert, int horizon,
                                               std::uint64_t seed);

// Internal supply σ_i^int of one node at one time step.
double internal_supply(const ZBlocks& z, const Vec& s, const Vec& o);

}  // namespace dh2
