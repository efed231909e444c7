#pragma once

#include "dh2/synthesis.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace dh2 {

// Second-order oscillators coupled by springs, sampled with a first-order hold
// approximation of the matrix exponential.
struct OscillatorParams {
  std::vector<double> mass;
  std::vector<double> damping;
  std::map<std::pair<int, int>, double> stiffness;  // keyed (i < j)
  double sample_time = 0.1;

  void validate(const Topology& topology) const;
};

Topology cycle_topology(int L);
Topology triangle_topology();

OscillatorParams triangle_params();
// mass ~ U(1, 2), damping ~ U(2, 3), stiffness ~ U(1, 2).
OscillatorParams random_oscillator_params(const Topology& topology, std::uint64_t seed);

NetworkModel gen_oscillator(const Topology& topology, const OscillatorParams& params);

// ------------------------------------------------------------- simulation

enum class NoiseKind { Zero, White };

struct SimulationResult {
  std::vector<Vec> x, xi, u, z, d;  // one entry per step, stacked over nodes
  std::uint64_t seed = 0;
  int tail_start = 0;
  double tail_mean_z2 = 0.0;  // mean of ‖z(k)‖² over the tail window

  void write_csv(std::ostream& os) const;
};

// The controller network flattened to one system from y to u.
FlatStateSpace flatten_controller(const ControllerRealization& ctrl);

// Iterates plant and a flat controller from y to u.
SimulationResult simulate_flat(const GeneralizedPlant& plant, const FlatStateSpace& ctrl,
                               const Vec& x0, const Vec& xi0, NoiseKind noise, int horizon,
                               std::uint64_t seed);

// Throws IllPosed when the controller network cannot be flattened.
SimulationResult simulate_closed_loop(const NetworkModel& model, const ControllerRealization& ctrl,
                                      const Vec& x0, const Vec& xi0, NoiseKind noise, int horizon,
                                      std::uint64_t seed);

// Horizon covering ten slowest time constants, at least min_steps.
int settle_horizon(double spectral_radius, int min_steps = 200);

// ---------------------------------------------------------------- scaling

enum class BenchMode { Distributed, Central };
const char* bench_mode_name(BenchMode m);

struct BenchRow {
  int L = 0;
  BenchMode mode = BenchMode::Distributed;
  std::uint64_t seed = 0;
  std::string status;
  double wall_ms = 0.0;
  double achieved_gamma = 0.0;
  bool verified = false;
  int variables = 0;
  std::vector<NodeLmiDims> dims;
};

struct BenchOptions {
  double gamma = 10.0;
  double budget_secs = 600.0;
  std::uint64_t seed = 1;
  sdp::SolverSettings solver;
};

// Existence-problem solve time on seeded cycle networks. The centralized
// variant treats the flattened plant as a single node.
BenchRow bench_one(int L, BenchMode mode, const BenchOptions& opt);
std::vector<BenchRow> bench_scaling(const std::vector<int>& sizes,
                                    const std::vector<BenchMode>& modes, const BenchOptions& opt);

void write_bench_header(std::ostream& os);
void write_bench_row(std::ostream& os, const BenchRow& row);

}  // namespace dh2
