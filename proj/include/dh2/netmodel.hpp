#pragma once

#include "dh2/linalg.hpp"

#include <map>
#include <utility>
#include <vector>

namespace dh2 {

// Undirected graph with a channel width per unordered node pair.
// Node indices are 0-based here; file formats use 1-based indices.
class Topology {
 public:
  Topology() = default;
  explicit Topology(int node_count) : node_count_(node_count) {}

  int node_count() const { return node_count_; }
  int width(int i, int j) const;
  void set_width(int i, int j, int w);

  std::vector<std::pair<int, int>> edges() const;  // (i < j) with width > 0
  std::vector<int> neighbors(int i) const;         // ascending
  int channel_total(int i) const;
  int total_channels() const;  // sum over nodes of channel_total

  bool operator==(const Topology& o) const {
    return node_count_ == o.node_count_ && widths_ == o.widths_;
  }

 private:
  int node_count_ = 0;
  std::map<std::pair<int, int>, int> widths_;
};

struct ChannelSlot {
  int neighbor;
  int offset;
  int width;
  bool operator==(const ChannelSlot&) const = default;
};

std::vector<ChannelSlot> canonical_channel_layout(const Topology& topology, int node);

// One node's realization; rows/columns of the interconnection blocks follow
// the canonical channel layout.
struct SubsystemRealization {
  Mat ATT, ATS, AST, ASS;
  Mat BTd, BSd, BTu, BSu;
  Mat CzT, CzS, Dzd, Dzu;
  Mat CyT, CyS, Dyd, Dyu;

  int k() const { return static_cast<int>(ATT.rows()); }
  int n() const { return static_cast<int>(ASS.rows()); }
  int f() const { return static_cast<int>(BTd.cols()); }
  int q() const { return static_cast<int>(CzT.rows()); }
  int nu() const { return static_cast<int>(BTu.cols()); }
  int ny() const { return static_cast<int>(CyT.rows()); }

  static SubsystemRealization zeros(int k, int n, int f, int q, int nu, int ny);
  // Throws DimensionMismatch on inconsistent blocks or when n() != expected_n.
  void validate(int expected_n) const;
};

struct NetworkModel {
  Topology topology;
  std::vector<SubsystemRealization> nodes;

  void validate() const;
};

struct FlatStateSpace {
  Mat A, B, C, D;
  int states() const { return static_cast<int>(A.rows()); }
};

// Flattened plant keeping the control channels: inputs (d, u), outputs (z, y).
struct GeneralizedPlant {
  Mat A, B1, B2, C1, C2, D11, D12, D21, D22;
};

Mat build_delta(const Topology& topology);

struct WellPosedness {
  bool ok = false;
  double rcond = 0.0;
};
WellPosedness well_posed(const NetworkModel& model);

FlatStateSpace assemble_interconnected(const NetworkModel& model);
GeneralizedPlant assemble_generalized_plant(const NetworkModel& model);

// Affine parameterization of the locally controlled node, Γ = Uᵀ Θ V + W.
// Column groups of Γ: (x, ξ, s, s^C, d); row groups: (x+, ξ+, o, o^C, z),
// where channel blocks list all plant channels, then all controller channels.
struct UVW {
  Mat U, V, W;
};
UVW build_uvw(const SubsystemRealization& plant, int controller_channels);

// Block widths of Θ: rows (ξ+, o^C, u), columns (ξ, s^C, y).
struct ThetaShape {
  int k = 0, nc = 0, nu = 0, ny = 0;
  int rows() const { return k + nc + nu; }
  int cols() const { return k + nc + ny; }
};

struct ClosedLoopLocal {
  Mat gamma;                    // grouped ordering (see UVW)
  SubsystemRealization node;    // interleaved ordering, no u / y channels
  std::vector<int> channel_perm;  // interleaved position -> grouped position
};

// Maps interleaved channel positions (per neighbor: plant block, then
// controller block) to the grouped positions (all plant, then all controller).
std::vector<int> interleave_permutation(const std::vector<ChannelSlot>& plant,
                                        const std::vector<ChannelSlot>& ctrl);

ClosedLoopLocal close_local(const SubsystemRealization& plant,
                            const std::vector<ChannelSlot>& plant_layout,
                            const std::vector<ChannelSlot>& ctrl_layout, const Mat& theta);

// A controller node viewed as a subsystem: input y plays d, output u plays z.
SubsystemRealization controller_as_subsystem(const Mat& theta, const ThetaShape& shape);

}  // namespace dh2
