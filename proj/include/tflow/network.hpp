#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "tflow/fundamental_diagram.hpp"

namespace tflow {

using Index = Eigen::Index;

/// Coefficients of variation of the fundamental-diagram parameters. All zero
/// means a deterministic arc.
struct FdVariability {
  double v_free = 0;
  double wave_speed = 0;
  double jam_density = 0;

  bool deterministic() const { return v_free == 0 && wave_speed == 0 && jam_density == 0; }
  friend bool operator==(const FdVariability&, const FdVariability&) = default;
};

struct Arc {
  std::string id;
  double length = 0;  // m; zero for source arcs
  int lanes = 1;
  FundamentalDiagramd fd;  // per lane
  FdVariability variability;
  bool is_source = false;
  int cell_count = 1;
  std::optional<Index> from_node;  // empty for source arcs
  std::optional<Index> to_node;    // empty for exit arcs
  double source_capacity = 0;      // veh/s, source arcs only

  std::vector<Index> in_movements;
  std::vector<Index> out_movements;  // commodity order on this arc

  double cell_length() const { return is_source ? 0.0 : length / cell_count; }
  FundamentalDiagramd lane_group_fd() const { return fd.scaled(static_cast<double>(lanes)); }
  /// Commodity rows carried by the arc: one per successor, or one "exit" row.
  Index commodity_count() const {
    return out_movements.empty() ? 1 : static_cast<Index>(out_movements.size());
  }
  bool is_exit() const { return !is_source && out_movements.empty(); }
  double capacity() const { return is_source ? source_capacity : lane_group_fd().capacity(); }
  double storage() const { return is_source ? 0.0 : lane_group_fd().jam_density * length; }
};

struct Movement {
  std::string id;
  Index from_arc = -1;
  Index to_arc = -1;
  double weight_constant = 1.0;  // c_ab
  Index node = -1;
  Index commodity = -1;  // row of this movement's commodity on from_arc
};

struct Phase {
  std::string id;
  Index node = -1;
  std::vector<Index> movements;
  std::vector<std::string> schemes;  // empty: member of every scheme

  bool contains(Index movement) const;
  bool in_scheme(const std::string& scheme) const;
};

struct Node {
  std::string id;
  double cadence = 10.0;
  std::vector<Index> in_arcs;
  std::vector<Index> out_arcs;
  std::vector<Index> movements;
  std::vector<Index> phases;
};

/// Piecewise-constant time series: value(t) = values[k] for times[k] <= t < times[k+1].
template <typename Value>
struct PiecewiseConstant {
  std::vector<double> times{0.0};
  std::vector<Value> values;

  const Value& at(double t) const {
    std::size_t k = 0;
    while (k + 1 < times.size() && times[k + 1] <= t) ++k;
    return values[k];
  }
};

enum class ArrivalProcess { Poisson, Deterministic };

/// Exogenous arrivals into one source arc. Commodity rates are rate(t) * splits.
struct ArrivalSpec {
  Index source_arc = -1;
  PiecewiseConstant<double> rate;  // veh/s
  Eigen::ArrayXd splits;           // over the source arc's out_movements
  std::optional<ArrivalProcess> process;  // empty: use the simulation default
};

struct NetworkGraph {
  std::vector<Node> nodes;
  std::vector<Arc> arcs;
  std::vector<Movement> movements;
  std::vector<Phase> phases;
  std::vector<ArrivalSpec> arrivals;
  // Turning fractions at arc entry, per physical arc with successors.
  std::vector<PiecewiseConstant<Eigen::ArrayXd>> splits;

  std::unordered_map<std::string, Index> arc_index;
  std::unordered_map<std::string, Index> node_index;
  std::unordered_map<std::string, Index> movement_index;
  std::unordered_map<std::string, Index> phase_index;

  Index find_arc(const std::string& id) const;
  Index find_node(const std::string& id) const;
  Index find_movement(const std::string& id) const;
  Index find_phase(const std::string& id) const;

  std::vector<Index> source_arcs() const;
  const ArrivalSpec* arrival_for(Index source_arc) const;
  /// Saturation rate of a movement: min of the two arc capacities.
  double saturation_flow(Index movement) const;

  void rebuild_indices();
};

/// Pi(a): arcs with a movement into a. Throws std::out_of_range for unknown arcs.
std::vector<Index> predecessors(const NetworkGraph& g, Index arc);
std::vector<Index> predecessors(const NetworkGraph& g, const std::string& arc);
/// Sigma(a): arcs reachable from a by one movement.
std::vector<Index> successors(const NetworkGraph& g, Index arc);
std::vector<Index> successors(const NetworkGraph& g, const std::string& arc);

struct PhaseViolation {
  std::string phase;
  std::string phase_node;
  std::string movement;
  std::string movement_node;
  std::string message;
};

/// Empty iff every phase lists only movements of its own node. Since every
/// movement is owned by exactly one node, that also makes phase sets at
/// distinct nodes disjoint; shared movements are reported explicitly anyway.
std::vector<PhaseViolation> validate_phase_disjointness(const NetworkGraph& g);

/// Structural equality: ids, geometry, parameters, topology, phases, arrivals, splits.
bool structurally_equal(const NetworkGraph& a, const NetworkGraph& b);

}  // namespace tflow
