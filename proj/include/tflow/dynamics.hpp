#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tflow/network.hpp"

namespace tflow {

/// Per-commodity network state. For a physical arc, density[a] is a
/// commodities x cells array in veh/m; for a source arc it is commodities x 1
/// and holds queued vehicles (veh).
struct NetworkState {
  double time = 0;
  std::vector<Eigen::ArrayXXd> density;
};

/// All-zero state shaped for the graph.
NetworkState make_state(const NetworkGraph& g);

/// Vehicles on physical arcs plus queued vehicles at sources.
double total_vehicles(const NetworkGraph& g, const NetworkState& s);
double source_queue_total(const NetworkGraph& g, const NetworkState& s);
/// Vehicles of one commodity on an arc (cells integrated, or the queue).
double commodity_volume(const NetworkGraph& g, const NetworkState& s, Index arc, Index commodity);

/// Multiplicative jam-density factor per cell (1 = nominal). Empty vectors mean nominal.
struct EffectiveParams {
  std::vector<Eigen::ArrayXd> jam_factor;

  bool nominal(Index arc) const {
    return jam_factor.empty() || jam_factor[arc].size() == 0;
  }
  double factor(Index arc, Index cell) const { return nominal(arc) ? 1.0 : jam_factor[arc][cell]; }
};

/// Lane-group diagram of one cell after incident scaling.
FundamentalDiagramd cell_fd(const NetworkGraph& g, const EffectiveParams* params, Index arc,
                            Index cell);

/// Active phase per node plus timing used for startup ramps.
struct SignalState {
  std::vector<Index> active_phase;  // index into g.phases, -1 = none
  std::vector<double> phase_start;  // per node
  std::vector<double> green_since;  // per movement; meaningful while green

  bool is_green(const NetworkGraph& g, Index movement) const;
};

/// Inputs shared by every flux evaluation within one step.
struct FluxContext {
  double dt = 1.0;
  double time = 0;             // start of the step
  double startup_time = 2.0;   // linear ramp length
  double dead_time = 0.0;      // zero flow this long after green onset
  bool ramp = true;            // false: controller view, phases compared as fully started
  const EffectiveParams* params = nullptr;
  // Vehicles available at each source commodity during the step (queue + arrivals);
  // empty: use queue + expected arrivals rate * dt.
  const std::vector<Eigen::ArrayXd>* source_available = nullptr;
  // Per-arc lane-group diagrams replacing the configured ones (parameter draws).
  const std::vector<FundamentalDiagramd>* fd_override = nullptr;
};

/// Diagram seen by flux evaluations at one cell: override or configured, then incident scaling.
FundamentalDiagramd local_fd(const NetworkGraph& g, const FluxContext& ctx, Index arc, Index cell);

/// Startup multiplier of a green movement evaluated at the step midpoint.
double movement_ramp(const SignalState& sig, Index movement, const FluxContext& ctx);

/// Commodity demand delta_ab at the exit of movement's upstream arc (veh/s), ramp excluded.
double commodity_demand(const NetworkGraph& g, const NetworkState& s, Index movement,
                        const FluxContext& ctx);
/// Supply sigma_b at the entry of arc b (veh/s).
double arc_supply(const NetworkGraph& g, const NetworkState& s, Index arc, const FluxContext& ctx);

/// Node model for one node under a (possibly hypothetical) phase. Returns one
/// flux per movement of the node, ordered like Node::movements. In-phase
/// movements feeding the same arc share its supply in proportion to their
/// demands; every flux is min(demand, allocated supply).
Eigen::ArrayXd node_fluxes(const NetworkGraph& g, const NetworkState& s, Index node, Index phase,
                           const SignalState* sig, const FluxContext& ctx);

/// Flux of one movement under the current signal (veh/s).
double movement_flux(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                     Index movement, const FluxContext& ctx);

/// Godunov / cell-transmission update of one physical arc. Inter-cell flux is
/// min(demand(i), supply(i+1)) split over commodities by their share of cell i.
/// Boundary rates are per commodity in veh/s. Throws ValidationError on a CFL
/// violation and InvariantError if a density turns negative.
Eigen::ArrayXXd cell_update(const Arc& arc, const Eigen::ArrayXXd& density,
                            const Eigen::ArrayXd& inflow, const Eigen::ArrayXd& outflow, double dt,
                            const Eigen::ArrayXd* jam_factor = nullptr);

/// Point-queue mass balance queue + arrivals - outflux * dt. Throws
/// InvariantError on a negative result.
Eigen::ArrayXd source_queue_update(const Eigen::ArrayXd& queue, const Eigen::ArrayXd& arrivals,
                                   const Eigen::ArrayXd& outflux, double dt);

/// Per-source-arc random streams for exogenous arrivals.
class ArrivalSampler {
 public:
  ArrivalSampler(const NetworkGraph& g, std::uint64_t seed, ArrivalProcess default_process);

  /// Vehicles arriving during [t, t + dt), per source arc, per commodity.
  /// Arcs that are not sources get empty arrays.
  std::vector<Eigen::ArrayXd> draw(const NetworkGraph& g, double t, double dt);

 private:
  std::vector<std::mt19937_64> engines_;
  std::vector<ArrivalProcess> process_;
};

/// Derives an independent 64-bit seed for a named entity of a run.
std::uint64_t substream_seed(std::uint64_t seed, const std::string& entity, const std::string& tag);

struct StepOutput {
  NetworkState state;
  Eigen::ArrayXd movement_flux;  // veh/s per movement
  double arrivals = 0;           // vehicles entering sources during the step
  double exits = 0;              // vehicles leaving exit arcs during the step
};

/// One synchronous network update: arrivals, movement fluxes under the
/// current signal, arc interiors and boundaries, source queues.
StepOutput step(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                const FluxContext& ctx, const std::vector<Eigen::ArrayXd>& arrivals);

}  // namespace tflow
