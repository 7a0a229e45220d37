#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "tflow/config.hpp"
#include "tflow/dynamics.hpp"
#include "tflow/network.hpp"
#include "tflow/quadrature.hpp"

namespace tflow {

/// Position-weighted pressure of a movement. Upstream density is weighted by
/// x/l_a, downstream densities by (l_b - x)/l_b, both at cell centres.
/// `PointQueue` sets every position weight to one.
double pwbp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t,
                   PositionWeighting mode = PositionWeighting::Linear);

/// max(0, Q_a^b - sum_c pi_bc Q_b^c) on per-commodity vehicle counts.
double bp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t);

/// BP weight, zeroed when arc b has less than one vehicle of free storage.
double cabp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t);

/// Free storage of a physical arc in vehicles. Exit arcs never fill.
double remaining_storage(const NetworkGraph& g, const NetworkState& s, Index arc);

/// Parameter draws for the arcs incident to a node: one full per-arc diagram
/// vector per sample. Empty when every incident arc is deterministic.
using FdSamples = std::vector<std::vector<FundamentalDiagramd>>;

FdSamples draw_fd_samples(const NetworkGraph& g, Index node, int samples, std::mt19937_64& rng);

/// Expected fluxes of a node's movements under a hypothetical phase, ordered
/// like Node::movements. Empty `draws` gives the deterministic node model.
Eigen::ArrayXd expected_node_fluxes(const NetworkGraph& g, const NetworkState& s, Index node,
                                    Index phase, const FluxContext& ctx, const FdSamples& draws);

double expected_movement_flux(const NetworkGraph& g, const NetworkState& s, Index movement,
                              Index phase, const FluxContext& ctx, const FdSamples& draws);

/// Per-sample demand and allocated supply of one movement under a phase.
struct FluxSamples {
  Eigen::ArrayXd demand;
  Eigen::ArrayXd supply;
};

FluxSamples movement_flux_samples(const NetworkGraph& g, const NetworkState& s, Index movement,
                                  Index phase, const FluxContext& ctx, const FdSamples& draws);

/// E min(delta, sigma) written as P E[delta | delta <= sigma] + (1 - P) E[sigma | delta > sigma].
struct FluxDecomposition {
  double probability = 1;           // P(delta <= sigma)
  double demand_when_served = 0;    // E[delta | delta <= sigma]
  double supply_when_blocked = 0;   // E[sigma | delta > sigma]
  double value = 0;                 // decomposed expectation
  double direct = 0;                // sample mean of min(delta, sigma)
  double standard_error = 0;        // of the direct mean
};

FluxDecomposition decompose_expected_flux(const FluxSamples& samples);

struct ControlDecision {
  Index node = -1;
  Index phase = -1;
  double time = 0;
  std::vector<Index> candidates;
  std::vector<double> scores;
  bool tie = false;
};

struct SelectionOptions {
  double tie_tolerance = defaults::tie_tolerance;
  int mc_samples = defaults::mc_samples;
  PositionWeighting weighting = PositionWeighting::Linear;
};

/// Scores every candidate phase of a node and picks the maximizer, breaking
/// ties uniformly at random. Fixed time is not handled here.
ControlDecision select_phase(const NetworkGraph& g, const NetworkState& s, Index node,
                             PolicyKind policy, const std::vector<Index>& candidates,
                             const FluxContext& ctx, const SelectionOptions& options,
                             std::mt19937_64& rng);

/// Phase of a cyclic plan at time t.
Index fixed_time_phase(const FixedTimePlan& plan, double t);

/// True if some multiple of tau lies in (t - dt, t].
bool cadence_boundary(double t, double dt, double tau);

/// Applies a phase choice, resetting green onset only for newly served movements.
void apply_phase(const NetworkGraph& g, SignalState& sig, Index node, Index phase, double t);

/// Per-node decentralized controller for one policy.
class Controller {
 public:
  Controller(const NetworkGraph& g, const ControllerSettings& settings,
             PositionWeighting weighting = PositionWeighting::Linear);

  PolicyKind policy() const { return policy_; }
  const std::vector<Index>& candidates(Index node) const { return candidates_[node]; }
  const FixedTimePlan& plan(Index node) const { return plans_[node]; }

  /// Signal with no active phase anywhere; the first tick at t = 0 fills it.
  SignalState idle_signal(const NetworkGraph& g) const;

  /// Re-decides each node whose cadence boundary falls in (t - dt, t]; fixed
  /// time follows its plan every step. Decisions are appended to `audit`.
  SignalState tick(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                   const FluxContext& ctx, std::vector<ControlDecision>* audit = nullptr);

 private:
  PolicyKind policy_;
  SelectionOptions options_;
  std::vector<std::vector<Index>> candidates_;
  std::vector<FixedTimePlan> plans_;
  std::vector<std::mt19937_64> rngs_;
};

}  // namespace tflow
