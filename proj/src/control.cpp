#include "tflow/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "tflow/errors.hpp"

namespace tflow {

namespace {

long double downstream_pressure(const NetworkGraph& g, const NetworkState& s, Index b, double t,
                                PositionWeighting mode) {
  using Wide = long double;
  const Arc& arc = g.arcs[b];
  if (arc.is_exit()) return 0.0L;
  const ArrayX<Wide> pi = g.splits[b].at(t).cast<Wide>();
  ArrayX<Wide> c(arc.commodity_count());
  for (Index k = 0; k < c.size(); ++k) c[k] = g.movements[arc.out_movements[k]].weight_constant;
  const ArrayX<Wide> position = downstream_position_weights<Wide>(arc.cell_count, mode);
  // sum_c c_bc pi_bc rho_b^c(x), integrated against the position weight
  const ArrayX<Wide> per_cell =
      (s.density[b].cast<Wide>().transpose().matrix() * (c * pi).matrix()).array();
  return (per_cell * position).sum() * Wide(arc.cell_length());
}

double commodity_count_on(const NetworkGraph& g, const NetworkState& s, Index arc, Index k) {
  return commodity_volume(g, s, arc, k);
}

}  // namespace

double pwbp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t,
                   PositionWeighting mode) {
  const Movement& m = g.movements[movement];
  const Arc& a = g.arcs[m.from_arc];
  using Wide = long double;
  Wide upstream;
  if (a.is_source) {
    upstream = s.density[m.from_arc](m.commodity, 0);
  } else {
    const ArrayX<Wide> position = upstream_position_weights<Wide>(a.cell_count, mode);
    upstream = (s.density[m.from_arc].row(m.commodity).transpose().cast<Wide>() * position).sum() *
               Wide(a.cell_length());
  }
  const Wide pressure = Wide(m.weight_constant) * upstream - downstream_pressure(g, s, m.to_arc, t, mode);
  return static_cast<double>(std::abs(pressure));
}

double bp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t) {
  const Movement& m = g.movements[movement];
  const double upstream = commodity_count_on(g, s, m.from_arc, m.commodity);
  double downstream = 0;
  const Arc& b = g.arcs[m.to_arc];
  if (!b.is_exit()) {
    const Eigen::ArrayXd pi = g.splits[m.to_arc].at(t);
    for (Index k = 0; k < pi.size(); ++k) downstream += pi[k] * commodity_count_on(g, s, m.to_arc, k);
  }
  return std::max(0.0, upstream - downstream);
}

double remaining_storage(const NetworkGraph& g, const NetworkState& s, Index arc) {
  const Arc& a = g.arcs[arc];
  if (a.is_source || a.is_exit()) return std::numeric_limits<double>::infinity();
  return a.storage() - s.density[arc].sum() * a.cell_length();
}

double cabp_weight(const NetworkGraph& g, const NetworkState& s, Index movement, double t) {
  if (remaining_storage(g, s, g.movements[movement].to_arc) < 1.0) return 0.0;
  return bp_weight(g, s, movement, t);
}

FdSamples draw_fd_samples(const NetworkGraph& g, Index node, int samples, std::mt19937_64& rng) {
  if (samples < 1) throw std::invalid_argument("Monte Carlo sample count must be >= 1");
  const Node& n = g.nodes[node];
  std::vector<Index> incident = n.in_arcs;
  incident.insert(incident.end(), n.out_arcs.begin(), n.out_arcs.end());
  bool random = false;
  for (Index a : incident) random = random || !g.arcs[a].variability.deterministic();
  if (!random) return {};

  std::vector<FundamentalDiagramd> base;
  base.reserve(g.arcs.size());
  for (const Arc& a : g.arcs) base.push_back(a.lane_group_fd());

  auto lognormal = [&](double mean, double cv) {
    if (cv <= 0) return mean;
    const double s2 = std::log1p(cv * cv);
    std::lognormal_distribution<double> dist(std::log(mean) - 0.5 * s2, std::sqrt(s2));
    return dist(rng);
  };
  FdSamples draws(samples, base);
  for (auto& draw : draws) {
    for (Index a : incident) {
      const Arc& arc = g.arcs[a];
      if (arc.variability.deterministic() || arc.is_source) continue;
      FundamentalDiagramd& fd = draw[a];
      fd.v_free = lognormal(fd.v_free, arc.variability.v_free);
      fd.wave_speed = lognormal(fd.wave_speed, arc.variability.wave_speed);
      fd.jam_density = lognormal(fd.jam_density, arc.variability.jam_density);
    }
  }
  return draws;
}

Eigen::ArrayXd expected_node_fluxes(const NetworkGraph& g, const NetworkState& s, Index node,
                                    Index phase, const FluxContext& ctx, const FdSamples& draws) {
  FluxContext view = ctx;
  view.ramp = false;
  if (draws.empty()) return node_fluxes(g, s, node, phase, nullptr, view);
  Eigen::ArrayXd sum = Eigen::ArrayXd::Zero(static_cast<Index>(g.nodes[node].movements.size()));
  for (const auto& draw : draws) {
    view.fd_override = &draw;
    sum += node_fluxes(g, s, node, phase, nullptr, view);
  }
  return sum / static_cast<double>(draws.size());
}

double expected_movement_flux(const NetworkGraph& g, const NetworkState& s, Index movement,
                              Index phase, const FluxContext& ctx, const FdSamples& draws) {
  const Index node = g.movements[movement].node;
  const auto& ms = g.nodes[node].movements;
  const auto slot = std::find(ms.begin(), ms.end(), movement) - ms.begin();
  return expected_node_fluxes(g, s, node, phase, ctx, draws)[slot];
}

FluxSamples movement_flux_samples(const NetworkGraph& g, const NetworkState& s, Index movement,
                                  Index phase, const FluxContext& ctx, const FdSamples& draws) {
  const Movement& m = g.movements[movement];
  const Node& n = g.nodes[m.node];
  const Phase* p = phase >= 0 ? &g.phases[phase] : nullptr;
  const auto count = static_cast<Index>(std::max<std::size_t>(draws.size(), 1));
  FluxSamples out{Eigen::ArrayXd::Zero(count), Eigen::ArrayXd::Zero(count)};
  if (!p || !p->contains(movement)) return out;
  FluxContext view = ctx;
  view.ramp = false;
  for (Index k = 0; k < count; ++k) {
    view.fd_override = draws.empty() ? nullptr : &draws[k];
    double claimed = 0;
    double own = 0;
    for (Index other : n.movements) {
      if (g.movements[other].to_arc != m.to_arc || !p->contains(other)) continue;
      const double d = commodity_demand(g, s, other, view);
      claimed += d;
      if (other == movement) own = d;
    }
    out.demand[k] = own;
    out.supply[k] = claimed > 0 ? arc_supply(g, s, m.to_arc, view) * (own / claimed)
                                : arc_supply(g, s, m.to_arc, view);
  }
  return out;
}

FluxDecomposition decompose_expected_flux(const FluxSamples& samples) {
  const Eigen::ArrayXd& d = samples.demand;
  const Eigen::ArrayXd& q = samples.supply;
  const auto n = static_cast<double>(d.size());
  const Eigen::Array<bool, Eigen::Dynamic, 1> served = d <= q;
  const double n_served = served.count();
  FluxDecomposition out;
  out.probability = n_served / n;
  out.demand_when_served = n_served > 0 ? served.select(d, 0.0).sum() / n_served : 0.0;
  out.supply_when_blocked = n_served < n ? served.select(0.0, q).sum() / (n - n_served) : 0.0;
  out.value = out.probability * out.demand_when_served + (1 - out.probability) * out.supply_when_blocked;
  const Eigen::ArrayXd mins = d.min(q);
  out.direct = mins.mean();
  if (d.size() > 1) {
    const double var = (mins - out.direct).square().sum() / (n - 1);
    out.standard_error = std::sqrt(var / n);
  }
  return out;
}

ControlDecision select_phase(const NetworkGraph& g, const NetworkState& s, Index node,
                             PolicyKind policy, const std::vector<Index>& candidates,
                             const FluxContext& ctx, const SelectionOptions& options,
                             std::mt19937_64& rng) {
  if (candidates.empty()) {
    throw ValidationError("node '" + g.nodes[node].id + "' has no candidate phases", g.nodes[node].id);
  }
  const Node& n = g.nodes[node];
  ControlDecision out;
  out.node = node;
  out.time = ctx.time;
  out.candidates = candidates;
  out.scores.assign(candidates.size(), 0.0);

  const auto count = static_cast<Index>(n.movements.size());
  Eigen::ArrayXd weight(count);
  for (Index i = 0; i < count; ++i) {
    const Index m = n.movements[i];
    switch (policy) {
      case PolicyKind::PWBP: weight[i] = pwbp_weight(g, s, m, ctx.time, options.weighting); break;
      case PolicyKind::BP: weight[i] = bp_weight(g, s, m, ctx.time); break;
      case PolicyKind::CABP: weight[i] = cabp_weight(g, s, m, ctx.time); break;
      case PolicyKind::FixedTime: weight[i] = 0; break;
    }
  }

  if (policy == PolicyKind::PWBP) {
    const FdSamples draws = draw_fd_samples(g, node, options.mc_samples, rng);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      out.scores[k] = (weight * expected_node_fluxes(g, s, node, candidates[k], ctx, draws)).sum();
    }
  } else {
    Eigen::ArrayXd service(count);
    for (Index i = 0; i < count; ++i) service[i] = g.saturation_flow(n.movements[i]);
    for (std::size_t k = 0; k < candidates.size(); ++k) {
      const Phase& p = g.phases[candidates[k]];
      double score = 0;
      for (Index i = 0; i < count; ++i) {
        if (p.contains(n.movements[i])) score += weight[i] * service[i];
      }
      out.scores[k] = score;
    }
  }

  const double best = *std::max_element(out.scores.begin(), out.scores.end());
  const double floor = best - options.tie_tolerance * std::abs(best);
  std::vector<std::size_t> tied;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    if (out.scores[k] >= floor) tied.push_back(k);
  }
  out.tie = tied.size() > 1;
  std::size_t pick = tied.front();
  if (out.tie) {
    std::uniform_int_distribution<std::size_t> uniform(0, tied.size() - 1);
    pick = tied[uniform(rng)];
  }
  out.phase = candidates[pick];
  return out;
}

Index fixed_time_phase(const FixedTimePlan& plan, double t) {
  double cycle = 0;
  for (double d : plan.durations) cycle += d;
  double local = std::fmod(t - plan.offset, cycle);
  if (local < 0) local += cycle;
  // guard rounding at phase ends
  local += 1e-9;
  for (std::size_t k = 0; k < plan.phases.size(); ++k) {
    if (local < plan.durations[k]) return plan.phases[k];
    local -= plan.durations[k];
  }
  return plan.phases.front();
}

bool cadence_boundary(double t, double dt, double tau) {
  const double eps = 1e-9 * std::max(1.0, tau);
  const double k = std::floor((t + eps) / tau);
  return k >= 0 && k * tau > t - dt + eps;
}

void apply_phase(const NetworkGraph& g, SignalState& sig, Index node, Index phase, double t) {
  const Index old = sig.active_phase[node];
  if (old == phase) return;
  for (Index m : g.phases[phase].movements) {
    if (old < 0 || !g.phases[old].contains(m)) sig.green_since[m] = t;
  }
  sig.active_phase[node] = phase;
  sig.phase_start[node] = t;
}

Controller::Controller(const NetworkGraph& g, const ControllerSettings& settings,
                       PositionWeighting weighting)
    : policy_(settings.policy) {
  options_.tie_tolerance = settings.tie_tolerance;
  options_.mc_samples = settings.mc_samples;
  options_.weighting = weighting;
  const std::optional<std::string> scheme = settings.scheme_for(policy_);
  const auto nodes = static_cast<Index>(g.nodes.size());
  candidates_.resize(nodes);
  plans_.resize(nodes);
  rngs_.reserve(nodes);
  for (Index n = 0; n < nodes; ++n) {
    for (Index p : g.nodes[n].phases) {
      if (!scheme || g.phases[p].in_scheme(*scheme)) candidates_[n].push_back(p);
    }
    if (candidates_[n].empty()) {
      throw ValidationError("node '" + g.nodes[n].id + "' has no phase in scheme '" +
                                scheme.value_or("") + "'",
                            g.nodes[n].id);
    }
    rngs_.emplace_back(substream_seed(settings.seed, g.nodes[n].id, "control"));
    plans_[n].node = n;
    plans_[n].phases = candidates_[n];
    plans_[n].durations.assign(candidates_[n].size(), settings.default_green);
  }
  for (const FixedTimePlan& plan : settings.fixed_time) plans_[plan.node] = plan;
}

SignalState Controller::idle_signal(const NetworkGraph& g) const {
  SignalState sig;
  sig.active_phase.assign(g.nodes.size(), -1);
  sig.phase_start.assign(g.nodes.size(), 0.0);
  sig.green_since.assign(g.movements.size(), 0.0);
  return sig;
}

SignalState Controller::tick(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                             const FluxContext& ctx, std::vector<ControlDecision>* audit) {
  SignalState next = sig;
  const double t = ctx.time;
  for (Index n = 0; n < static_cast<Index>(g.nodes.size()); ++n) {
    if (policy_ == PolicyKind::FixedTime) {
      const Index phase = fixed_time_phase(plans_[n], t);
      if (phase != next.active_phase[n] && audit) {
        ControlDecision d;
        d.node = n;
        d.phase = phase;
        d.time = t;
        audit->push_back(d);
      }
      apply_phase(g, next, n, phase, t);
      continue;
    }
    if (sig.active_phase[n] >= 0 && !cadence_boundary(t, ctx.dt, g.nodes[n].cadence)) continue;
    ControlDecision d = select_phase(g, s, n, policy_, candidates_[n], ctx, options_, rngs_[n]);
    apply_phase(g, next, n, d.phase, t);
    if (audit) audit->push_back(std::move(d));
  }
  return next;
}

}  // namespace tflow
