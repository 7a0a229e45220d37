#include "tflow/dynamics.hpp"

#include <algorithm>
#include <cmath>

#include "tflow/errors.hpp"

namespace tflow {

NetworkState make_state(const NetworkGraph& g) {
  NetworkState s;
  s.density.reserve(g.arcs.size());
  for (const Arc& a : g.arcs) s.density.push_back(Eigen::ArrayXXd::Zero(a.commodity_count(), a.cell_count));
  return s;
}

double total_vehicles(const NetworkGraph& g, const NetworkState& s) {
  double total = 0;
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const double sum = s.density[a].sum();
    total += g.arcs[a].is_source ? sum : sum * g.arcs[a].cell_length();
  }
  return total;
}

double source_queue_total(const NetworkGraph& g, const NetworkState& s) {
  double total = 0;
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    if (g.arcs[a].is_source) total += s.density[a].sum();
  }
  return total;
}

double commodity_volume(const NetworkGraph& g, const NetworkState& s, Index arc, Index commodity) {
  const double sum = s.density[arc].row(commodity).sum();
  return g.arcs[arc].is_source ? sum : sum * g.arcs[arc].cell_length();
}

FundamentalDiagramd cell_fd(const NetworkGraph& g, const EffectiveParams* params, Index arc,
                            Index cell) {
  const FundamentalDiagramd fd = g.arcs[arc].lane_group_fd();
  if (!params || params->nominal(arc)) return fd;
  return fd.scaled(params->jam_factor[arc][cell]);
}

FundamentalDiagramd local_fd(const NetworkGraph& g, const FluxContext& ctx, Index arc,
                             Index cell) {
  const FundamentalDiagramd fd =
      ctx.fd_override ? (*ctx.fd_override)[arc] : g.arcs[arc].lane_group_fd();
  if (!ctx.params || ctx.params->nominal(arc)) return fd;
  return fd.scaled(ctx.params->jam_factor[arc][cell]);
}

bool SignalState::is_green(const NetworkGraph& g, Index movement) const {
  const Index node = g.movements[movement].node;
  const Index p = active_phase[node];
  return p >= 0 && g.phases[p].contains(movement);
}

double movement_ramp(const SignalState& sig, Index movement, const FluxContext& ctx) {
  if (!ctx.ramp) return 1.0;
  const double since = ctx.time + 0.5 * ctx.dt - sig.green_since[movement];
  if (since < ctx.dead_time) return 0.0;
  return startup_ramp(since - ctx.dead_time, ctx.startup_time);
}

double commodity_demand(const NetworkGraph& g, const NetworkState& s, Index movement,
                        const FluxContext& ctx) {
  const Movement& m = g.movements[movement];
  const Arc& a = g.arcs[m.from_arc];
  const Eigen::ArrayXXd& rho = s.density[m.from_arc];
  if (a.is_source) {
    Eigen::ArrayXd available;
    if (ctx.source_available) {
      available = (*ctx.source_available)[m.from_arc];
    } else {
      available = rho.col(0);
      if (const ArrivalSpec* spec = g.arrival_for(m.from_arc)) {
        available += spec->rate.at(ctx.time) * spec->splits * ctx.dt;
      }
    }
    const double total = available.sum();
    if (total <= 0) return 0.0;
    return std::min(total / ctx.dt, a.source_capacity) * (available[m.commodity] / total);
  }
  const Index last = a.cell_count - 1;
  const double total = rho.col(last).sum();
  if (total <= 0) return 0.0;
  return demand(local_fd(g, ctx, m.from_arc, last), total) * (rho(m.commodity, last) / total);
}

double arc_supply(const NetworkGraph& g, const NetworkState& s, Index arc, const FluxContext& ctx) {
  return supply(local_fd(g, ctx, arc, 0), s.density[arc].col(0).sum());
}

Eigen::ArrayXd node_fluxes(const NetworkGraph& g, const NetworkState& s, Index node, Index phase,
                           const SignalState* sig, const FluxContext& ctx) {
  const Node& n = g.nodes[node];
  const auto count = static_cast<Index>(n.movements.size());
  Eigen::ArrayXd demand_rate = Eigen::ArrayXd::Zero(count);
  if (phase < 0) return demand_rate;
  const Phase& p = g.phases[phase];
  for (Index i = 0; i < count; ++i) {
    const Index m = n.movements[i];
    if (!p.contains(m)) continue;
    double d = commodity_demand(g, s, m, ctx);
    if (sig && ctx.ramp) d *= movement_ramp(*sig, m, ctx);
    demand_rate[i] = d;
  }
  Eigen::ArrayXd flux = Eigen::ArrayXd::Zero(count);
  for (Index b : n.out_arcs) {
    double claimed = 0;
    for (Index i = 0; i < count; ++i) {
      if (g.movements[n.movements[i]].to_arc == b) claimed += demand_rate[i];
    }
    if (claimed <= 0) continue;
    const double available = arc_supply(g, s, b, ctx);
    for (Index i = 0; i < count; ++i) {
      if (g.movements[n.movements[i]].to_arc != b) continue;
      const double allocated = available * (demand_rate[i] / claimed);
      flux[i] = std::min(demand_rate[i], allocated);
    }
  }
  return flux;
}

double movement_flux(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                     Index movement, const FluxContext& ctx) {
  const Index node = g.movements[movement].node;
  const Node& n = g.nodes[node];
  const Eigen::ArrayXd flux = node_fluxes(g, s, node, sig.active_phase[node], &sig, ctx);
  const auto it = std::find(n.movements.begin(), n.movements.end(), movement);
  return flux[it - n.movements.begin()];
}

Eigen::ArrayXXd cell_update(const Arc& arc, const Eigen::ArrayXXd& density,
                            const Eigen::ArrayXd& inflow, const Eigen::ArrayXd& outflow, double dt,
                            const Eigen::ArrayXd* jam_factor) {
  const Index cells = density.cols();
  const double dx = arc.cell_length();
  const FundamentalDiagramd base = arc.lane_group_fd();
  if (dt * base.max_speed() > dx * (1 + 1e-12)) {
    throw ValidationError("CFL violated on arc '" + arc.id + "'", arc.id);
  }
  auto fd_at = [&](Index k) {
    return jam_factor && jam_factor->size() ? base.scaled((*jam_factor)[k]) : base;
  };
  const double lambda = dt / dx;
  const Eigen::Array<double, 1, Eigen::Dynamic> total = density.colwise().sum();

  Eigen::ArrayXXd next = density;
  if (cells > 1) {
    Eigen::Array<double, 1, Eigen::Dynamic> flux(cells - 1);
    for (Index k = 0; k + 1 < cells; ++k) {
      flux[k] = std::min(demand(fd_at(k), total[k]), supply(fd_at(k + 1), total[k + 1]));
    }
    const Eigen::ArrayXXd denom = total.head(cells - 1).replicate(density.rows(), 1);
    const Eigen::ArrayXXd share = (denom > 0).select(density.leftCols(cells - 1) / denom, 0.0);
    const Eigen::ArrayXXd commodity_flux = share.rowwise() * flux;
    next.leftCols(cells - 1) -= lambda * commodity_flux;
    next.rightCols(cells - 1) += lambda * commodity_flux;
  }
  next.col(0) += lambda * inflow;
  next.col(cells - 1) -= lambda * outflow;

  const double tolerance = 1e-12 * base.jam_density;
  if ((next < -tolerance).any()) {
    throw InvariantError("negative density on arc '" + arc.id + "'");
  }
  return next.max(0.0);
}

Eigen::ArrayXd source_queue_update(const Eigen::ArrayXd& queue, const Eigen::ArrayXd& arrivals,
                                   const Eigen::ArrayXd& outflux, double dt) {
  Eigen::ArrayXd next = queue + arrivals - outflux * dt;
  const double tolerance = 1e-12 * std::max(1.0, (queue + arrivals).maxCoeff());
  if ((next < -tolerance).any()) throw InvariantError("negative source queue");
  return next.max(0.0);
}

std::uint64_t substream_seed(std::uint64_t seed, const std::string& entity, const std::string& tag) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    h ^= 0xff;
    h *= 1099511628211ULL;
  };
  mix(entity);
  mix(tag);
  // splitmix64 finalizer over seed ^ hash
  std::uint64_t z = seed ^ (h + 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

ArrivalSampler::ArrivalSampler(const NetworkGraph& g, std::uint64_t seed,
                               ArrivalProcess default_process) {
  engines_.reserve(g.arcs.size());
  process_.assign(g.arcs.size(), default_process);
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    engines_.emplace_back(substream_seed(seed, g.arcs[a].id, "arrivals"));
    if (const ArrivalSpec* spec = g.arrival_for(a); spec && spec->process) process_[a] = *spec->process;
  }
}

std::vector<Eigen::ArrayXd> ArrivalSampler::draw(const NetworkGraph& g, double t, double dt) {
  std::vector<Eigen::ArrayXd> out(g.arcs.size());
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    if (!g.arcs[a].is_source) continue;
    out[a] = Eigen::ArrayXd::Zero(g.arcs[a].commodity_count());
    const ArrivalSpec* spec = g.arrival_for(a);
    if (!spec) continue;
    const Eigen::ArrayXd mean = spec->rate.at(t) * spec->splits * dt;
    for (Index k = 0; k < mean.size(); ++k) {
      if (process_[a] == ArrivalProcess::Deterministic) {
        out[a][k] = mean[k];
      } else if (mean[k] > 0) {
        std::poisson_distribution<long long> poisson(mean[k]);
        out[a][k] = static_cast<double>(poisson(engines_[a]));
      }
    }
  }
  return out;
}

StepOutput step(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                const FluxContext& ctx_in, const std::vector<Eigen::ArrayXd>& arrivals) {
  const auto arc_count = static_cast<Index>(g.arcs.size());
  StepOutput out;
  out.state.time = s.time + ctx_in.dt;
  out.state.density.resize(g.arcs.size());
  out.movement_flux = Eigen::ArrayXd::Zero(static_cast<Index>(g.movements.size()));

  std::vector<Eigen::ArrayXd> available(g.arcs.size());
  for (Index a = 0; a < arc_count; ++a) {
    if (!g.arcs[a].is_source) continue;
    available[a] = s.density[a].col(0);
    if (arrivals[a].size()) {
      available[a] += arrivals[a];
      out.arrivals += arrivals[a].sum();
    }
  }
  FluxContext ctx = ctx_in;
  ctx.time = s.time;
  ctx.source_available = &available;

  for (Index n = 0; n < static_cast<Index>(g.nodes.size()); ++n) {
    const Eigen::ArrayXd flux = node_fluxes(g, s, n, sig.active_phase[n], &sig, ctx);
    const Node& node = g.nodes[n];
    for (Index i = 0; i < flux.size(); ++i) out.movement_flux[node.movements[i]] = flux[i];
  }

  // sources cannot release more than they hold
  for (Index a = 0; a < arc_count; ++a) {
    const Arc& arc = g.arcs[a];
    if (!arc.is_source) continue;
    for (Index m : arc.out_movements) {
      const double cap = available[a][g.movements[m].commodity] / ctx.dt;
      out.movement_flux[m] = std::min(out.movement_flux[m], cap);
    }
  }

  for (Index a = 0; a < arc_count; ++a) {
    const Arc& arc = g.arcs[a];
    const Index commodities = arc.commodity_count();
    Eigen::ArrayXd outflow = Eigen::ArrayXd::Zero(commodities);
    if (arc.is_exit()) {
      const Index last = arc.cell_count - 1;
      outflow[0] = demand(cell_fd(g, ctx.params, a, last), s.density[a](0, last));
      out.exits += outflow[0] * ctx.dt;
    } else {
      for (Index m : arc.out_movements) outflow[g.movements[m].commodity] = out.movement_flux[m];
    }
    if (arc.is_source) {
      Eigen::ArrayXd arrived = arrivals[a].size() ? arrivals[a] : Eigen::ArrayXd::Zero(commodities);
      out.state.density[a] = source_queue_update(s.density[a].col(0), arrived, outflow, ctx.dt);
      continue;
    }
    double entering = 0;
    for (Index m : arc.in_movements) entering += out.movement_flux[m];
    const Eigen::ArrayXd& pi = g.splits[a].at(s.time);
    const Eigen::ArrayXd inflow = entering * (pi / pi.sum());
    const Eigen::ArrayXd* factor = ctx.params && !ctx.params->nominal(a) ? &ctx.params->jam_factor[a] : nullptr;
    out.state.density[a] = cell_update(arc, s.density[a], inflow, outflow, ctx.dt, factor);
  }
  return out;
}

}  // namespace tflow
