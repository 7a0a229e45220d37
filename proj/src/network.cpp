#include "tflow/network.hpp"

#include <algorithm>
#include <stdexcept>

namespace tflow {

bool Phase::contains(Index movement) const {
  return std::find(movements.begin(), movements.end(), movement) != movements.end();
}

bool Phase::in_scheme(const std::string& scheme) const {
  return schemes.empty() || std::find(schemes.begin(), schemes.end(), scheme) != schemes.end();
}

namespace {

Index lookup(const std::unordered_map<std::string, Index>& map, const std::string& id,
             const char* kind) {
  auto it = map.find(id);
  if (it == map.end()) throw std::out_of_range(std::string("unknown ") + kind + " '" + id + "'");
  return it->second;
}

void check_arc(const NetworkGraph& g, Index arc) {
  if (arc < 0 || arc >= static_cast<Index>(g.arcs.size())) {
    throw std::out_of_range("unknown arc index " + std::to_string(arc));
  }
}

}  // namespace

Index NetworkGraph::find_arc(const std::string& id) const { return lookup(arc_index, id, "arc"); }
Index NetworkGraph::find_node(const std::string& id) const { return lookup(node_index, id, "node"); }
Index NetworkGraph::find_movement(const std::string& id) const {
  return lookup(movement_index, id, "movement");
}
Index NetworkGraph::find_phase(const std::string& id) const {
  return lookup(phase_index, id, "phase");
}

std::vector<Index> NetworkGraph::source_arcs() const {
  std::vector<Index> out;
  for (Index a = 0; a < static_cast<Index>(arcs.size()); ++a) {
    if (arcs[a].is_source) out.push_back(a);
  }
  return out;
}

const ArrivalSpec* NetworkGraph::arrival_for(Index source_arc) const {
  for (const auto& spec : arrivals) {
    if (spec.source_arc == source_arc) return &spec;
  }
  return nullptr;
}

double NetworkGraph::saturation_flow(Index movement) const {
  const Movement& m = movements[movement];
  return std::min(arcs[m.from_arc].capacity(), arcs[m.to_arc].capacity());
}

void NetworkGraph::rebuild_indices() {
  arc_index.clear();
  node_index.clear();
  movement_index.clear();
  phase_index.clear();
  for (Index i = 0; i < static_cast<Index>(arcs.size()); ++i) arc_index[arcs[i].id] = i;
  for (Index i = 0; i < static_cast<Index>(nodes.size()); ++i) node_index[nodes[i].id] = i;
  for (Index i = 0; i < static_cast<Index>(movements.size()); ++i) {
    movement_index[movements[i].id] = i;
  }
  for (Index i = 0; i < static_cast<Index>(phases.size()); ++i) phase_index[phases[i].id] = i;
}

std::vector<Index> predecessors(const NetworkGraph& g, Index arc) {
  check_arc(g, arc);
  std::vector<Index> out;
  for (Index m : g.arcs[arc].in_movements) out.push_back(g.movements[m].from_arc);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> predecessors(const NetworkGraph& g, const std::string& arc) {
  return predecessors(g, g.find_arc(arc));
}

std::vector<Index> successors(const NetworkGraph& g, Index arc) {
  check_arc(g, arc);
  std::vector<Index> out;
  for (Index m : g.arcs[arc].out_movements) out.push_back(g.movements[m].to_arc);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<Index> successors(const NetworkGraph& g, const std::string& arc) {
  return successors(g, g.find_arc(arc));
}

std::vector<PhaseViolation> validate_phase_disjointness(const NetworkGraph& g) {
  std::vector<PhaseViolation> out;
  auto node_name = [&](Index n) {
    return n >= 0 && n < static_cast<Index>(g.nodes.size()) ? g.nodes[n].id : std::string("?");
  };
  // owner[m] = first phase (by node) that listed movement m
  std::vector<Index> owner_node(g.movements.size(), -1);
  std::vector<Index> owner_phase(g.movements.size(), -1);
  for (Index p = 0; p < static_cast<Index>(g.phases.size()); ++p) {
    const Phase& phase = g.phases[p];
    for (Index m : phase.movements) {
      const Movement& mv = g.movements[m];
      if (mv.node != phase.node) {
        out.push_back({phase.id, node_name(phase.node), mv.id, node_name(mv.node),
                       "phase '" + phase.id + "' at node '" + node_name(phase.node) +
                           "' lists movement '" + mv.id + "' of node '" + node_name(mv.node) +
                           "'"});
        continue;
      }
      if (owner_node[m] >= 0 && owner_node[m] != phase.node) {
        const Phase& other = g.phases[owner_phase[m]];
        out.push_back({phase.id, node_name(phase.node), mv.id, node_name(other.node),
                       "movement '" + mv.id + "' shared by phases '" + other.id + "' and '" +
                           phase.id + "' at different nodes"});
      } else if (owner_node[m] < 0) {
        owner_node[m] = phase.node;
        owner_phase[m] = p;
      }
    }
  }
  return out;
}

bool structurally_equal(const NetworkGraph& a, const NetworkGraph& b) {
  if (a.nodes.size() != b.nodes.size() || a.arcs.size() != b.arcs.size() ||
      a.movements.size() != b.movements.size() || a.phases.size() != b.phases.size() ||
      a.arrivals.size() != b.arrivals.size()) {
    return false;
  }
  for (std::size_t i = 0; i < a.nodes.size(); ++i) {
    const Node& x = a.nodes[i];
    const Node& y = b.nodes[i];
    if (x.id != y.id || x.cadence != y.cadence || x.in_arcs != y.in_arcs ||
        x.out_arcs != y.out_arcs || x.movements != y.movements || x.phases != y.phases) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.arcs.size(); ++i) {
    const Arc& x = a.arcs[i];
    const Arc& y = b.arcs[i];
    if (x.id != y.id || x.length != y.length || x.lanes != y.lanes || !(x.fd == y.fd) ||
        !(x.variability == y.variability) || x.is_source != y.is_source ||
        x.cell_count != y.cell_count || x.from_node != y.from_node || x.to_node != y.to_node ||
        x.source_capacity != y.source_capacity || x.in_movements != y.in_movements ||
        x.out_movements != y.out_movements) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.movements.size(); ++i) {
    const Movement& x = a.movements[i];
    const Movement& y = b.movements[i];
    if (x.id != y.id || x.from_arc != y.from_arc || x.to_arc != y.to_arc ||
        x.weight_constant != y.weight_constant || x.node != y.node || x.commodity != y.commodity) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.phases.size(); ++i) {
    const Phase& x = a.phases[i];
    const Phase& y = b.phases[i];
    if (x.id != y.id || x.node != y.node || x.movements != y.movements || x.schemes != y.schemes) {
      return false;
    }
  }
  for (std::size_t i = 0; i < a.arrivals.size(); ++i) {
    const ArrivalSpec& x = a.arrivals[i];
    const ArrivalSpec& y = b.arrivals[i];
    if (x.source_arc != y.source_arc || x.rate.times != y.rate.times ||
        x.rate.values != y.rate.values || x.process != y.process ||
        x.splits.size() != y.splits.size() || !(x.splits == y.splits).all()) {
      return false;
    }
  }
  if (a.splits.size() != b.splits.size()) return false;
  for (std::size_t i = 0; i < a.splits.size(); ++i) {
    const auto& x = a.splits[i];
    const auto& y = b.splits[i];
    if (x.times != y.times || x.values.size() != y.values.size()) return false;
    for (std::size_t k = 0; k < x.values.size(); ++k) {
      if (x.values[k].size() != y.values[k].size() || !(x.values[k] == y.values[k]).all()) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace tflow
