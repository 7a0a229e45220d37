#include "tflow/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <limits>
#include <queue>
#include <set>
#include <sstream>

#include "tflow/errors.hpp"

namespace tflow {

using nlohmann::json;

ConfigDocument ConfigDocument::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

ConfigDocument ConfigDocument::parse(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ValidationError("config root must be an object");
  return ConfigDocument(std::move(root));
}

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::FixedTime: return "ft";
    case PolicyKind::BP: return "bp";
    case PolicyKind::CABP: return "cabp";
    case PolicyKind::PWBP: return "pwbp";
  }
  return "?";
}

PolicyKind parse_policy(const std::string& name) {
  std::string s = name;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ft" || s == "fixed" || s == "fixed_time" || s == "fixedtime") return PolicyKind::FixedTime;
  if (s == "bp") return PolicyKind::BP;
  if (s == "cabp") return PolicyKind::CABP;
  if (s == "pwbp") return PolicyKind::PWBP;
  throw ValidationError("unknown policy '" + name + "'", name);
}

std::optional<std::string> ControllerSettings::scheme_for(PolicyKind kind) const {
  for (const auto& [k, name] : schemes) {
    if (k == kind) return name;
  }
  return std::nullopt;
}

namespace {

// ---- json helpers -------------------------------------------------------

const json& section(const json& root, const char* key) {
  static const json empty_array = json::array();
  auto it = root.find(key);
  if (it == root.end() || it->is_null()) return empty_array;
  return *it;
}

std::string get_id(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_string() || it->get<std::string>().empty()) {
    throw ValidationError(where + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

double get_number(const json& obj, const char* key, double fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number()) throw ValidationError(where + ": field '" + key + "' must be a number");
  return it->get<double>();
}

double require_number(const json& obj, const char* key, const std::string& where,
                      const std::string& subject = {}) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number()) {
    throw ValidationError(where + ": missing numeric field '" + key + "'", subject);
  }
  return it->get<double>();
}

int get_int(const json& obj, const char* key, int fallback, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return fallback;
  if (!it->is_number_integer()) throw ValidationError(where + ": field '" + key + "' must be an integer");
  return it->get<int>();
}

PiecewiseConstant<double> parse_rate(const json& value, const std::string& where) {
  PiecewiseConstant<double> out;
  if (value.is_number()) {
    out.values = {value.get<double>()};
  } else if (value.is_array() && !value.empty()) {
    out.times.clear();
    for (const auto& pair : value) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number() || !pair[1].is_number()) {
        throw ValidationError(where + ": rate profile entries must be [t, rate]");
      }
      out.times.push_back(pair[0].get<double>());
      out.values.push_back(pair[1].get<double>());
    }
  } else {
    throw ValidationError(where + ": rate must be a number or a list of [t, rate]");
  }
  if (out.times.front() != 0.0) throw ValidationError(where + ": rate profile must start at t = 0");
  for (std::size_t k = 1; k < out.times.size(); ++k) {
    if (!(out.times[k] > out.times[k - 1])) {
      throw ValidationError(where + ": rate profile times must increase");
    }
  }
  for (double r : out.values) {
    if (!(r >= 0) || !std::isfinite(r)) throw ValidationError(where + ": rates must be >= 0");
  }
  return out;
}

json emit_rate(const PiecewiseConstant<double>& p) {
  if (p.values.size() == 1) return p.values.front();
  json out = json::array();
  for (std::size_t k = 0; k < p.values.size(); ++k) out.push_back({p.times[k], p.values[k]});
  return out;
}

ArrivalProcess parse_process(const std::string& s, const std::string& where) {
  if (s == "poisson") return ArrivalProcess::Poisson;
  if (s == "deterministic") return ArrivalProcess::Deterministic;
  throw ValidationError(where + ": arrival process must be 'poisson' or 'deterministic'");
}

const char* process_name(ArrivalProcess p) {
  return p == ArrivalProcess::Poisson ? "poisson" : "deterministic";
}

// Fractions keyed by successor arc id, ordered like the arc's out_movements.
Eigen::ArrayXd parse_fractions(const NetworkGraph& g, const Arc& arc, const json& map,
                               const std::string& where) {
  const auto n = static_cast<Index>(arc.out_movements.size());
  Eigen::ArrayXd out = Eigen::ArrayXd::Zero(n);
  if (!map.is_object()) throw ValidationError(where + ": splits must be an object", arc.id);
  for (auto it = map.begin(); it != map.end(); ++it) {
    Index slot = -1;
    for (Index k = 0; k < n; ++k) {
      if (g.arcs[g.movements[arc.out_movements[k]].to_arc].id == it.key()) slot = k;
    }
    if (slot < 0) {
      throw ValidationError(where + ": split key '" + it.key() + "' is not a successor of '" +
                                arc.id + "'",
                            arc.id);
    }
    if (!it->is_number() || !(it->get<double>() >= 0)) {
      throw ValidationError(where + ": split fractions must be numbers >= 0", arc.id);
    }
    out[slot] = it->get<double>();
  }
  if (std::abs(out.sum() - 1.0) > 1e-9) {
    throw ValidationError(where + ": splits of '" + arc.id + "' must sum to 1", arc.id);
  }
  return out;
}

json emit_fractions(const NetworkGraph& g, const Arc& arc, const Eigen::ArrayXd& f) {
  json out = json::object();
  for (Index k = 0; k < f.size(); ++k) {
    out[g.arcs[g.movements[arc.out_movements[k]].to_arc].id] = f[k];
  }
  return out;
}

FundamentalDiagramd parse_fd(const json& obj, const FundamentalDiagramd& base,
                             const std::string& where, const std::string& subject) {
  FundamentalDiagramd fd = base;
  if (obj.is_object()) {
    fd.v_free = get_number(obj, "v_free", fd.v_free, where);
    fd.wave_speed = get_number(obj, "wave_speed", fd.wave_speed, where);
    fd.jam_density = get_number(obj, "jam_density", fd.jam_density, where);
  }
  if (!fd.valid()) throw ValidationError(where + ": fundamental diagram parameters must be > 0", subject);
  return fd;
}

FdVariability parse_cv(const json& obj, const std::string& where, const std::string& subject) {
  FdVariability cv;
  if (obj.is_object()) {
    cv.v_free = get_number(obj, "v_free", 0, where);
    cv.wave_speed = get_number(obj, "wave_speed", 0, where);
    cv.jam_density = get_number(obj, "jam_density", 0, where);
  }
  if (cv.v_free < 0 || cv.wave_speed < 0 || cv.jam_density < 0) {
    throw ValidationError(where + ": coefficients of variation must be >= 0", subject);
  }
  return cv;
}

int cells_for(double length, double target) {
  return std::max(1, static_cast<int>(std::lround(length / target)));
}

struct RawArrival {
  std::string source;
  std::optional<std::string> node;  // boundary inflow
  std::optional<std::string> host;  // interior inflow
  double position = 0;
  json body;
};

}  // namespace

double cfl_limit(const NetworkGraph& g) {
  double limit = std::numeric_limits<double>::infinity();
  for (const Arc& a : g.arcs) {
    if (a.is_source) continue;
    limit = std::min(limit, a.cell_length() / a.fd.max_speed());
  }
  return limit;
}

void check_cfl(const NetworkGraph& g, double dt) {
  if (!(dt > 0)) throw ValidationError("time step must be positive");
  for (const Arc& a : g.arcs) {
    if (a.is_source) continue;
    const double bound = a.cell_length() / a.fd.max_speed();
    if (dt > bound * (1 + 1e-12)) {
      std::ostringstream msg;
      msg << "CFL violated on arc '" << a.id << "': dt " << dt << " s > dx/max(v,w) " << bound
          << " s";
      throw ValidationError(msg.str(), a.id);
    }
  }
}

NetworkGraph build_network(const ConfigDocument& config) {
  const json& root = config.root();
  if (!root.contains("schema_version") || !root["schema_version"].is_number_integer()) {
    throw ValidationError("config needs an integer 'schema_version'");
  }
  if (root["schema_version"].get<int>() != defaults::schema_version) {
    throw ValidationError("unsupported schema_version " + root["schema_version"].dump());
  }
  const json& sim = root.contains("sim") ? root["sim"] : json::object();
  const double cell_target = get_number(sim, "cell_length", defaults::cell_length, "sim");
  if (!(cell_target > 0)) throw ValidationError("sim.cell_length must be positive");

  FundamentalDiagramd base_fd{defaults::v_free, defaults::wave_speed, defaults::jam_density};
  int base_lanes = defaults::lanes;
  if (root.contains("defaults")) {
    const json& d = root["defaults"];
    if (d.contains("fd")) base_fd = parse_fd(d["fd"], base_fd, "defaults.fd", {});
    base_lanes = get_int(d, "lanes", base_lanes, "defaults");
  }

  NetworkGraph g;

  // nodes
  for (const json& jn : section(root, "nodes")) {
    Node n;
    n.id = get_id(jn, "id", "nodes[]");
    n.cadence = get_number(jn, "cadence", defaults::cadence, "node '" + n.id + "'");
    if (!(n.cadence > 0)) throw ValidationError("node '" + n.id + "': cadence must be > 0", n.id);
    if (g.node_index.count(n.id)) throw ValidationError("duplicate node id '" + n.id + "'", n.id);
    g.node_index[n.id] = static_cast<Index>(g.nodes.size());
    g.nodes.push_back(std::move(n));
  }

  // arrivals first pass: interior inflows split their host arc
  std::vector<RawArrival> raw_arrivals;
  std::set<std::string> split_hosts;
  for (const json& ja : section(root, "arrivals")) {
    RawArrival r;
    r.source = get_id(ja, "source", "arrivals[]");
    r.body = ja;
    const bool has_node = ja.contains("node");
    const bool has_arc = ja.contains("arc");
    if (has_node == has_arc) {
      throw ValidationError("arrival '" + r.source + "' needs exactly one of 'node' or 'arc'", r.source);
    }
    if (has_node) {
      r.node = get_id(ja, "node", "arrival '" + r.source + "'");
    } else {
      r.host = get_id(ja, "arc", "arrival '" + r.source + "'");
      r.position = require_number(ja, "position", "arrival '" + r.source + "'", r.source);
      if (!split_hosts.insert(*r.host).second) {
        throw ValidationError("arc '" + *r.host + "' hosts more than one interior inflow", *r.host);
      }
    }
    raw_arrivals.push_back(std::move(r));
  }

  // Movement endpoint renames caused by splits: host -> (upstream half, downstream half).
  std::unordered_map<std::string, std::pair<std::string, std::string>> renamed;

  // physical arcs
  std::set<std::string> seen_arc_ids;
  for (const json& ja : section(root, "arcs")) {
    const std::string id = get_id(ja, "id", "arcs[]");
    const std::string where = "arc '" + id + "'";
    if (!seen_arc_ids.insert(id).second) throw ValidationError("duplicate arc id '" + id + "'", id);
    Arc a;
    a.id = id;
    a.length = require_number(ja, "length", where, id);
    if (!(a.length > 0)) throw ValidationError(where + ": length must be > 0", id);
    a.lanes = get_int(ja, "lanes", base_lanes, where);
    if (a.lanes < 1) throw ValidationError(where + ": lanes must be >= 1", id);
    a.fd = parse_fd(ja.contains("fd") ? ja["fd"] : json(), base_fd, where, id);
    if (ja.contains("fd") && ja["fd"].contains("cv")) a.variability = parse_cv(ja["fd"]["cv"], where, id);
    const std::string from = get_id(ja, "from", where);
    auto fit = g.node_index.find(from);
    if (fit == g.node_index.end()) throw ValidationError(where + ": unknown node '" + from + "'", id);
    a.from_node = fit->second;
    if (ja.contains("to") && !ja["to"].is_null()) {
      const std::string to = get_id(ja, "to", where);
      auto tit = g.node_index.find(to);
      if (tit == g.node_index.end()) throw ValidationError(where + ": unknown node '" + to + "'", id);
      a.to_node = tit->second;
    }
    const bool explicit_cells = ja.contains("cells");
    if (explicit_cells) {
      a.cell_count = get_int(ja, "cells", 1, where);
      if (a.cell_count < 1) throw ValidationError(where + ": cells must be >= 1", id);
    } else {
      a.cell_count = cells_for(a.length, cell_target);
    }

    if (split_hosts.count(id)) {
      const RawArrival& r = *std::find_if(raw_arrivals.begin(), raw_arrivals.end(),
                                          [&](const RawArrival& x) { return x.host == id; });
      if (!(r.position > 0 && r.position < a.length)) {
        throw ValidationError("arrival '" + r.source + "': position must lie strictly inside arc '" +
                                  id + "'",
                              id);
      }
      Node merge;
      merge.id = id + ".merge";
      merge.cadence = defaults::cadence;
      if (g.node_index.count(merge.id)) throw ValidationError("duplicate node id '" + merge.id + "'", merge.id);
      const Index merge_index = static_cast<Index>(g.nodes.size());
      g.node_index[merge.id] = merge_index;
      g.nodes.push_back(merge);

      Arc up = a;
      up.id = id + ".1";
      up.length = r.position;
      up.to_node = merge_index;
      up.cell_count = cells_for(up.length, cell_target);
      Arc down = a;
      down.id = id + ".2";
      down.length = a.length - r.position;
      down.from_node = merge_index;
      down.cell_count = cells_for(down.length, cell_target);
      for (const Arc* part : {&up, &down}) {
        if (!seen_arc_ids.insert(part->id).second) {
          throw ValidationError("duplicate arc id '" + part->id + "'", part->id);
        }
      }
      renamed[id] = {up.id, down.id};
      g.arcs.push_back(std::move(up));
      g.arcs.push_back(std::move(down));
    } else {
      g.arcs.push_back(std::move(a));
    }
  }
  const Index physical_count = static_cast<Index>(g.arcs.size());

  // source arcs
  for (const RawArrival& r : raw_arrivals) {
    if (!seen_arc_ids.insert(r.source).second) {
      throw ValidationError("duplicate arc id '" + r.source + "'", r.source);
    }
    Arc s;
    s.id = r.source;
    s.is_source = true;
    s.length = 0;
    s.cell_count = 1;
    if (r.node) {
      auto it = g.node_index.find(*r.node);
      if (it == g.node_index.end()) {
        throw ValidationError("arrival '" + r.source + "': unknown node '" + *r.node + "'", r.source);
      }
      s.to_node = it->second;
    } else {
      if (!renamed.count(*r.host)) {
        throw ValidationError("arrival '" + r.source + "': unknown arc '" + *r.host + "'", r.source);
      }
      s.to_node = g.node_index.at(*r.host + ".merge");
    }
    s.lanes = get_int(r.body, "lanes", 0, "arrival '" + r.source + "'");
    s.source_capacity = get_number(r.body, "capacity", 0, "arrival '" + r.source + "'");
    g.arcs.push_back(std::move(s));
  }
  for (Index i = 0; i < static_cast<Index>(g.arcs.size()); ++i) g.arc_index[g.arcs[i].id] = i;

  // movements
  auto add_movement = [&](Movement m, const std::string& from, const std::string& to) {
    const std::string where = "movement '" + m.id + "'";
    if (g.movement_index.count(m.id)) throw ValidationError("duplicate movement id '" + m.id + "'", m.id);
    auto resolve = [&](const std::string& arc_id, bool upstream) -> Index {
      std::string key = arc_id;
      if (auto it = renamed.find(arc_id); it != renamed.end()) {
        key = upstream ? it->second.second : it->second.first;
      }
      auto it = g.arc_index.find(key);
      if (it == g.arc_index.end()) throw ValidationError(where + ": unknown arc '" + arc_id + "'", m.id);
      return it->second;
    };
    m.from_arc = resolve(from, true);
    m.to_arc = resolve(to, false);
    const Arc& fa = g.arcs[m.from_arc];
    const Arc& ta = g.arcs[m.to_arc];
    if (ta.is_source) throw ValidationError(where + ": cannot enter source arc '" + ta.id + "'", m.id);
    if (!fa.to_node) throw ValidationError(where + ": arc '" + fa.id + "' has no downstream node", m.id);
    if (!ta.from_node || *ta.from_node != *fa.to_node) {
      throw ValidationError(where + ": arcs '" + fa.id + "' and '" + ta.id + "' meet at different nodes",
                            m.id);
    }
    if (!(m.weight_constant > 0) || !std::isfinite(m.weight_constant)) {
      throw ValidationError(where + ": constant c must be finite and > 0", m.id);
    }
    for (Index other : fa.out_movements) {
      if (g.movements[other].to_arc == m.to_arc) {
        throw ValidationError(where + ": duplicates movement '" + g.movements[other].id + "'", m.id);
      }
    }
    m.node = *fa.to_node;
    const auto index = static_cast<Index>(g.movements.size());
    m.commodity = static_cast<Index>(g.arcs[m.from_arc].out_movements.size());
    g.arcs[m.from_arc].out_movements.push_back(index);
    g.arcs[m.to_arc].in_movements.push_back(index);
    g.nodes[m.node].movements.push_back(index);
    g.movement_index[m.id] = index;
    g.movements.push_back(std::move(m));
  };

  for (const json& jm : section(root, "movements")) {
    Movement m;
    m.id = get_id(jm, "id", "movements[]");
    m.weight_constant = get_number(jm, "c", defaults::movement_constant, "movement '" + m.id + "'");
    add_movement(std::move(m), get_id(jm, "from", "movement"), get_id(jm, "to", "movement"));
  }
  // merge-node movements for interior inflows
  std::vector<std::pair<std::string, std::vector<std::string>>> auto_phases;
  for (const RawArrival& r : raw_arrivals) {
    if (!r.host) continue;
    const auto& [up, down] = renamed.at(*r.host);
    Movement through;
    through.id = up + ">" + down;
    add_movement(std::move(through), up, down);
    Movement inflow;
    inflow.id = r.source + ">" + down;
    add_movement(std::move(inflow), r.source, down);
    auto_phases.push_back({*r.host + ".merge", {up + ">" + down, r.source + ">" + down}});
  }

  // phases
  auto add_phase = [&](Phase p) {
    if (g.phase_index.count(p.id)) throw ValidationError("duplicate phase id '" + p.id + "'", p.id);
    const auto index = static_cast<Index>(g.phases.size());
    g.nodes[p.node].phases.push_back(index);
    g.phase_index[p.id] = index;
    g.phases.push_back(std::move(p));
  };
  for (const json& jp : section(root, "phases")) {
    Phase p;
    p.id = get_id(jp, "id", "phases[]");
    const std::string where = "phase '" + p.id + "'";
    const std::string node = get_id(jp, "node", where);
    auto nit = g.node_index.find(node);
    if (nit == g.node_index.end()) throw ValidationError(where + ": unknown node '" + node + "'", p.id);
    p.node = nit->second;
    if (!jp.contains("movements") || !jp["movements"].is_array()) {
      throw ValidationError(where + ": needs a 'movements' list", p.id);
    }
    for (const json& jm : jp["movements"]) {
      if (!jm.is_string()) throw ValidationError(where + ": movement ids must be strings", p.id);
      auto mit = g.movement_index.find(jm.get<std::string>());
      if (mit == g.movement_index.end()) {
        throw ValidationError(where + ": unknown movement '" + jm.get<std::string>() + "'", p.id);
      }
      if (std::find(p.movements.begin(), p.movements.end(), mit->second) == p.movements.end()) {
        p.movements.push_back(mit->second);
      }
    }
    if (jp.contains("schemes")) {
      for (const json& s : jp["schemes"]) p.schemes.push_back(s.get<std::string>());
    }
    add_phase(std::move(p));
  }
  for (auto& [node, ids] : auto_phases) {
    Phase p;
    p.id = node + ".all";
    p.node = g.node_index.at(node);
    for (const auto& id : ids) p.movements.push_back(g.movement_index.at(id));
    add_phase(std::move(p));
  }
  if (auto violations = validate_phase_disjointness(g); !violations.empty()) {
    throw ValidationError(violations.front().message, violations.front().phase);
  }

  // node adjacency and structural checks
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.from_node) g.nodes[*arc.from_node].out_arcs.push_back(a);
    if (arc.to_node) g.nodes[*arc.to_node].in_arcs.push_back(a);
  }
  for (const Node& n : g.nodes) {
    if (n.movements.empty()) throw ValidationError("node '" + n.id + "' has no movements", n.id);
    if (n.phases.empty()) throw ValidationError("node '" + n.id + "' has no phases", n.id);
  }
  for (Index a = 0; a < physical_count; ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.in_movements.empty()) {
      throw ValidationError("arc '" + arc.id + "' has no predecessor and is unreachable from any source",
                            arc.id);
    }
    if (arc.to_node) {
      // an arc ending at a node must be able to leave it
      if (arc.out_movements.empty()) {
        throw ValidationError("arc '" + arc.id + "' ends at node '" + g.nodes[*arc.to_node].id +
                                  "' but has no movement out of it",
                              arc.id);
      }
    }
  }

  // source arcs: one successor node (by construction), at least one movement
  for (Index a = physical_count; a < static_cast<Index>(g.arcs.size()); ++a) {
    Arc& s = g.arcs[a];
    if (s.out_movements.empty()) throw ValidationError("source arc '" + s.id + "' has no movement", s.id);
    if (s.lanes == 0) {
      for (Index m : s.out_movements) s.lanes = std::max(s.lanes, g.arcs[g.movements[m].to_arc].lanes);
    }
    if (s.lanes < 1) throw ValidationError("source arc '" + s.id + "': lanes must be >= 1", s.id);
    if (s.source_capacity == 0) s.source_capacity = defaults::source_saturation_flow * s.lanes;
    if (!(s.source_capacity > 0)) throw ValidationError("source arc '" + s.id + "': capacity must be > 0", s.id);
    s.fd = FundamentalDiagramd{defaults::v_free, defaults::wave_speed, defaults::jam_density};
  }

  // turning splits
  g.splits.resize(g.arcs.size());
  {
    const auto& jarcs = section(root, "arcs");
    std::vector<const json*> by_arc(g.arcs.size(), nullptr);
    for (const json& ja : jarcs) {
      const std::string id = ja["id"].get<std::string>();
      auto it = renamed.find(id);
      by_arc[g.arc_index.at(it == renamed.end() ? id : it->second.second)] = &ja;
    }
    for (Index a = 0; a < physical_count; ++a) {
      const Arc& arc = g.arcs[a];
      auto& profile = g.splits[a];
      const auto n = static_cast<Index>(arc.out_movements.size());
      if (n == 0) {
        profile.values = {Eigen::ArrayXd::Ones(1)};
        continue;
      }
      const json* ja = by_arc[a];
      const std::string where = "arc '" + arc.id + "'";
      if (ja && ja->contains("split_profile")) {
        profile.times.clear();
        for (const json& entry : (*ja)["split_profile"]) {
          profile.times.push_back(require_number(entry, "t", where, arc.id));
          profile.values.push_back(parse_fractions(g, arc, entry.at("splits"), where));
        }
        if (profile.times.empty() || profile.times.front() != 0.0) {
          throw ValidationError(where + ": split_profile must start at t = 0", arc.id);
        }
        for (std::size_t i = 1; i < profile.times.size(); ++i) {
          if (!(profile.times[i] > profile.times[i - 1])) {
            throw ValidationError(where + ": split_profile times must increase", arc.id);
          }
        }
      } else if (ja && ja->contains("splits")) {
        profile.values = {parse_fractions(g, arc, (*ja)["splits"], where)};
      } else {
        profile.values = {Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n))};
      }
    }
    for (Index a = physical_count; a < static_cast<Index>(g.arcs.size()); ++a) {
      g.splits[a].values = {Eigen::ArrayXd::Ones(1)};
    }
  }

  // arrival specs
  for (const RawArrival& r : raw_arrivals) {
    ArrivalSpec spec;
    spec.source_arc = g.arc_index.at(r.source);
    const Arc& s = g.arcs[spec.source_arc];
    const std::string where = "arrival '" + r.source + "'";
    spec.rate = parse_rate(r.body.contains("rate") ? r.body["rate"] : json(0.0), where);
    const auto n = static_cast<Index>(s.out_movements.size());
    spec.splits = r.body.contains("splits") ? parse_fractions(g, s, r.body["splits"], where)
                                            : Eigen::ArrayXd::Constant(n, 1.0 / static_cast<double>(n));
    if (r.body.contains("process")) spec.process = parse_process(r.body["process"].get<std::string>(), where);
    g.arrivals.push_back(std::move(spec));
  }

  if (sim.contains("dt")) check_cfl(g, require_number(sim, "dt", "sim"));
  return g;
}

Scenario load_scenario(const ConfigDocument& config) {
  Scenario s;
  s.graph = build_network(config);
  const json& root = config.root();
  const NetworkGraph& g = s.graph;

  if (root.contains("sim")) {
    const json& sim = root["sim"];
    if (sim.contains("dt")) s.sim.dt = sim["dt"].get<double>();
    s.sim.horizon = get_number(sim, "horizon", s.sim.horizon, "sim");
    s.sim.cell_length = get_number(sim, "cell_length", s.sim.cell_length, "sim");
    s.sim.startup_time = get_number(sim, "startup_time", s.sim.startup_time, "sim");
    s.sim.dead_time = get_number(sim, "dead_time", s.sim.dead_time, "sim");
    if (sim.contains("arrival_process")) {
      s.sim.process = parse_process(sim["arrival_process"].get<std::string>(), "sim");
    }
    s.sim.metrics_stride = get_int(sim, "metrics_stride", s.sim.metrics_stride, "sim");
    s.sim.lyapunov_stride = get_int(sim, "lyapunov_stride", s.sim.lyapunov_stride, "sim");
  }
  if (!(s.sim.horizon > 0)) throw ValidationError("sim.horizon must be > 0");
  if (s.sim.startup_time < 0 || s.sim.dead_time < 0) {
    throw ValidationError("sim.startup_time and sim.dead_time must be >= 0");
  }
  if (s.sim.metrics_stride < 1 || s.sim.lyapunov_stride < 1) {
    throw ValidationError("sim strides must be >= 1");
  }
  s.dt = s.sim.dt ? *s.sim.dt : defaults::cfl_safety * cfl_limit(g);

  if (root.contains("controller")) {
    const json& c = root["controller"];
    if (c.contains("policy")) s.controller.policy = parse_policy(c["policy"].get<std::string>());
    if (c.contains("seed")) s.controller.seed = c["seed"].get<std::uint64_t>();
    if (c.contains("schemes")) {
      for (auto it = c["schemes"].begin(); it != c["schemes"].end(); ++it) {
        s.controller.schemes.emplace_back(parse_policy(it.key()), it->get<std::string>());
      }
    }
    s.controller.default_green = get_number(c, "default_green", s.controller.default_green, "controller");
    s.controller.tie_tolerance = get_number(c, "tie_tolerance", s.controller.tie_tolerance, "controller");
    s.controller.mc_samples = get_int(c, "mc_samples", s.controller.mc_samples, "controller");
    if (s.controller.mc_samples < 1) throw ValidationError("controller.mc_samples must be >= 1");
    if (!(s.controller.default_green > 0)) throw ValidationError("controller.default_green must be > 0");
    for (const json& jp : section(c, "fixed_time")) {
      FixedTimePlan plan;
      const std::string node = get_id(jp, "node", "fixed_time[]");
      auto nit = g.node_index.find(node);
      if (nit == g.node_index.end()) throw ValidationError("fixed_time: unknown node '" + node + "'", node);
      plan.node = nit->second;
      for (const json& jph : jp.at("phases")) {
        const Index p = g.find_phase(jph.get<std::string>());
        if (g.phases[p].node != plan.node) {
          throw ValidationError("fixed_time: phase '" + g.phases[p].id + "' is not at node '" + node + "'",
                                node);
        }
        plan.phases.push_back(p);
      }
      for (const json& d : jp.at("durations")) plan.durations.push_back(d.get<double>());
      if (plan.phases.empty() || plan.phases.size() != plan.durations.size()) {
        throw ValidationError("fixed_time plan for '" + node + "' needs one duration per phase", node);
      }
      for (double d : plan.durations) {
        if (!(d > 0)) throw ValidationError("fixed_time durations must be > 0", node);
      }
      plan.offset = get_number(jp, "offset", 0, "fixed_time");
      s.controller.fixed_time.push_back(std::move(plan));
    }
  }

  if (root.contains("initial")) {
    for (const json& je : root["initial"]) {
      InitialCondition::Entry e;
      const std::string arc = get_id(je, "arc", "initial[]");
      auto ait = g.arc_index.find(arc);
      if (ait == g.arc_index.end()) throw ValidationError("initial: unknown arc '" + arc + "'", arc);
      e.arc = ait->second;
      const Arc& a = g.arcs[e.arc];
      e.commodity = 0;
      if (je.contains("commodity")) {
        const std::string to = je["commodity"].get<std::string>();
        e.commodity = -1;
        for (Index k = 0; k < static_cast<Index>(a.out_movements.size()); ++k) {
          if (g.arcs[g.movements[a.out_movements[k]].to_arc].id == to) e.commodity = k;
        }
        if (e.commodity < 0) {
          throw ValidationError("initial: '" + to + "' is not a successor of '" + arc + "'", arc);
        }
      } else if (a.out_movements.size() > 1) {
        throw ValidationError("initial: arc '" + arc + "' carries several commodities; name one", arc);
      }
      const char* key = a.is_source ? "queue" : "density";
      if (!je.contains(key)) throw ValidationError(std::string("initial: entry for '") + arc + "' needs '" + key + "'", arc);
      const json& v = je[key];
      if (v.is_number()) {
        e.values = Eigen::ArrayXd::Constant(a.cell_count, v.get<double>());
      } else {
        const auto values = v.get<std::vector<double>>();
        if (static_cast<int>(values.size()) != a.cell_count) {
          throw ValidationError("initial: arc '" + arc + "' needs " + std::to_string(a.cell_count) +
                                    " cell values",
                                arc);
        }
        e.values = Eigen::Map<const Eigen::ArrayXd>(values.data(), static_cast<Index>(values.size()));
      }
      if ((e.values < 0).any()) throw ValidationError("initial: negative value on '" + arc + "'", arc);
      s.initial.entries.push_back(std::move(e));
    }
  }

  for (const json& ji : section(root, "incidents")) {
    IncidentSpec inc;
    const std::string arc = get_id(ji, "arc", "incidents[]");
    auto ait = g.arc_index.find(arc);
    if (ait == g.arc_index.end()) throw ValidationError("incident: unknown arc '" + arc + "'", arc);
    inc.arc = ait->second;
    const Arc& a = g.arcs[inc.arc];
    if (a.is_source) throw ValidationError("incident: '" + arc + "' is a source arc", arc);
    inc.first_cell = get_int(ji, "first_cell", 0, "incident");
    inc.last_cell = get_int(ji, "last_cell", a.cell_count - 1, "incident");
    inc.start = require_number(ji, "start", "incident", arc);
    inc.end = require_number(ji, "end", "incident", arc);
    inc.lanes_blocked = get_int(ji, "lanes_blocked", 1, "incident");
    if (inc.first_cell < 0 || inc.last_cell >= a.cell_count || inc.first_cell > inc.last_cell) {
      throw ValidationError("incident on '" + arc + "': cell range out of bounds", arc);
    }
    if (!(inc.start >= 0 && inc.end > inc.start && inc.end <= s.sim.horizon)) {
      throw ValidationError("incident on '" + arc + "': window must lie within the horizon", arc);
    }
    if (inc.lanes_blocked < 0 || inc.lanes_blocked > a.lanes) {
      throw ValidationError("incident on '" + arc + "': lanes_blocked must be in [0, lanes]", arc);
    }
    for (const IncidentSpec& other : s.incidents) {
      const bool cells = other.arc == inc.arc && other.first_cell <= inc.last_cell &&
                         inc.first_cell <= other.last_cell;
      const bool times = other.start < inc.end && inc.start < other.end;
      if (cells && times) throw ValidationError("incidents overlap on arc '" + arc + "'", arc);
    }
    s.incidents.push_back(inc);
  }

  for (const char* key : {"sweep", "recovery"}) {
    if (root.contains(key)) s.extra[key] = root[key];
  }
  return s;
}

json emit_config(const NetworkGraph& g) {
  json out;
  out["schema_version"] = defaults::schema_version;
  json nodes = json::array();
  for (const Node& n : g.nodes) nodes.push_back({{"id", n.id}, {"cadence", n.cadence}});
  out["nodes"] = nodes;

  json arcs = json::array();
  json arrivals = json::array();
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.is_source) {
      const ArrivalSpec* spec = g.arrival_for(a);
      json ja = {{"source", arc.id},
                 {"node", g.nodes[*arc.to_node].id},
                 {"lanes", arc.lanes},
                 {"capacity", arc.source_capacity}};
      if (spec) {
        ja["rate"] = emit_rate(spec->rate);
        ja["splits"] = emit_fractions(g, arc, spec->splits);
        if (spec->process) ja["process"] = process_name(*spec->process);
      }
      arrivals.push_back(ja);
      continue;
    }
    json ja = {{"id", arc.id},
               {"from", g.nodes[*arc.from_node].id},
               {"length", arc.length},
               {"lanes", arc.lanes},
               {"cells", arc.cell_count},
               {"fd", {{"v_free", arc.fd.v_free},
                       {"wave_speed", arc.fd.wave_speed},
                       {"jam_density", arc.fd.jam_density}}}};
    if (arc.to_node) ja["to"] = g.nodes[*arc.to_node].id;
    if (!arc.variability.deterministic()) {
      ja["fd"]["cv"] = {{"v_free", arc.variability.v_free},
                        {"wave_speed", arc.variability.wave_speed},
                        {"jam_density", arc.variability.jam_density}};
    }
    if (!arc.out_movements.empty()) {
      const auto& profile = g.splits[a];
      if (profile.values.size() == 1) {
        ja["splits"] = emit_fractions(g, arc, profile.values.front());
      } else {
        json jp = json::array();
        for (std::size_t k = 0; k < profile.values.size(); ++k) {
          jp.push_back({{"t", profile.times[k]}, {"splits", emit_fractions(g, arc, profile.values[k])}});
        }
        ja["split_profile"] = jp;
      }
    }
    arcs.push_back(ja);
  }
  out["arcs"] = arcs;
  out["arrivals"] = arrivals;

  json movements = json::array();
  for (const Movement& m : g.movements) {
    movements.push_back({{"id", m.id},
                         {"from", g.arcs[m.from_arc].id},
                         {"to", g.arcs[m.to_arc].id},
                         {"c", m.weight_constant}});
  }
  out["movements"] = movements;

  json phases = json::array();
  for (const Phase& p : g.phases) {
    json ids = json::array();
    for (Index m : p.movements) ids.push_back(g.movements[m].id);
    json jp = {{"id", p.id}, {"node", g.nodes[p.node].id}, {"movements", ids}};
    if (!p.schemes.empty()) jp["schemes"] = p.schemes;
    phases.push_back(jp);
  }
  out["phases"] = phases;
  return out;
}

json emit_config(const Scenario& s) {
  const NetworkGraph& g = s.graph;
  json out = emit_config(g);
  json sim = {{"horizon", s.sim.horizon},
              {"cell_length", s.sim.cell_length},
              {"startup_time", s.sim.startup_time},
              {"dead_time", s.sim.dead_time},
              {"arrival_process", process_name(s.sim.process)},
              {"metrics_stride", s.sim.metrics_stride},
              {"lyapunov_stride", s.sim.lyapunov_stride}};
  if (s.sim.dt) sim["dt"] = *s.sim.dt;
  out["sim"] = sim;
  json c = {{"policy", to_string(s.controller.policy)},
            {"seed", s.controller.seed},
            {"default_green", s.controller.default_green},
            {"tie_tolerance", s.controller.tie_tolerance},
            {"mc_samples", s.controller.mc_samples}};
  json schemes = json::object();
  for (const auto& [k, name] : s.controller.schemes) schemes[to_string(k)] = name;
  c["schemes"] = schemes;
  json plans = json::array();
  for (const FixedTimePlan& p : s.controller.fixed_time) {
    json ids = json::array();
    for (Index ph : p.phases) ids.push_back(g.phases[ph].id);
    plans.push_back({{"node", g.nodes[p.node].id}, {"phases", ids}, {"durations", p.durations},
                     {"offset", p.offset}});
  }
  c["fixed_time"] = plans;
  out["controller"] = c;
  json incidents = json::array();
  for (const IncidentSpec& inc : s.incidents) {
    incidents.push_back({{"arc", g.arcs[inc.arc].id},
                         {"first_cell", inc.first_cell},
                         {"last_cell", inc.last_cell},
                         {"start", inc.start},
                         {"end", inc.end},
                         {"lanes_blocked", inc.lanes_blocked}});
  }
  out["incidents"] = incidents;
  for (auto it = s.extra.begin(); it != s.extra.end(); ++it) out[it.key()] = it.value();
  return out;
}

}  // namespace tflow
