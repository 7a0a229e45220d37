#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tflow/defaults.hpp"
#include "tflow/network.hpp"

namespace tflow {

/// Parsed configuration tree. The schema is documented in docs/config_schema.md.
class ConfigDocument {
 public:
  ConfigDocument() = default;
  explicit ConfigDocument(nlohmann::json root) : root_(std::move(root)) {}

  static ConfigDocument load(const std::filesystem::path& path);
  static ConfigDocument parse(const std::string& text);

  const nlohmann::json& root() const { return root_; }
  nlohmann::json& root() { return root_; }

 private:
  nlohmann::json root_;
};

struct SimSettings {
  std::optional<double> dt;  // empty: derived from CFL at build
  double horizon = defaults::horizon;
  double cell_length = defaults::cell_length;
  double startup_time = defaults::startup_time;
  double dead_time = defaults::dead_time;
  ArrivalProcess process = ArrivalProcess::Poisson;
  int metrics_stride = defaults::metrics_stride;
  int lyapunov_stride = defaults::lyapunov_stride;
};

enum class PolicyKind { FixedTime, BP, CABP, PWBP };

std::string to_string(PolicyKind kind);
/// Accepts ft|fixed|fixed_time, bp, cabp, pwbp (case-insensitive).
PolicyKind parse_policy(const std::string& name);

struct FixedTimePlan {
  Index node = -1;
  std::vector<Index> phases;
  std::vector<double> durations;  // s, cycle = sum
  double offset = 0;
};

struct ControllerSettings {
  PolicyKind policy = PolicyKind::PWBP;
  std::uint64_t seed = 1;
  // Phase scheme name per policy; a missing entry enumerates every phase.
  std::vector<std::pair<PolicyKind, std::string>> schemes;
  std::vector<FixedTimePlan> fixed_time;  // per node; missing nodes get a default plan
  double default_green = defaults::default_green;
  double tie_tolerance = defaults::tie_tolerance;
  int mc_samples = defaults::mc_samples;

  std::optional<std::string> scheme_for(PolicyKind kind) const;
};

struct IncidentSpec {
  Index arc = -1;
  Index first_cell = 0;
  Index last_cell = 0;  // inclusive
  double start = 0;
  double end = 0;
  int lanes_blocked = 0;
};

/// Initial densities (veh/m) per physical arc commodity, queues (veh) per source commodity.
struct InitialCondition {
  struct Entry {
    Index arc = -1;
    Index commodity = 0;
    Eigen::ArrayXd values;  // one per cell, or a single value broadcast
  };
  std::vector<Entry> entries;
};

struct Scenario {
  NetworkGraph graph;
  SimSettings sim;
  double dt = 1.0;  // resolved time step
  ControllerSettings controller;
  InitialCondition initial;
  std::vector<IncidentSpec> incidents;
  nlohmann::json extra;  // pass-through sections (sweep, ...)
};

/// Builds and validates the network; throws ValidationError naming the offender.
NetworkGraph build_network(const ConfigDocument& config);

/// Full document: network plus sim, controller, initial and incident sections.
Scenario load_scenario(const ConfigDocument& config);

/// Largest CFL-admissible step for the graph, dx / max(v, w) over physical arcs.
double cfl_limit(const NetworkGraph& g);
/// Throws ValidationError naming the first arc whose CFL bound is below dt.
void check_cfl(const NetworkGraph& g, double dt);

/// Emits the network sections of a config that rebuilds to a structurally equal graph.
nlohmann::json emit_config(const NetworkGraph& g);
/// Emits a complete scenario document.
nlohmann::json emit_config(const Scenario& s);

}  // namespace tflow
