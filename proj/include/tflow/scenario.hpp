#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tflow/config.hpp"
#include "tflow/control.hpp"
#include "tflow/dynamics.hpp"
#include "tflow/stability.hpp"

namespace tflow {

struct MetricsRecord {
  double time = 0;
  double total_vehicles = 0;
  double source_queue_total = 0;
  double throughput = 0;   // veh/s leaving the network during the last step
  double delay_rate = 0;   // veh s of delay per s
  double lyapunov_V = 0;   // NaN when not evaluated at this sample
  std::vector<Index> phases;  // active phase per node
};

struct MetricsSeries {
  std::vector<MetricsRecord> records;
};

struct InvariantCounters {
  double max_mass_error = 0;  // |dmass - (in - out)| / max(1, mass), worst step
  long negative_densities = 0;
  long cap_violations = 0;
  long flux_violations = 0;
};

struct RunOptions {
  std::optional<PolicyKind> policy;
  std::optional<std::uint64_t> seed;
  std::optional<double> horizon;
  std::optional<ArrivalProcess> process;
  PositionWeighting weighting = PositionWeighting::Linear;
  StabilityThresholds thresholds;
  bool record_decisions = false;
  bool check_invariants = true;
};

struct RunResult {
  MetricsSeries metrics;
  StabilityReport report;
  double arrivals = 0;
  double exits = 0;
  double total_delay = 0;    // veh s
  double average_delay = 0;  // s per exiting vehicle
  InvariantCounters invariants;
  std::vector<ControlDecision> decisions;
  NetworkState final_state;
};

/// Initial densities and queues from the scenario, zero elsewhere.
NetworkState initial_state(const Scenario& sc);

/// Effective jam-density factors at time t. Cells inside an active incident
/// use (1 - blocked/lanes); all others keep exactly 1.
EffectiveParams incident_apply(const NetworkGraph& g, const std::vector<IncidentSpec>& incidents,
                               double t);

/// Instantaneous delay: sum over cells of rho dx (1 - v/v_free) plus queued source vehicles.
double delay_rate(const NetworkGraph& g, const NetworkState& s, const EffectiveParams* params = nullptr);

/// Multiplies every arrival rate profile by `scale`, arrival i additionally by weights[i].
Scenario scale_demand(const Scenario& sc, double scale, const std::vector<double>& weights = {});

/// Runs one simulation. Deterministic for a fixed scenario and seed.
RunResult run_scenario(const Scenario& sc, const RunOptions& options = {});

/// Runs jobs [0, count) on up to `threads` workers. Each job writes only its own
/// slot, so results do not depend on the thread count.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job);

/// Worker count from TFLOW_THREADS, else hardware concurrency.
int default_threads();

struct SweepRay {
  std::string name;
  std::vector<double> weights;  // per arrival, multiplies the configured rate
};

struct SweepSpec {
  std::vector<SweepRay> rays;
  PolicyKind policy = PolicyKind::PWBP;
  double lo = 0;          // scale known or assumed stable
  double hi = 2;          // upper end of the search bracket
  double tolerance = 0.02;
  double horizon = 7200;
  std::vector<std::uint64_t> seeds{1, 2, 3};
  int retry_budget = defaults::retry_budget;
  double delay_knee = defaults::delay_knee;  // s per vehicle
  std::optional<ArrivalProcess> process;
  StabilityThresholds thresholds;
};

/// Reads a sweep spec; ray weights are keyed by source id, missing sources get 0.
SweepSpec parse_sweep_spec(const nlohmann::json& j, const NetworkGraph& g);

struct PointVerdict {
  Verdict verdict = Verdict::Inconclusive;
  std::vector<Verdict> replicates;
  double slope = 0;          // median over replicates
  double average_delay = 0;  // mean over replicates
  double horizon = 0;        // of the deciding attempt
  bool flagged = false;      // still inconclusive after retries
};

/// Majority verdict over the spec's seeds, retrying inconclusive points with a doubled horizon.
PointVerdict evaluate_point(const Scenario& sc, const SweepSpec& spec, const std::vector<double>& weights,
                            double scale, int threads);

struct SweepPoint {
  std::string ray;
  double scale = 0;
  PointVerdict result;
};

struct FrontierEstimate {
  std::string ray;
  double scale = 0;       // largest scale found stable
  double unstable = 0;    // smallest scale found not stable
  bool bracketed = true;  // false if hi itself was stable
  bool flagged = false;   // a flagged point influenced the search
  std::optional<double> delay_knee;  // smallest tested scale with average delay above the knee
};

struct SweepResult {
  std::vector<SweepPoint> points;
  std::vector<FrontierEstimate> frontier;
};

/// Bisects each ray between lo and hi. Not-stable points (unstable or
/// flagged) bound the frontier from above, so every scale above a not-stable
/// tested scale is treated as not stable.
SweepResult capacity_sweep(const Scenario& sc, const SweepSpec& spec, int threads = 1);

struct RecoverySpec {
  std::vector<PolicyKind> policies{PolicyKind::PWBP};
  double base_scale = 1;
  double peak_scale = 1;
  double peak_start = 0;   // s; also the disturbance start when an incident is given
  double peak_end = 0;     // s; clearance time
  double horizon = 0;
  std::optional<IncidentSpec> incident;
  double band = defaults::recovery_band;
  double smoothing = defaults::recovery_smoothing;  // s, forward averaging window
  std::uint64_t seed = 1;
  std::optional<ArrivalProcess> process;
};

struct RecoveryOutcome {
  PolicyKind policy = PolicyKind::PWBP;
  double pre_delay = 0;       // mean delay rate before the disturbance
  double recovery_time = 0;   // s after clearance, infinity if never
  double average_delay = 0;
  MetricsSeries metrics;
};

/// First time t >= clear at which the delay rate averaged over [t, t + window]
/// is within band * pre_delay, minus clear; infinity if none before the end.
double recovery_time(const std::vector<double>& times, const std::vector<double>& delay,
                     double pre_delay, double clear, double band, double window);

/// Mean delay rate over [start - window, start).
double pre_disturbance_delay(const std::vector<double>& times, const std::vector<double>& delay,
                             double start, double window);

std::vector<RecoveryOutcome> recovery_experiment(const Scenario& sc, const RecoverySpec& spec,
                                                 int threads = 1);

}  // namespace tflow
