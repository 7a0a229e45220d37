#pragma once

#include <limits>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "tflow/defaults.hpp"
#include "tflow/dynamics.hpp"
#include "tflow/network.hpp"

namespace tflow {

/// Network energy: (1/2) sum_src c Q^2 plus (1/2) sum_phys c dx^2 rho^T K rho
/// over every commodity with a downstream movement. Exit arcs carry no term.
class Lyapunov {
 public:
  explicit Lyapunov(const NetworkGraph& g);

  double operator()(const NetworkState& s) const;

 private:
  const NetworkGraph* graph_;
  std::map<Index, Eigen::MatrixXd> kernels_;  // keyed by cell count
};

double lyapunov(const NetworkGraph& g, const NetworkState& s);

/// Mean of dV/dt over the trailing `window` seconds, (V_end - V_start) / elapsed.
/// Throws std::invalid_argument if fewer than two samples fall in the window.
double drift_estimate(const std::vector<double>& times, const std::vector<double>& values,
                      double window);

/// Ordinary least-squares slope of values against times.
double ols_slope(const std::vector<double>& times, const std::vector<double>& values);

enum class Verdict { Stable, Unstable, Inconclusive };

std::string to_string(Verdict v);

struct StabilityThresholds {
  double slope_stable = defaults::slope_stable;      // veh/s
  double slope_unstable = defaults::slope_unstable;  // veh/s
  double mass_bound = std::numeric_limits<double>::infinity();  // veh, time-averaged
};

struct StabilityReport {
  std::vector<double> times;      // of V samples
  std::vector<double> lyapunov;   // V samples
  double mean_total_vehicles = 0;
  double mean_source_queue = 0;
  double max_total_vehicles = 0;
  double queue_slope = 0;         // second half, veh/s
  double drift = 0;               // second half, mean dV/dt
  Verdict verdict = Verdict::Stable;
};

/// Verdict from the second-half queue slope and the time-averaged mass.
Verdict stability_verdict(double queue_slope, double mean_total_vehicles,
                          const StabilityThresholds& thresholds = {});

/// Builds a report from sampled series. Queue/mass samples share `times`;
/// V samples have their own time stamps.
StabilityReport stability_report(const std::vector<double>& times,
                                 const std::vector<double>& source_queue,
                                 const std::vector<double>& total_vehicles,
                                 const std::vector<double>& v_times,
                                 const std::vector<double>& v_values,
                                 const StabilityThresholds& thresholds = {});

nlohmann::json to_json(const StabilityReport& report, bool with_series = true);

}  // namespace tflow
