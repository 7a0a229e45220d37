#pragma once

#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "tflow/control.hpp"
#include "tflow/network.hpp"
#include "tflow/scenario.hpp"

namespace tflow {

/// Shortest round-trip decimal form; empty for NaN.
std::string format_number(double v);

/// Active phase ids by node, joined with ';'. Nodes without a phase give an empty id.
std::string phase_list(const NetworkGraph& g, const std::vector<Index>& phases);

/// Columns: time,total_vehicles,source_queue_total,throughput,delay_rate,lyapunov_V,active_phases
void write_metrics_csv(std::ostream& out, const NetworkGraph& g, const MetricsSeries& series);

/// Same fields as the CSV, one object per record.
nlohmann::json metrics_json(const NetworkGraph& g, const MetricsSeries& series);

/// Long format: run_id,t,metric,value for every numeric metric of every record.
void write_plot_data(std::ostream& out,
                     const std::vector<std::pair<std::string, const MetricsSeries*>>& runs);

/// Columns: ray,scale,verdict,slope,avg_delay,flagged
void write_sweep_csv(std::ostream& out, const SweepResult& sweep);
nlohmann::json sweep_json(const SweepResult& sweep);

/// Columns: time,node,candidate_scores,chosen_phase,tie
void write_decision_audit(std::ostream& out, const NetworkGraph& g,
                          const std::vector<ControlDecision>& decisions);

}  // namespace tflow
