#include "tflow/metrics_io.hpp"

#include <charconv>
#include <cmath>

namespace tflow {

std::string format_number(double v) {
  if (std::isnan(v)) return {};
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string phase_list(const NetworkGraph& g, const std::vector<Index>& phases) {
  std::string out;
  for (std::size_t n = 0; n < phases.size(); ++n) {
    if (n) out += ';';
    if (phases[n] >= 0) out += g.phases[phases[n]].id;
  }
  return out;
}

void write_metrics_csv(std::ostream& out, const NetworkGraph& g, const MetricsSeries& series) {
  out << "time,total_vehicles,source_queue_total,throughput,delay_rate,lyapunov_V,active_phases\n";
  for (const MetricsRecord& r : series.records) {
    out << format_number(r.time) << ',' << format_number(r.total_vehicles) << ','
        << format_number(r.source_queue_total) << ',' << format_number(r.throughput) << ','
        << format_number(r.delay_rate) << ',' << format_number(r.lyapunov_V) << ','
        << phase_list(g, r.phases) << '\n';
  }
}

nlohmann::json metrics_json(const NetworkGraph& g, const MetricsSeries& series) {
  nlohmann::json rows = nlohmann::json::array();
  for (const MetricsRecord& r : series.records) {
    nlohmann::json phases = nlohmann::json::array();
    for (Index p : r.phases) phases.push_back(p >= 0 ? nlohmann::json(g.phases[p].id) : nlohmann::json());
    rows.push_back({{"time", r.time},
                    {"total_vehicles", r.total_vehicles},
                    {"source_queue_total", r.source_queue_total},
                    {"throughput", r.throughput},
                    {"delay_rate", r.delay_rate},
                    {"lyapunov_V", std::isnan(r.lyapunov_V) ? nlohmann::json() : nlohmann::json(r.lyapunov_V)},
                    {"active_phases", phases}});
  }
  return rows;
}

void write_plot_data(std::ostream& out,
                     const std::vector<std::pair<std::string, const MetricsSeries*>>& runs) {
  out << "run_id,t,metric,value\n";
  for (const auto& [id, series] : runs) {
    for (const MetricsRecord& r : series->records) {
      const std::string t = format_number(r.time);
      const std::pair<const char*, double> fields[] = {{"total_vehicles", r.total_vehicles},
                                                       {"source_queue_total", r.source_queue_total},
                                                       {"throughput", r.throughput},
                                                       {"delay_rate", r.delay_rate},
                                                       {"lyapunov_V", r.lyapunov_V}};
      for (const auto& [name, value] : fields) {
        out << id << ',' << t << ',' << name << ',' << format_number(value) << '\n';
      }
    }
  }
}

void write_sweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "ray,scale,verdict,slope,avg_delay,flagged\n";
  for (const SweepPoint& p : sweep.points) {
    out << p.ray << ',' << format_number(p.scale) << ',' << to_string(p.result.verdict) << ','
        << format_number(p.result.slope) << ',' << format_number(p.result.average_delay) << ','
        << (p.result.flagged ? 1 : 0) << '\n';
  }
}

nlohmann::json sweep_json(const SweepResult& sweep) {
  nlohmann::json frontier = nlohmann::json::array();
  for (const FrontierEstimate& f : sweep.frontier) {
    nlohmann::json j = {{"ray", f.ray},
                        {"scale", f.scale},
                        {"bracketed", f.bracketed},
                        {"flagged", f.flagged}};
    j["unstable"] = std::isfinite(f.unstable) ? nlohmann::json(f.unstable) : nlohmann::json();
    j["delay_knee"] = f.delay_knee ? nlohmann::json(*f.delay_knee) : nlohmann::json();
    frontier.push_back(j);
  }
  nlohmann::json points = nlohmann::json::array();
  for (const SweepPoint& p : sweep.points) {
    nlohmann::json reps = nlohmann::json::array();
    for (Verdict v : p.result.replicates) reps.push_back(to_string(v));
    points.push_back({{"ray", p.ray},
                      {"scale", p.scale},
                      {"verdict", to_string(p.result.verdict)},
                      {"replicates", reps},
                      {"slope", p.result.slope},
                      {"avg_delay", std::isfinite(p.result.average_delay) ? nlohmann::json(p.result.average_delay)
                                                                          : nlohmann::json()},
                      {"horizon", p.result.horizon},
                      {"flagged", p.result.flagged}});
  }
  return {{"frontier", frontier}, {"points", points}};
}

void write_decision_audit(std::ostream& out, const NetworkGraph& g,
                          const std::vector<ControlDecision>& decisions) {
  out << "time,node,candidate_scores,chosen_phase,tie\n";
  for (const ControlDecision& d : decisions) {
    std::string scores;
    for (std::size_t k = 0; k < d.scores.size(); ++k) {
      if (k) scores += ';';
      scores += g.phases[d.candidates[k]].id + '=' + format_number(d.scores[k]);
    }
    out << format_number(d.time) << ',' << g.nodes[d.node].id << ',' << scores << ','
        << g.phases[d.phase].id << ',' << (d.tie ? 1 : 0) << '\n';
  }
}

}  // namespace tflow
