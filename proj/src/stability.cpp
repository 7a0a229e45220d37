#include "tflow/stability.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "tflow/quadrature.hpp"

namespace tflow {

Lyapunov::Lyapunov(const NetworkGraph& g) : graph_(&g) {
  for (const Arc& a : g.arcs) {
    if (a.is_source || a.is_exit()) continue;
    if (!kernels_.count(a.cell_count)) kernels_.emplace(a.cell_count, lyapunov_kernel<double>(a.cell_count));
  }
}

double Lyapunov::operator()(const NetworkState& s) const {
  const NetworkGraph& g = *graph_;
  double v = 0;
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.is_exit()) continue;
    const Eigen::ArrayXXd& rho = s.density[a];
    for (Index k = 0; k < arc.commodity_count(); ++k) {
      const double c = g.movements[arc.out_movements[k]].weight_constant;
      if (arc.is_source) {
        v += 0.5 * c * rho(k, 0) * rho(k, 0);
      } else {
        const Eigen::VectorXd profile = rho.row(k).transpose().matrix();
        v += arc_energy<double>(profile, kernels_.at(arc.cell_count), arc.cell_length(), c);
      }
    }
  }
  return v;
}

double lyapunov(const NetworkGraph& g, const NetworkState& s) { return Lyapunov(g)(s); }

double drift_estimate(const std::vector<double>& times, const std::vector<double>& values,
                      double window) {
  if (times.size() != values.size()) throw std::invalid_argument("series length mismatch");
  if (times.size() < 2) throw std::invalid_argument("drift needs at least two samples");
  const double end = times.back();
  const auto first = std::lower_bound(times.begin(), times.end(), end - window - 1e-9);
  const auto i = static_cast<std::size_t>(first - times.begin());
  if (times.size() - i < 2 || times.back() <= times[i]) {
    throw std::invalid_argument("drift window too short");
  }
  return (values.back() - values[i]) / (times.back() - times[i]);
}

double ols_slope(const std::vector<double>& times, const std::vector<double>& values) {
  const auto n = static_cast<Index>(times.size());
  if (n < 2) return 0.0;
  const Eigen::Map<const Eigen::ArrayXd> t(times.data(), n);
  const Eigen::Map<const Eigen::ArrayXd> y(values.data(), n);
  const Eigen::ArrayXd tc = t - t.mean();
  const double sxx = tc.square().sum();
  if (sxx <= 0) return 0.0;
  return (tc * (y - y.mean())).sum() / sxx;
}

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Stable: return "stable";
    case Verdict::Unstable: return "unstable";
    case Verdict::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

Verdict stability_verdict(double queue_slope, double mean_total_vehicles,
                          const StabilityThresholds& thresholds) {
  if (queue_slope > thresholds.slope_unstable) return Verdict::Unstable;
  if (!std::isfinite(mean_total_vehicles) || mean_total_vehicles > thresholds.mass_bound) {
    return Verdict::Unstable;
  }
  if (queue_slope < thresholds.slope_stable) return Verdict::Stable;
  return Verdict::Inconclusive;
}

StabilityReport stability_report(const std::vector<double>& times,
                                 const std::vector<double>& source_queue,
                                 const std::vector<double>& total_vehicles,
                                 const std::vector<double>& v_times,
                                 const std::vector<double>& v_values,
                                 const StabilityThresholds& thresholds) {
  StabilityReport r;
  r.times = v_times;
  r.lyapunov = v_values;
  if (!times.empty()) {
    r.mean_total_vehicles =
        std::accumulate(total_vehicles.begin(), total_vehicles.end(), 0.0) / total_vehicles.size();
    r.mean_source_queue =
        std::accumulate(source_queue.begin(), source_queue.end(), 0.0) / source_queue.size();
    r.max_total_vehicles = *std::max_element(total_vehicles.begin(), total_vehicles.end());
    const double half = times.front() + 0.5 * (times.back() - times.front());
    const auto i = std::lower_bound(times.begin(), times.end(), half) - times.begin();
    r.queue_slope = ols_slope({times.begin() + i, times.end()},
                              {source_queue.begin() + i, source_queue.end()});
  }
  if (v_times.size() >= 2) {
    const double window = 0.5 * (v_times.back() - v_times.front());
    try {
      r.drift = drift_estimate(v_times, v_values, window);
    } catch (const std::invalid_argument&) {
      r.drift = 0;
    }
  }
  r.verdict = stability_verdict(r.queue_slope, r.mean_total_vehicles, thresholds);
  return r;
}

nlohmann::json to_json(const StabilityReport& report, bool with_series) {
  nlohmann::json j;
  j["verdict"] = to_string(report.verdict);
  j["queue_slope"] = report.queue_slope;
  j["drift"] = report.drift;
  j["mean_total_vehicles"] = report.mean_total_vehicles;
  j["mean_source_queue"] = report.mean_source_queue;
  j["max_total_vehicles"] = report.max_total_vehicles;
  if (with_series) {
    j["lyapunov"] = {{"t", report.times}, {"V", report.lyapunov}};
  }
  return j;
}

}  // namespace tflow
