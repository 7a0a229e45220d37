#include "tflow/scenario.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <thread>

#include "tflow/errors.hpp"

namespace tflow {

NetworkState initial_state(const Scenario& sc) {
  NetworkState s = make_state(sc.graph);
  for (const auto& e : sc.initial.entries) {
    const Arc& a = sc.graph.arcs[e.arc];
    if (a.is_source) {
      s.density[e.arc](e.commodity, 0) = e.values[0];
    } else {
      s.density[e.arc].row(e.commodity) = e.values.transpose();
    }
  }
  return s;
}

EffectiveParams incident_apply(const NetworkGraph& g, const std::vector<IncidentSpec>& incidents,
                               double t) {
  EffectiveParams p;
  for (const IncidentSpec& inc : incidents) {
    if (inc.lanes_blocked == 0 || t < inc.start || t >= inc.end) continue;
    if (p.jam_factor.empty()) p.jam_factor.resize(g.arcs.size());
    Eigen::ArrayXd& f = p.jam_factor[inc.arc];
    if (f.size() == 0) f = Eigen::ArrayXd::Ones(g.arcs[inc.arc].cell_count);
    const double factor = 1.0 - static_cast<double>(inc.lanes_blocked) / g.arcs[inc.arc].lanes;
    f.segment(inc.first_cell, inc.last_cell - inc.first_cell + 1) = factor;
  }
  return p;
}

double delay_rate(const NetworkGraph& g, const NetworkState& s, const EffectiveParams* params) {
  double total = 0;
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.is_source) {
      total += s.density[a].sum();
      continue;
    }
    const Eigen::Array<double, 1, Eigen::Dynamic> rho = s.density[a].colwise().sum();
    const double dx = arc.cell_length();
    for (Index k = 0; k < arc.cell_count; ++k) {
      if (rho[k] <= 0) continue;
      const FundamentalDiagramd fd = cell_fd(g, params, a, k);
      total += rho[k] * dx * (1.0 - speed(fd, rho[k]) / fd.v_free);
    }
  }
  return total;
}

Scenario scale_demand(const Scenario& sc, double scale, const std::vector<double>& weights) {
  Scenario out = sc;
  for (std::size_t i = 0; i < out.graph.arrivals.size(); ++i) {
    const double w = weights.empty() ? 1.0 : weights.at(i);
    for (double& v : out.graph.arrivals[i].rate.values) v *= scale * w;
  }
  return out;
}

namespace {

MetricsRecord make_record(const NetworkGraph& g, const NetworkState& s, const SignalState& sig,
                          double throughput, const EffectiveParams* params, const Lyapunov* energy) {
  MetricsRecord r;
  r.time = s.time;
  r.total_vehicles = total_vehicles(g, s);
  r.source_queue_total = source_queue_total(g, s);
  r.throughput = throughput;
  r.delay_rate = delay_rate(g, s, params);
  r.lyapunov_V = energy ? (*energy)(s) : std::numeric_limits<double>::quiet_NaN();
  r.phases = sig.active_phase;
  return r;
}

void check_step(const NetworkGraph& g, const NetworkState& before, const StepOutput& out,
                InvariantCounters& c) {
  const double m0 = total_vehicles(g, before);
  const double m1 = total_vehicles(g, out.state);
  const double err = std::abs((m1 - m0) - (out.arrivals - out.exits)) / std::max(1.0, m1);
  c.max_mass_error = std::max(c.max_mass_error, err);
  for (Index a = 0; a < static_cast<Index>(g.arcs.size()); ++a) {
    const Arc& arc = g.arcs[a];
    const Eigen::ArrayXXd& rho = out.state.density[a];
    c.negative_densities += (rho < 0).count();
    if (arc.is_source) continue;
    const double cap = arc.lane_group_fd().jam_density * (1 + 1e-12);
    c.cap_violations += (rho.colwise().sum() > cap).count();
  }
  for (Index m = 0; m < static_cast<Index>(g.movements.size()); ++m) {
    const double q = out.movement_flux[m];
    const double bound = g.saturation_flow(m) * (1 + 1e-12);
    if (q < 0 || q > bound) ++c.flux_violations;
  }
}

}  // namespace

RunResult run_scenario(const Scenario& sc_in, const RunOptions& options) {
  const Scenario& sc = sc_in;
  const NetworkGraph& g = sc.graph;
  ControllerSettings settings = sc.controller;
  if (options.policy) settings.policy = *options.policy;
  if (options.seed) settings.seed = *options.seed;
  const double horizon = options.horizon.value_or(sc.sim.horizon);
  const ArrivalProcess process = options.process.value_or(sc.sim.process);
  check_cfl(g, sc.dt);

  Controller controller(g, settings, options.weighting);
  ArrivalSampler sampler(g, settings.seed, process);
  const Lyapunov energy(g);

  RunResult result;
  NetworkState state = initial_state(sc);
  SignalState signal = controller.idle_signal(g);
  const auto steps = static_cast<long>(std::llround(horizon / sc.dt));
  const int stride = sc.sim.metrics_stride;
  const int v_stride = sc.sim.lyapunov_stride;

  std::vector<double> times, queues, masses, v_times, v_values;
  auto record = [&](const MetricsRecord& r, long k) {
    result.metrics.records.push_back(r);
    times.push_back(r.time);
    queues.push_back(r.source_queue_total);
    masses.push_back(r.total_vehicles);
    if (k % v_stride == 0) {
      v_times.push_back(r.time);
      v_values.push_back(r.lyapunov_V);
    }
  };

  EffectiveParams params;
  record(make_record(g, state, signal, 0.0, nullptr, &energy), 0);
  for (long k = 0; k < steps; ++k) {
    const double t = static_cast<double>(k) * sc.dt;
    state.time = t;
    if (!sc.incidents.empty()) params = incident_apply(g, sc.incidents, t);
    FluxContext ctx;
    ctx.dt = sc.dt;
    ctx.time = t;
    ctx.startup_time = sc.sim.startup_time;
    ctx.dead_time = sc.sim.dead_time;
    ctx.params = &params;
    signal = controller.tick(g, state, signal, ctx, options.record_decisions ? &result.decisions : nullptr);
    const std::vector<Eigen::ArrayXd> arrivals = sampler.draw(g, t, sc.dt);
    result.total_delay += delay_rate(g, state, &params) * sc.dt;
    StepOutput out = step(g, state, signal, ctx, arrivals);
    out.state.time = static_cast<double>(k + 1) * sc.dt;
    if (options.check_invariants) check_step(g, state, out, result.invariants);
    result.arrivals += out.arrivals;
    result.exits += out.exits;
    state = std::move(out.state);
    const long n = k + 1;
    if (n % stride == 0) {
      const EffectiveParams after = sc.incidents.empty() ? EffectiveParams{}
                                                         : incident_apply(g, sc.incidents, state.time);
      record(make_record(g, state, signal, out.exits / sc.dt, &after,
                         (n / stride) % v_stride == 0 ? &energy : nullptr),
             n / stride);
    }
  }
  if (result.exits > 0) {
    result.average_delay = result.total_delay / result.exits;
  } else {
    result.average_delay = result.total_delay > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  result.report = stability_report(times, queues, masses, v_times, v_values, options.thresholds);
  result.final_state = std::move(state);
  return result;
}

void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& job) {
  const auto workers = static_cast<std::size_t>(std::max(1, threads));
  if (workers == 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) job(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_lock;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < std::min(workers, count); ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_lock);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

int default_threads() {
  if (const char* env = std::getenv("TFLOW_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

SweepSpec parse_sweep_spec(const nlohmann::json& j, const NetworkGraph& g) {
  SweepSpec spec;
  auto number = [&](const char* key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) throw ValidationError(std::string("sweep.") + key + " must be a number");
    return j[key].get<double>();
  };
  if (j.contains("policy")) spec.policy = parse_policy(j["policy"].get<std::string>());
  spec.lo = number("lo", spec.lo);
  spec.hi = number("hi", spec.hi);
  spec.tolerance = number("tolerance", spec.tolerance);
  spec.horizon = number("horizon", spec.horizon);
  spec.delay_knee = number("delay_knee", spec.delay_knee);
  spec.retry_budget = static_cast<int>(number("retry_budget", spec.retry_budget));
  spec.thresholds.slope_stable = number("slope_stable", spec.thresholds.slope_stable);
  spec.thresholds.slope_unstable = number("slope_unstable", spec.thresholds.slope_unstable);
  if (j.contains("seeds")) spec.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
  if (j.contains("replications")) {
    const int r = j["replications"].get<int>();
    if (r < 1) throw ValidationError("sweep.replications must be >= 1");
    spec.seeds.clear();
    for (int i = 0; i < r; ++i) spec.seeds.push_back(static_cast<std::uint64_t>(i + 1));
  }
  if (j.contains("arrival_process")) {
    const std::string p = j["arrival_process"].get<std::string>();
    if (p == "poisson") spec.process = ArrivalProcess::Poisson;
    else if (p == "deterministic") spec.process = ArrivalProcess::Deterministic;
    else throw ValidationError("sweep.arrival_process must be poisson or deterministic");
  }
  if (!(spec.tolerance > 0)) throw ValidationError("sweep.tolerance must be > 0");
  if (!(spec.hi > spec.lo && spec.lo >= 0)) throw ValidationError("sweep needs 0 <= lo < hi");
  if (!(spec.horizon > 0)) throw ValidationError("sweep.horizon must be > 0");
  if (spec.seeds.empty()) throw ValidationError("sweep needs at least one seed");
  if (spec.retry_budget < 0) throw ValidationError("sweep.retry_budget must be >= 0");

  if (!j.contains("rays")) {
    spec.rays.push_back({"uniform", std::vector<double>(g.arrivals.size(), 1.0)});
    return spec;
  }
  for (const auto& jr : j["rays"]) {
    SweepRay ray;
    ray.name = jr.value("name", "ray" + std::to_string(spec.rays.size()));
    ray.weights.assign(g.arrivals.size(), 0.0);
    const auto& w = jr.at("weights");
    for (auto it = w.begin(); it != w.end(); ++it) {
      bool found = false;
      for (std::size_t i = 0; i < g.arrivals.size(); ++i) {
        if (g.arcs[g.arrivals[i].source_arc].id == it.key()) {
          ray.weights[i] = it->get<double>();
          found = true;
        }
      }
      if (!found) throw ValidationError("sweep ray '" + ray.name + "': unknown source '" + it.key() + "'", it.key());
      if (!(it->get<double>() >= 0)) throw ValidationError("sweep ray weights must be >= 0", it.key());
    }
    spec.rays.push_back(std::move(ray));
  }
  return spec;
}

PointVerdict evaluate_point(const Scenario& sc, const SweepSpec& spec, const std::vector<double>& weights,
                            double scale, int threads) {
  const Scenario scaled = scale_demand(sc, scale, weights);
  PointVerdict out;
  double horizon = spec.horizon;
  for (int attempt = 0; attempt <= spec.retry_budget; ++attempt, horizon *= 2) {
    const std::size_t n = spec.seeds.size();
    std::vector<Verdict> verdicts(n);
    std::vector<double> slopes(n), delays(n);
    parallel_for(n, threads, [&](std::size_t i) {
      RunOptions opt;
      opt.policy = spec.policy;
      opt.seed = spec.seeds[i];
      opt.horizon = horizon;
      opt.process = spec.process;
      opt.thresholds = spec.thresholds;
      opt.check_invariants = false;
      const RunResult r = run_scenario(scaled, opt);
      verdicts[i] = r.report.verdict;
      slopes[i] = r.report.queue_slope;
      delays[i] = r.average_delay;
    });
    const auto stable = std::count(verdicts.begin(), verdicts.end(), Verdict::Stable);
    const auto unstable = std::count(verdicts.begin(), verdicts.end(), Verdict::Unstable);
    out.replicates = verdicts;
    out.horizon = horizon;
    std::vector<double> sorted = slopes;
    std::sort(sorted.begin(), sorted.end());
    out.slope = sorted[sorted.size() / 2];
    double sum = 0;
    for (double d : delays) sum += d;
    out.average_delay = sum / static_cast<double>(n);
    if (2 * stable > static_cast<long>(n)) {
      out.verdict = Verdict::Stable;
    } else if (2 * unstable > static_cast<long>(n)) {
      out.verdict = Verdict::Unstable;
    } else {
      out.verdict = Verdict::Inconclusive;
    }
    if (out.verdict != Verdict::Inconclusive) return out;
  }
  out.flagged = true;
  return out;
}

SweepResult capacity_sweep(const Scenario& sc, const SweepSpec& spec, int threads) {
  SweepResult result;
  for (const SweepRay& ray : spec.rays) {
    FrontierEstimate f;
    f.ray = ray.name;
    auto probe = [&](double scale) {
      SweepPoint p{ray.name, scale, evaluate_point(sc, spec, ray.weights, scale, threads)};
      result.points.push_back(p);
      f.flagged = f.flagged || p.result.flagged;
      return p.result.verdict == Verdict::Stable;
    };
    double lo = spec.lo;
    double hi = spec.hi;
    if (probe(hi)) {
      f.scale = hi;
      f.unstable = std::numeric_limits<double>::infinity();
      f.bracketed = false;
    } else {
      while (hi - lo > spec.tolerance) {
        const double mid = 0.5 * (lo + hi);
        if (probe(mid)) lo = mid;
        else hi = mid;
      }
      f.scale = lo;
      f.unstable = hi;
    }
    std::vector<std::pair<double, double>> tested;
    for (const SweepPoint& p : result.points) {
      if (p.ray == ray.name) tested.emplace_back(p.scale, p.result.average_delay);
    }
    std::sort(tested.begin(), tested.end());
    for (const auto& [scale, delay] : tested) {
      if (delay > spec.delay_knee) {
        f.delay_knee = scale;
        break;
      }
    }
    result.frontier.push_back(f);
  }
  return result;
}

double pre_disturbance_delay(const std::vector<double>& times, const std::vector<double>& delay,
                             double start, double window) {
  double sum = 0;
  long n = 0;
  for (std::size_t i = 0; i < times.size(); ++i) {
    if (times[i] >= start - window && times[i] < start) {
      sum += delay[i];
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

double recovery_time(const std::vector<double>& times, const std::vector<double>& delay,
                     double pre_delay, double clear, double band, double window) {
  const auto n = times.size();
  // prefix sums for windowed means
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + delay[i];
  std::size_t j = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (times[i] < clear - 1e-9) continue;
    if (times[i] + window > times.back() + 1e-9) break;
    j = std::max(j, i);
    while (j + 1 < n && times[j + 1] <= times[i] + window + 1e-9) ++j;
    const double mean = (prefix[j + 1] - prefix[i]) / static_cast<double>(j + 1 - i);
    if (mean <= band * pre_delay + 1e-12) return times[i] - clear;
  }
  return std::numeric_limits<double>::infinity();
}

std::vector<RecoveryOutcome> recovery_experiment(const Scenario& sc, const RecoverySpec& spec,
                                                 int threads) {
  Scenario base = sc;
  for (ArrivalSpec& a : base.graph.arrivals) {
    // configured profile on the union of its breakpoints and the peak window
    std::vector<double> cuts = a.rate.times;
    cuts.push_back(spec.peak_start);
    cuts.push_back(spec.peak_end);
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    PiecewiseConstant<double> profile;
    profile.times.clear();
    for (double t : cuts) {
      const bool peak = t >= spec.peak_start && t < spec.peak_end;
      profile.times.push_back(t);
      profile.values.push_back(a.rate.at(t) * (peak ? spec.peak_scale : spec.base_scale));
    }
    a.rate = std::move(profile);
  }
  base.sim.horizon = spec.horizon;
  base.incidents.clear();
  if (spec.incident) base.incidents.push_back(*spec.incident);

  std::vector<RecoveryOutcome> out(spec.policies.size());
  parallel_for(spec.policies.size(), threads, [&](std::size_t i) {
    RunOptions opt;
    opt.policy = spec.policies[i];
    opt.seed = spec.seed;
    opt.horizon = spec.horizon;
    opt.process = spec.process;
    opt.check_invariants = false;
    RunResult r = run_scenario(base, opt);
    std::vector<double> times, delay;
    for (const MetricsRecord& m : r.metrics.records) {
      times.push_back(m.time);
      delay.push_back(m.delay_rate);
    }
    RecoveryOutcome& o = out[i];
    o.policy = spec.policies[i];
    o.pre_delay = pre_disturbance_delay(times, delay, spec.peak_start, spec.smoothing);
    o.recovery_time = recovery_time(times, delay, o.pre_delay, spec.peak_end, spec.band, spec.smoothing);
    o.average_delay = r.average_delay;
    o.metrics = std::move(r.metrics);
  });
  return out;
}

}  // namespace tflow
