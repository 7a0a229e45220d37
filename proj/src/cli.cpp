#include "tflow/cli.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <optional>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "tflow/config.hpp"
#include "tflow/errors.hpp"
#include "tflow/metrics_io.hpp"
#include "tflow/scenario.hpp"

namespace tflow {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

struct Options {
  std::string config;
  std::string out_dir;
  std::string policy;
  std::string policies = "ft,bp,cabp,pwbp";
  std::string spec;
  std::string process;
  std::optional<std::uint64_t> seed;
  double horizon = 0;
  double dt = 0;
  int threads = 0;
  bool audit = false;
};

fs::path output_dir(const Options& o) {
  fs::path dir = o.out_dir;
  if (dir.empty()) {
    const char* env = std::getenv("TFLOW_OUT_DIR");
    dir = env && *env ? env : "out";
  }
  fs::create_directories(dir);
  return dir;
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write '" + path.string() + "'");
  return f;
}

Scenario load(const Options& o) {
  ConfigDocument doc = ConfigDocument::load(o.config);
  if (o.dt > 0) doc.root()["sim"]["dt"] = o.dt;
  if (o.horizon > 0) doc.root()["sim"]["horizon"] = o.horizon;
  return load_scenario(doc);
}

RunOptions run_options(const Options& o) {
  RunOptions r;
  if (!o.policy.empty()) r.policy = parse_policy(o.policy);
  r.seed = o.seed;
  if (o.process == "poisson") r.process = ArrivalProcess::Poisson;
  else if (o.process == "deterministic") r.process = ArrivalProcess::Deterministic;
  else if (!o.process.empty()) throw ValidationError("--process must be poisson or deterministic");
  r.record_decisions = o.audit;
  return r;
}

json run_summary(const RunResult& r) {
  return {{"verdict", to_string(r.report.verdict)},
          {"queue_slope", r.report.queue_slope},
          {"arrivals", r.arrivals},
          {"exits", r.exits},
          {"total_delay", r.total_delay},
          {"average_delay", std::isfinite(r.average_delay) ? json(r.average_delay) : json()},
          {"max_mass_error", r.invariants.max_mass_error}};
}

int do_validate(const Options& o, std::ostream& out) {
  const Scenario sc = load(o);
  check_cfl(sc.graph, sc.dt);
  std::size_t physical = 0;
  for (const Arc& a : sc.graph.arcs) physical += a.is_source ? 0 : 1;
  out << json{{"status", "ok"},
              {"nodes", sc.graph.nodes.size()},
              {"arcs", physical},
              {"sources", sc.graph.arcs.size() - physical},
              {"movements", sc.graph.movements.size()},
              {"phases", sc.graph.phases.size()},
              {"dt", sc.dt}}
             .dump()
      << '\n';
  return 0;
}

int do_simulate(const Options& o, std::ostream& out) {
  const Scenario sc = load(o);
  const RunOptions ro = run_options(o);
  const RunResult r = run_scenario(sc, ro);
  const fs::path dir = output_dir(o);
  {
    auto f = open_output(dir / "metrics.csv");
    write_metrics_csv(f, sc.graph, r.metrics);
  }
  {
    auto f = open_output(dir / "metrics.json");
    f << metrics_json(sc.graph, r.metrics).dump(1) << '\n';
  }
  {
    auto f = open_output(dir / "stability.json");
    f << to_json(r.report).dump(1) << '\n';
  }
  {
    auto f = open_output(dir / "plot_data.csv");
    const std::string id = to_string(ro.policy.value_or(sc.controller.policy));
    write_plot_data(f, {{id, &r.metrics}});
  }
  if (o.audit) {
    auto f = open_output(dir / "decisions.csv");
    write_decision_audit(f, sc.graph, r.decisions);
  }
  json summary = run_summary(r);
  summary["policy"] = to_string(ro.policy.value_or(sc.controller.policy));
  summary["out"] = dir.string();
  out << summary.dump() << '\n';
  return 0;
}

int do_sweep(const Options& o, std::ostream& out) {
  const Scenario sc = load(o);
  json spec_json;
  if (!o.spec.empty()) {
    std::ifstream f(o.spec);
    if (!f) throw std::runtime_error("cannot read sweep spec '" + o.spec + "'");
    try {
      spec_json = json::parse(f);
    } catch (const json::parse_error& e) {
      throw ValidationError(std::string("sweep spec is not valid JSON: ") + e.what());
    }
  } else if (sc.extra.contains("sweep")) {
    spec_json = sc.extra["sweep"];
  } else {
    throw ValidationError("sweep needs --spec or a 'sweep' section in the config");
  }
  SweepSpec spec = parse_sweep_spec(spec_json, sc.graph);
  if (!o.policy.empty()) spec.policy = parse_policy(o.policy);
  const int threads = o.threads > 0 ? o.threads : default_threads();
  const SweepResult result = capacity_sweep(sc, spec, threads);
  const fs::path dir = output_dir(o);
  {
    auto f = open_output(dir / "sweep.csv");
    write_sweep_csv(f, result);
  }
  {
    auto f = open_output(dir / "frontier.json");
    f << sweep_json(result).dump(1) << '\n';
  }
  out << json{{"policy", to_string(spec.policy)}, {"frontier", sweep_json(result)["frontier"]}, {"out", dir.string()}}
             .dump()
      << '\n';
  return 0;
}

int do_compare(const Options& o, std::ostream& out) {
  const Scenario sc = load(o);
  std::vector<PolicyKind> kinds;
  std::stringstream list(o.policies);
  for (std::string item; std::getline(list, item, ',');) {
    if (!item.empty()) kinds.push_back(parse_policy(item));
  }
  if (kinds.empty()) throw ValidationError("--policies is empty");
  const RunOptions base = run_options(o);
  std::vector<RunResult> results(kinds.size());
  const int threads = o.threads > 0 ? o.threads : default_threads();
  parallel_for(kinds.size(), threads, [&](std::size_t i) {
    RunOptions ro = base;
    ro.policy = kinds[i];
    results[i] = run_scenario(sc, ro);
  });
  const fs::path dir = output_dir(o);
  json report = json::object();
  std::vector<std::pair<std::string, const MetricsSeries*>> runs;
  for (std::size_t i = 0; i < kinds.size(); ++i) {
    const std::string id = to_string(kinds[i]);
    auto f = open_output(dir / ("metrics_" + id + ".csv"));
    write_metrics_csv(f, sc.graph, results[i].metrics);
    report[id] = run_summary(results[i]);
    runs.emplace_back(id, &results[i].metrics);
  }
  {
    auto f = open_output(dir / "plot_data.csv");
    write_plot_data(f, runs);
  }
  {
    auto f = open_output(dir / "compare.json");
    f << report.dump(1) << '\n';
  }
  out << json{{"policies", report}, {"out", dir.string()}}.dump() << '\n';
  return 0;
}

void error_json(std::ostream& err, const char* kind, const std::string& message,
                const std::string& subject = {}) {
  json j = {{"error", {{"kind", kind}, {"message", message}}}};
  if (!subject.empty()) j["error"]["subject"] = subject;
  err << j.dump() << '\n';
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-commodity traffic network simulator"};
  app.require_subcommand(1);
  Options o;

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", o.config, "Config file")->required();

  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  simulate->add_option("config", o.config, "Config file")->required();
  simulate->add_option("--policy", o.policy, "ft|bp|cabp|pwbp");
  simulate->add_option("--seed", o.seed, "Random seed");
  simulate->add_option("--out", o.out_dir, "Output directory");
  simulate->add_option("--horizon", o.horizon, "Simulated seconds");
  simulate->add_option("--dt", o.dt, "Time step override (s)");
  simulate->add_option("--process", o.process, "poisson|deterministic");
  simulate->add_flag("--audit", o.audit, "Write the decision audit log");

  auto* sweep = app.add_subcommand("sweep", "Estimate the capacity frontier");
  sweep->add_option("config", o.config, "Config file")->required();
  sweep->add_option("--spec", o.spec, "Sweep spec (JSON)");
  sweep->add_option("--policy", o.policy, "Override the spec policy");
  sweep->add_option("--out", o.out_dir, "Output directory");
  sweep->add_option("--threads", o.threads, "Worker threads");
  sweep->add_option("--dt", o.dt, "Time step override (s)");

  auto* compare = app.add_subcommand("compare", "Run several policies on one config");
  compare->add_option("config", o.config, "Config file")->required();
  compare->add_option("--policies", o.policies, "Comma-separated policy list");
  compare->add_option("--seed", o.seed, "Random seed");
  compare->add_option("--out", o.out_dir, "Output directory");
  compare->add_option("--horizon", o.horizon, "Simulated seconds");
  compare->add_option("--dt", o.dt, "Time step override (s)");
  compare->add_option("--process", o.process, "poisson|deterministic");
  compare->add_option("--threads", o.threads, "Worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    error_json(err, "usage", e.what());
    return 1;
  }

  try {
    if (*validate) return do_validate(o, out);
    if (*simulate) return do_simulate(o, out);
    if (*sweep) return do_sweep(o, out);
    if (*compare) return do_compare(o, out);
  } catch (const ValidationError& e) {
    error_json(err, "validation", e.what(), e.subject());
    return 1;
  } catch (const nlohmann::json::exception& e) {
    error_json(err, "validation", e.what());
    return 1;
  } catch (const std::out_of_range& e) {
    error_json(err, "validation", e.what());
    return 1;
  } catch (const std::exception& e) {
    error_json(err, "runtime", e.what());
    return 2;
  }
  return 2;
}

int cli_main(int argc, const char* const* argv) { return cli_main(argc, argv, std::cout, std::cerr); }

}  // namespace tflow
