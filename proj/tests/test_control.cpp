#include <doctest.h>

#include <cmath>
#include <random>

#include "support.hpp"
#include "tflow/control.hpp"
#include "tflow/errors.hpp"

using namespace tflow;
using tflow::test::ex1_compact;
using tflow::test::fixture;
using tflow::test::load_fixture;

namespace {

// U -> a -> X -> b -> Y -> e, one commodity per arc.
NetworkGraph chain(int cells_a, int cells_b, double c = 1.0) {
  nlohmann::json j = nlohmann::json::parse(R"({
    "schema_version": 1,
    "nodes": [{"id": "U"}, {"id": "X"}, {"id": "Y"}],
    "arcs": [{"id": "a", "from": "U", "to": "X", "length": 1000},
             {"id": "b", "from": "X", "to": "Y", "length": 600},
             {"id": "e", "from": "Y", "length": 300}],
    "arrivals": [{"source": "src", "node": "U", "rate": 0.1}],
    "movements": [{"id": "src>a", "from": "src", "to": "a"},
                  {"id": "a>b", "from": "a", "to": "b"},
                  {"id": "b>e", "from": "b", "to": "e"}],
    "phases": [{"id": "U.go", "node": "U", "movements": ["src>a"]},
               {"id": "X.go", "node": "X", "movements": ["a>b"]},
               {"id": "Y.go", "node": "Y", "movements": ["b>e"]}]
  })");
  j["arcs"][0]["cells"] = cells_a;
  j["arcs"][1]["cells"] = cells_b;
  j["movements"][1]["c"] = c;
  return build_network(ConfigDocument(j));
}

// Two independent one-cell approaches crossing at X.
NetworkGraph crossing() {
  return build_network(ConfigDocument::parse(R"({
    "schema_version": 1,
    "nodes": [{"id": "U1"}, {"id": "U2"}, {"id": "X"}, {"id": "Y1"}, {"id": "Y2"}],
    "arcs": [{"id": "a1", "from": "U1", "to": "X", "length": 300, "cells": 1},
             {"id": "a2", "from": "U2", "to": "X", "length": 300, "cells": 1},
             {"id": "b1", "from": "X", "to": "Y1", "length": 300, "cells": 1},
             {"id": "b2", "from": "X", "to": "Y2", "length": 300, "cells": 1},
             {"id": "e1", "from": "Y1", "length": 300}, {"id": "e2", "from": "Y2", "length": 300}],
    "arrivals": [{"source": "s1", "node": "U1", "rate": 0.1}, {"source": "s2", "node": "U2", "rate": 0.1}],
    "movements": [{"id": "s1>a1", "from": "s1", "to": "a1"}, {"id": "s2>a2", "from": "s2", "to": "a2"},
                  {"id": "a1>b1", "from": "a1", "to": "b1"}, {"id": "a2>b2", "from": "a2", "to": "b2"},
                  {"id": "b1>e1", "from": "b1", "to": "e1"}, {"id": "b2>e2", "from": "b2", "to": "e2"}],
    "phases": [{"id": "U1.go", "node": "U1", "movements": ["s1>a1"]},
               {"id": "U2.go", "node": "U2", "movements": ["s2>a2"]},
               {"id": "X.1", "node": "X", "movements": ["a1>b1"]},
               {"id": "X.2", "node": "X", "movements": ["a2>b2"]},
               {"id": "Y1.go", "node": "Y1", "movements": ["b1>e1"]},
               {"id": "Y2.go", "node": "Y2", "movements": ["b2>e2"]}]
  })"));
}

// Midpoint rule for int_0^l f(x) dx with n points.
template <typename F>
double integrate(F f, double l, int n) {
  double sum = 0;
  for (int k = 0; k < n; ++k) sum += f((k + 0.5) * l / n);
  return sum * l / n;
}

NetworkState random_state(const NetworkGraph& g, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0, 1);
  NetworkState s = make_state(g);
  for (std::size_t a = 0; a < g.arcs.size(); ++a) {
    const Arc& arc = g.arcs[a];
    if (arc.is_source) {
      for (Index k = 0; k < s.density[a].rows(); ++k) s.density[a](k, 0) = 20 * u(rng);
      continue;
    }
    const double jam = arc.lane_group_fd().jam_density;
    for (Index i = 0; i < s.density[a].cols(); ++i) {
      const double total = jam * u(rng);
      Eigen::ArrayXd w(s.density[a].rows());
      for (Index k = 0; k < w.size(); ++k) w[k] = u(rng) + 1e-3;
      s.density[a].col(i) = total * w / w.sum();
    }
  }
  return s;
}

FluxContext controller_view(double dt) {
  FluxContext ctx;
  ctx.dt = dt;
  ctx.ramp = false;
  return ctx;
}

}  // namespace

TEST_CASE("position-weighted pressure against quadrature") {
  const double rho0 = 0.05;
  SUBCASE("uniform upstream, empty downstream gives c rho0 l / 2") {
    const double oracle = integrate([&](double x) { return x / 1000.0 * rho0; }, 1000.0, 10000);
    CHECK(oracle == doctest::Approx(rho0 * 1000 / 2));
    for (int cells : {10, 33, 10000}) {
      const NetworkGraph g = chain(cells, 20);
      NetworkState s = make_state(g);
      s.density[g.find_arc("a")].setConstant(rho0);
      CAPTURE(cells);
      CHECK(pwbp_weight(g, s, g.find_movement("a>b"), 0) == doctest::Approx(oracle).epsilon(1e-12));
    }
    const NetworkGraph g = chain(10, 20, 2.5);
    NetworkState s = make_state(g);
    s.density[g.find_arc("a")].setConstant(rho0);
    CHECK(pwbp_weight(g, s, g.find_movement("a>b"), 0) == doctest::Approx(2.5 * oracle));
  }
  SUBCASE("jammed downstream, empty upstream gives c pi jam l_b / 2") {
    const double jam = 0.15;
    const double oracle = integrate([&](double x) { return (600.0 - x) / 600.0 * jam; }, 600.0, 10000);
    CHECK(oracle == doctest::Approx(jam * 600 / 2));
    for (int cells : {20, 10000}) {
      const NetworkGraph g = chain(10, cells);
      NetworkState s = make_state(g);
      s.density[g.find_arc("b")].setConstant(jam);
      CHECK(pwbp_weight(g, s, g.find_movement("a>b"), 0) == doctest::Approx(oracle).epsilon(1e-12));
    }
  }
  SUBCASE("upstream vehicles near the stop line weigh more") {
    const NetworkGraph g = chain(10, 20);
    NetworkState front = make_state(g), back = make_state(g);
    front.density[g.find_arc("a")](0, 9) = 0.1;
    back.density[g.find_arc("a")](0, 0) = 0.1;
    const Index m = g.find_movement("a>b");
    CHECK(pwbp_weight(g, front, m, 0) == doctest::Approx(0.1 * 100 * 0.95));
    CHECK(pwbp_weight(g, back, m, 0) == doctest::Approx(0.1 * 100 * 0.05));
    CHECK(pwbp_weight(g, front, m, 0, PositionWeighting::PointQueue) ==
          doctest::Approx(pwbp_weight(g, back, m, 0, PositionWeighting::PointQueue)));
  }
  SUBCASE("empty network") {
    const NetworkGraph g = chain(10, 20);
    const NetworkState s = make_state(g);
    for (Index m = 0; m < static_cast<Index>(g.movements.size()); ++m) {
      CHECK(pwbp_weight(g, s, m, 0) == 0.0);
      CHECK(bp_weight(g, s, m, 0) == 0.0);
      CHECK(cabp_weight(g, s, m, 0) == 0.0);
    }
  }
}

TEST_CASE("back-pressure weights") {
  const Scenario sc = load_fixture("nwc.cfg");
  const NetworkGraph& g = sc.graph;
  const Index west = g.find_arc("west_in"), east = g.find_arc("east_out");
  const Index m = g.find_movement("west_in>east_out");
  const double jam = g.arcs[east].lane_group_fd().jam_density;
  NetworkState s = make_state(g);
  s.density[west].row(0).setConstant(14.0 / g.arcs[west].length);
  CHECK(commodity_volume(g, s, west, 0) == doctest::Approx(14));

  SUBCASE("full downstream: BP still pushes, CABP does not") {
    s.density[east].row(0).setConstant(jam);
    CHECK(remaining_storage(g, s, east) == doctest::Approx(0).epsilon(1e-12));
    CHECK(bp_weight(g, s, m, 0) == doctest::Approx(14 - jam * 60));
    CHECK(bp_weight(g, s, m, 0) > 0);
    CHECK(cabp_weight(g, s, m, 0) == 0.0);
  }
  SUBCASE("downstream with room for one and a half vehicles") {
    s.density[east].row(0).setConstant((jam * 60 - 1.5) / 60);
    CHECK(remaining_storage(g, s, east) == doctest::Approx(1.5));
    CHECK(bp_weight(g, s, m, 0) == doctest::Approx(14 - (jam * 60 - 1.5)));
    CHECK(cabp_weight(g, s, m, 0) == doctest::Approx(bp_weight(g, s, m, 0)));
  }
  SUBCASE("downstream heavier than upstream clamps at zero") {
    s.density[west].setZero();
    s.density[east].row(0).setConstant(0.05);
    CHECK(bp_weight(g, s, m, 0) == 0.0);
  }
  SUBCASE("exit arcs never fill") {
    CHECK(std::isinf(remaining_storage(g, s, g.find_arc("north_out"))));
  }
}

TEST_CASE("expected flux decomposition") {
  SUBCASE("two equally likely samples") {
    FluxSamples fs;
    fs.demand = (Eigen::ArrayXd(2) << 0.2, 0.4).finished();
    fs.supply = (Eigen::ArrayXd(2) << 0.3, 0.3).finished();
    const FluxDecomposition d = decompose_expected_flux(fs);
    CHECK(d.probability == doctest::Approx(0.5));
    CHECK(d.demand_when_served == doctest::Approx(0.2));
    CHECK(d.supply_when_blocked == doctest::Approx(0.3));
    CHECK(d.value == doctest::Approx(0.25));
    CHECK(d.direct == doctest::Approx(0.25));
  }
  SUBCASE("deterministic flux is min of demand and supply") {
    FluxSamples fs;
    fs.demand = Eigen::ArrayXd::Constant(1, 0.3);
    fs.supply = Eigen::ArrayXd::Constant(1, 0.1);
    CHECK(decompose_expected_flux(fs).value == doctest::Approx(0.1));
  }
  SUBCASE("stochastic parameters: Monte Carlo expectation agrees with the decomposition") {
    nlohmann::json j = nlohmann::json::parse(std::string(ex1_compact));
    for (auto& a : j["arcs"]) a["fd"] = {{"cv", {{"v_free", 0.1}, {"wave_speed", 0.1}, {"jam_density", 0.2}}}};
    const NetworkGraph g = build_network(ConfigDocument(j));
    NetworkState s = make_state(g);
    s.density[g.find_arc("arc1")](0, 0) = 30;
    s.density[g.find_arc("arc3")].setConstant(0.12);
    const Index x = g.find_node("X"), m = g.find_movement("m13"), p = g.find_phase("p1");
    FluxContext ctx = controller_view(1.8);
    std::mt19937_64 rng_a(11), rng_b(12);
    const FdSamples small = draw_fd_samples(g, x, 64, rng_a);
    const FdSamples large = draw_fd_samples(g, x, 20000, rng_b);
    REQUIRE(small.size() == 64);
    const double mc = expected_movement_flux(g, s, m, p, ctx, small);
    const FluxDecomposition ds = decompose_expected_flux(movement_flux_samples(g, s, m, p, ctx, small));
    const FluxDecomposition dl = decompose_expected_flux(movement_flux_samples(g, s, m, p, ctx, large));
    CHECK(ds.value == doctest::Approx(mc).epsilon(1e-12));
    CHECK(ds.direct == doctest::Approx(mc).epsilon(1e-12));
    CHECK(dl.probability > 0.0);
    CHECK(dl.probability < 1.0);
    const double se = std::hypot(ds.standard_error, dl.standard_error);
    CHECK(std::abs(mc - dl.value) <= 3 * se);
    CHECK(expected_movement_flux(g, s, m, g.find_phase("p2"), ctx, small) == 0.0);
  }
}

TEST_CASE("phase selection") {
  SelectionOptions options;
  std::mt19937_64 rng(5);

  SUBCASE("single candidate is returned") {
    const Scenario sc = load_fixture("nwc.cfg");
    const NetworkGraph& g = sc.graph;
    const Index w = g.find_node("W");
    for (PolicyKind p : {PolicyKind::BP, PolicyKind::CABP, PolicyKind::PWBP}) {
      const auto d = select_phase(g, make_state(g), w, p, g.nodes[w].phases, controller_view(sc.dt), options, rng);
      CHECK(d.phase == g.find_phase("W.go"));
    }
  }
  SUBCASE("stop-line spillback: BP and CABP serve the blocked approach, PWBP does not") {
    const Scenario sc = load_fixture("nwc.cfg");
    const NetworkGraph& g = sc.graph;
    NetworkState s = make_state(g);
    const Index west = g.find_arc("west_in"), south = g.find_arc("south_in"), east = g.find_arc("east_out");
    const double jam = g.arcs[west].lane_group_fd().jam_density;
    s.density[west].row(0).tail(6).setConstant(jam);  // 13.5 veh at the stop line
    s.density[south](0, g.arcs[south].cell_count - 1) = 2.0 / g.arcs[south].cell_length();
    s.density[east](0, 0) = jam;  // first downstream cell full
    const Index x = g.find_node("X");
    const auto cands = g.nodes[x].phases;
    const FluxContext ctx = controller_view(sc.dt);
    CHECK(select_phase(g, s, x, PolicyKind::BP, cands, ctx, options, rng).phase == g.find_phase("X.EW"));
    CHECK(select_phase(g, s, x, PolicyKind::CABP, cands, ctx, options, rng).phase == g.find_phase("X.EW"));
    const auto pw = select_phase(g, s, x, PolicyKind::PWBP, cands, ctx, options, rng);
    CHECK(pw.phase == g.find_phase("X.NS"));
    CHECK(pw.scores[0] == 0.0);  // X.EW: no supply
  }
  SUBCASE("exact ties are broken uniformly") {
    const NetworkGraph g = build_network(ConfigDocument::parse(ex1_compact));
    NetworkState s = make_state(g);
    s.density[g.find_arc("arc1")](0, 0) = 5;
    s.density[g.find_arc("arc2")](0, 0) = 5;
    const Index x = g.find_node("X");
    int first = 0;
    const int trials = 10000;
    for (int k = 0; k < trials; ++k) {
      const auto d = select_phase(g, s, x, PolicyKind::PWBP, g.nodes[x].phases, controller_view(1.8), options, rng);
      CHECK(d.tie);
      first += d.phase == g.find_phase("p1");
    }
    CHECK(std::abs(first - trials / 2) <= 3 * std::sqrt(trials * 0.25));
  }
  SUBCASE("all scores zero with servable flow: every phase is chosen sometimes") {
    const NetworkGraph g = crossing();
    NetworkState s = make_state(g);
    s.density[g.find_arc("a1")].setConstant(0.05);
    s.density[g.find_arc("b1")].setConstant(0.05);
    const Index m = g.find_movement("a1>b1");
    CHECK(pwbp_weight(g, s, m, 0) == 0.0);
    const Index x = g.find_node("X");
    const FluxContext ctx = controller_view(1.8);
    CHECK(expected_movement_flux(g, s, m, g.find_phase("X.1"), ctx, {}) > 0);
    int first = 0;
    for (int k = 0; k < 1000; ++k) {
      first += select_phase(g, s, x, PolicyKind::PWBP, g.nodes[x].phases, ctx, options, rng).phase ==
               g.find_phase("X.1");
    }
    CHECK(first > 0);
    CHECK(first < 1000);
  }
}

TEST_CASE("pressure control on the grid") {
  const Scenario sc = load_fixture("grid3x3.cfg");
  const NetworkGraph& g = sc.graph;
  const Controller ctl(g, sc.controller);
  SelectionOptions options;
  const FluxContext ctx = controller_view(sc.dt);

  SUBCASE("work conserving") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const NetworkState s = random_state(g, seed);
      std::mt19937_64 rng(seed);
      for (Index n = 0; n < static_cast<Index>(g.nodes.size()); ++n) {
        bool servable = false;
        for (Index p : ctl.candidates(n)) {
          const Eigen::ArrayXd q = expected_node_fluxes(g, s, n, p, ctx, {});
          for (std::size_t k = 0; k < g.nodes[n].movements.size(); ++k) {
            const Index m = g.nodes[n].movements[k];
            servable = servable || (g.phases[p].contains(m) && q[k] > 0 && pwbp_weight(g, s, m, 0) > 0);
          }
        }
        const auto d = select_phase(g, s, n, PolicyKind::PWBP, ctl.candidates(n), ctx, options, rng);
        const double best = *std::max_element(d.scores.begin(), d.scores.end());
        const auto pos = std::find(d.candidates.begin(), d.candidates.end(), d.phase) - d.candidates.begin();
        CHECK(d.scores[pos] == best);
        if (servable) CHECK(best > 0);
      }
    }
  }
  SUBCASE("joint maximization over two nodes equals per-node maximization") {
    const Index n0 = g.find_node("n00"), n1 = g.find_node("n01");
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const NetworkState s = random_state(g, seed);
      SignalState sig;
      sig.active_phase.assign(g.nodes.size(), -1);
      sig.phase_start.assign(g.nodes.size(), 0.0);
      sig.green_since.assign(g.movements.size(), 0.0);
      double best = -1;
      std::pair<Index, Index> arg{-1, -1};
      for (Index p0 : ctl.candidates(n0)) {
        for (Index p1 : ctl.candidates(n1)) {
          apply_phase(g, sig, n0, p0, 0);
          apply_phase(g, sig, n1, p1, 0);
          double objective = 0;
          for (Index n : {n0, n1}) {
            for (Index m : g.nodes[n].movements) {
              objective += pwbp_weight(g, s, m, 0) * movement_flux(g, s, sig, m, ctx);
            }
          }
          if (objective > best) {
            best = objective;
            arg = {p0, p1};
          }
        }
      }
      std::mt19937_64 rng(seed);
      const auto d0 = select_phase(g, s, n0, PolicyKind::PWBP, ctl.candidates(n0), ctx, options, rng);
      const auto d1 = select_phase(g, s, n1, PolicyKind::PWBP, ctl.candidates(n1), ctx, options, rng);
      CHECK(d0.phase == arg.first);
      CHECK(d1.phase == arg.second);
      const double sum = *std::max_element(d0.scores.begin(), d0.scores.end()) +
                         *std::max_element(d1.scores.begin(), d1.scores.end());
      CHECK(sum == doctest::Approx(best).epsilon(1e-12));
    }
  }
  SUBCASE("decisions depend only on incident arcs") {
    const Index n = g.find_node("n00");
    std::vector<bool> incident(g.arcs.size(), false);
    for (Index a : g.nodes[n].in_arcs) incident[a] = true;
    for (Index a : g.nodes[n].out_arcs) incident[a] = true;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const NetworkState s = random_state(g, seed);
      NetworkState t = random_state(g, seed + 100);
      for (std::size_t a = 0; a < g.arcs.size(); ++a) {
        if (incident[a]) t.density[a] = s.density[a];
      }
      std::mt19937_64 r1(seed), r2(seed);
      const auto d1 = select_phase(g, s, n, PolicyKind::PWBP, ctl.candidates(n), ctx, options, r1);
      const auto d2 = select_phase(g, t, n, PolicyKind::PWBP, ctl.candidates(n), ctx, options, r2);
      CHECK(d1.phase == d2.phase);
      CHECK(d1.scores == d2.scores);
    }
  }
  SUBCASE("scaling every c leaves the decision unchanged") {
    ConfigDocument doc = ConfigDocument::load(fixture("grid3x3.cfg"));
    for (auto& m : doc.root()["movements"]) m["c"] = 3.7;
    const NetworkGraph scaled = build_network(doc);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const NetworkState s = random_state(g, seed);
      for (Index n = 0; n < static_cast<Index>(g.nodes.size()); ++n) {
        std::mt19937_64 r1(seed), r2(seed);
        const auto d1 = select_phase(g, s, n, PolicyKind::PWBP, ctl.candidates(n), ctx, options, r1);
        const auto d2 = select_phase(scaled, s, n, PolicyKind::PWBP, ctl.candidates(n), ctx, options, r2);
        CHECK(d1.phase == d2.phase);
        for (std::size_t k = 0; k < d1.scores.size(); ++k) {
          CHECK(d2.scores[k] == doctest::Approx(3.7 * d1.scores[k]).epsilon(1e-12));
        }
      }
    }
  }
}

TEST_CASE("cadence and timing") {
  CHECK(cadence_boundary(30, 1.8, 10));
  CHECK(cadence_boundary(30.5, 1.0, 10));
  CHECK_FALSE(cadence_boundary(31, 0.9, 10));
  CHECK(cadence_boundary(35, 1.0, 5));
  CHECK(cadence_boundary(35, 1.0, 7));
  CHECK_FALSE(cadence_boundary(34, 1.0, 7));

  SUBCASE("controller re-decides only on boundaries") {
    const Scenario sc = load_fixture("grid3x3.cfg");
    const NetworkGraph& g = sc.graph;
    Controller ctl(g, sc.controller);
    const NetworkState s = random_state(g, 3);
    FluxContext ctx;
    ctx.dt = 1.0;
    std::vector<ControlDecision> audit;
    ctx.time = 0;
    SignalState sig = ctl.tick(g, s, ctl.idle_signal(g), ctx, &audit);
    CHECK(audit.size() == g.nodes.size());
    for (Index p : sig.active_phase) CHECK(p >= 0);
    audit.clear();
    ctx.time = 5;
    const SignalState same = ctl.tick(g, s, sig, ctx, &audit);
    CHECK(audit.empty());
    CHECK(same.active_phase == sig.active_phase);
    CHECK(same.green_since == sig.green_since);
    ctx.time = 30;
    ctl.tick(g, s, sig, ctx, &audit);
    CHECK(audit.size() == g.nodes.size());
  }
  SUBCASE("fixed-time plan") {
    FixedTimePlan plan;
    plan.phases = {4, 7};
    plan.durations = {30, 10};
    CHECK(fixed_time_phase(plan, 0) == 4);
    CHECK(fixed_time_phase(plan, 29.9) == 4);
    CHECK(fixed_time_phase(plan, 30) == 7);
    CHECK(fixed_time_phase(plan, 39.9) == 7);
    CHECK(fixed_time_phase(plan, 40) == 4);
    plan.offset = 5;
    CHECK(fixed_time_phase(plan, 4) == 7);
    CHECK(fixed_time_phase(plan, 5) == 4);
  }
  SUBCASE("green onset resets only for newly served movements") {
    const NetworkGraph g = build_network(ConfigDocument::parse(R"({
      "schema_version": 1,
      "nodes": [{"id": "X"}],
      "arcs": [{"id": "b", "from": "X", "length": 300}, {"id": "c", "from": "X", "length": 300}],
      "arrivals": [{"source": "a1", "node": "X", "rate": 0}, {"source": "a2", "node": "X", "rate": 0}],
      "movements": [{"id": "a1>b", "from": "a1", "to": "b"}, {"id": "a2>c", "from": "a2", "to": "c"}],
      "phases": [{"id": "first", "node": "X", "movements": ["a1>b"]},
                 {"id": "both", "node": "X", "movements": ["a1>b", "a2>c"]}]
    })"));
    SignalState sig;
    sig.active_phase.assign(1, -1);
    sig.phase_start.assign(1, 0.0);
    sig.green_since.assign(2, 0.0);
    apply_phase(g, sig, 0, g.find_phase("first"), 0);
    apply_phase(g, sig, 0, g.find_phase("both"), 10);
    CHECK(sig.green_since[g.find_movement("a1>b")] == 0.0);
    CHECK(sig.green_since[g.find_movement("a2>c")] == 10.0);
    CHECK(sig.is_green(g, g.find_movement("a2>c")));
  }
}
