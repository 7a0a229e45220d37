#!/usr/bin/env python3
"""Writes the shipped fixtures under fixtures/."""

import json
import pathlib

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def dump(name, doc):
    (OUT / name).write_text(json.dumps(doc, indent=1) + "\n")


def ex1():
    # Two one-way streets crossing at X; entry nodes A and B feed them.
    return {
        "schema_version": 1,
        "sim": {"horizon": 7200, "cell_length": 30, "arrival_process": "poisson"},
        "nodes": [{"id": "A"}, {"id": "B"}, {"id": "X", "cadence": 20}],
        "arcs": [
            {"id": "arc1", "from": "A", "to": "X", "length": 300, "lanes": 1},
            {"id": "arc2", "from": "B", "to": "X", "length": 300, "lanes": 1},
            {"id": "arc3", "from": "X", "length": 300, "lanes": 1},
            {"id": "arc4", "from": "X", "length": 300, "lanes": 1},
        ],
        "arrivals": [
            {"source": "s1", "node": "A", "rate": 0.05, "capacity": 1.0},
            {"source": "s2", "node": "B", "rate": 0.05, "capacity": 1.0},
        ],
        "movements": [
            {"id": "s1>arc1", "from": "s1", "to": "arc1"},
            {"id": "s2>arc2", "from": "s2", "to": "arc2"},
            {"id": "arc1>arc3", "from": "arc1", "to": "arc3"},
            {"id": "arc2>arc4", "from": "arc2", "to": "arc4"},
        ],
        "phases": [
            {"id": "A.go", "node": "A", "movements": ["s1>arc1"]},
            {"id": "B.go", "node": "B", "movements": ["s2>arc2"]},
            {"id": "X.p1", "node": "X", "movements": ["arc1>arc3"]},
            {"id": "X.p2", "node": "X", "movements": ["arc2>arc4"]},
        ],
        "controller": {"policy": "pwbp", "seed": 1, "default_green": 20},
        # weights scale the configured 0.05 veh/s to the movement saturation flow 0.5625 veh/s
        "sweep": {
            "policy": "pwbp",
            "lo": 0.0,
            "hi": 1.5,
            "tolerance": 0.02,
            "horizon": 7200,
            "seeds": [1, 2, 3],
            "rays": [
                {"name": "east", "weights": {"s1": 11.25, "s2": 0.0}},
                {"name": "north", "weights": {"s1": 0.0, "s2": 11.25}},
                {"name": "diagonal", "weights": {"s1": 11.25, "s2": 11.25}},
            ],
        },
    }


def ex2():
    # Ring of four jammed arcs; every vehicle wants the next ring arc.
    nodes = ["N1", "N2", "N3", "N4"]
    ring = [("r12", "N1", "N2"), ("r23", "N2", "N3"), ("r34", "N3", "N4"), ("r41", "N4", "N1")]
    arcs, movements, phases, initial = [], [], [], []
    for rid, a, b in ring:
        arcs.append({"id": rid, "from": a, "to": b, "length": 150, "lanes": 1})
    for n in nodes:
        arcs.append({"id": "x" + n[1], "from": n, "length": 150, "lanes": 1})
    for k, (rid, a, b) in enumerate(ring):
        nxt = ring[(k + 1) % 4][0]
        exit_id = "x" + b[1]
        movements.append({"id": f"{rid}>{nxt}", "from": rid, "to": nxt})
        movements.append({"id": f"{rid}>{exit_id}", "from": rid, "to": exit_id})
        initial.append({"arc": rid, "commodity": nxt, "density": 0.15})
    movements.append({"id": "src>r12", "from": "src", "to": "r12"})
    for rid, a, b in ring:
        nxt = [m for m in movements if m["from"] == rid]
        phases.append({"id": f"{b}.ring", "node": b, "movements": [m["id"] for m in nxt]})
    phases.append({"id": "N1.src", "node": "N1", "movements": ["src>r12"]})
    splits = {}
    for k, (rid, a, b) in enumerate(ring):
        splits[rid] = {ring[(k + 1) % 4][0]: 1.0, "x" + b[1]: 0.0}
    for arc in arcs:
        if arc["id"] in splits:
            arc["splits"] = splits[arc["id"]]
    initial.append({"arc": "src", "queue": 5.0})
    return {
        "schema_version": 1,
        "sim": {"horizon": 3600, "cell_length": 30, "arrival_process": "poisson"},
        "nodes": [{"id": n} for n in nodes],
        "arcs": arcs,
        "arrivals": [{"source": "src", "node": "N1", "rate": 0.0}],
        "movements": movements,
        "phases": phases,
        "initial": initial,
        "controller": {"policy": "pwbp", "seed": 1},
    }


DIRS = {"E": (0, 1), "W": (0, -1), "S": (1, 0), "N": (-1, 0)}
LEFT = {"E": "N", "N": "W", "W": "S", "S": "E"}
RIGHT = {v: k for k, v in LEFT.items()}
TURN_SPLIT = {"L": 0.2, "T": 0.6, "R": 0.2}


ARTERIAL_SPLIT = {"L": 0.0, "T": 0.9, "R": 0.1}  # no left turns off the arterial


def grid(size=3, length=300, lanes=2, rate=0.1, arterial=None):
    """Square grid. `arterial` = (row, rate) turns that row's east-west arcs
    into three-lane roads fed at the given rate with through-heavy splits."""
    def node(r, c):
        return f"n{r}{c}"

    def inside(r, c):
        return 0 <= r < size and 0 <= c < size

    def link(d, r, c):
        dr, dc = DIRS[d]
        return f"{d}_{r}{c}_{r + dr}{c + dc}"

    wide = {link("E", 1, 1)}  # three-lane arc hosting the incident
    art_row, art_rate = arterial if arterial else (None, rate)

    def on_arterial(r, d):
        return r == art_row and d in "EW"

    nodes, arcs, arrivals, movements, phases = [], [], [], [], []
    for r in range(size):
        for c in range(size):
            nodes.append({"id": node(r, c)})
            for d, (dr, dc) in DIRS.items():
                if inside(r + dr, c + dc):
                    aid = link(d, r, c)
                    wide_arc = aid in wide or on_arterial(r, d)
                    arcs.append({"id": aid, "from": node(r, c), "to": node(r + dr, c + dc),
                                 "length": length, "lanes": 3 if wide_arc else lanes})
                else:
                    arcs.append({"id": f"exit_{r}{c}_{d}", "from": node(r, c), "length": length,
                                 "lanes": 3 if on_arterial(r, d) else lanes})

    def inbound(r, c, d):
        dr, dc = DIRS[d]
        pr, pc = r - dr, c - dc
        return link(d, pr, pc) if inside(pr, pc) else f"src_{r}{c}_{d}"

    def outbound(r, c, d):
        dr, dc = DIRS[d]
        return link(d, r, c) if inside(r + dr, c + dc) else f"exit_{r}{c}_{d}"

    splits = {}
    for r in range(size):
        for c in range(size):
            groups = {}
            for d in DIRS:
                a = inbound(r, c, d)
                turns = {"T": outbound(r, c, d), "L": outbound(r, c, LEFT[d]),
                         "R": outbound(r, c, RIGHT[d])}
                share = ARTERIAL_SPLIT if on_arterial(r, d) else TURN_SPLIT
                if a.startswith("src_"):
                    arrivals.append({"source": a, "node": node(r, c),
                                     "rate": art_rate if on_arterial(r, d) else rate,
                                     "splits": {turns[t]: share[t] for t in turns}})
                else:
                    splits[a] = {turns[t]: share[t] for t in turns}
                for t, b in turns.items():
                    mid = f"{a}>{b}"
                    movements.append({"id": mid, "from": a, "to": b})
                    groups.setdefault((d, t), []).append(mid)
            n = node(r, c)

            def pick(ds, ts):
                return [m for d in ds for t in ts for m in groups[(d, t)]]

            both = ["four", "eight"]
            phases += [
                {"id": f"{n}.NS_TR", "node": n, "movements": pick("NS", "TR"), "schemes": both},
                {"id": f"{n}.NS_L", "node": n, "movements": pick("NS", "L"), "schemes": both},
                {"id": f"{n}.EW_TR", "node": n, "movements": pick("EW", "TR"), "schemes": both},
                {"id": f"{n}.EW_L", "node": n, "movements": pick("EW", "L"), "schemes": both},
            ]
            for d in "NSEW":
                phases.append({"id": f"{n}.{d}_all", "node": n, "movements": pick(d, "LTR"),
                               "schemes": ["eight"]})
    for arc in arcs:
        if arc["id"] in splits:
            arc["splits"] = splits[arc["id"]]
    fixed = [{"node": node(r, c),
              "phases": [f"{node(r, c)}.{p}" for p in ("NS_TR", "NS_L", "EW_TR", "EW_L")],
              "durations": [25, 5, 45, 5] if r == art_row else [30, 10, 30, 10]}
             for r in range(size) for c in range(size)]
    return {
        "schema_version": 1,
        "sim": {"horizon": 7200, "cell_length": 30, "arrival_process": "poisson"},
        "nodes": nodes,
        "arcs": arcs,
        "arrivals": arrivals,
        "movements": movements,
        "phases": phases,
        "controller": {
            "policy": "pwbp",
            "seed": 1,
            "schemes": {"pwbp": "eight", "bp": "four", "cabp": "four", "ft": "four"},
            "fixed_time": fixed,
        },
        "sweep": {"lo": 0.0, "hi": 8.0, "tolerance": 0.1, "horizon": 7200, "seeds": [1, 2, 3]},
    }


def grid_incident():
    # Middle row is a three-lane arterial; the incident closes two of its lanes.
    doc = grid(arterial=(1, 0.8))
    doc["sim"]["horizon"] = 21600
    doc["incidents"] = [{"arc": "E_11_12", "first_cell": 4, "last_cell": 5, "start": 3600,
                         "end": 7200, "lanes_blocked": 2}]
    doc["recovery"] = {"base_scale": 0.89, "peak_start": 3600, "peak_end": 7200}
    doc["sweep"]["hi"] = 4.0
    return doc


def nwc():
    # Eastbound approach into a short outbound arc, crossed by a northbound street.
    return {
        "schema_version": 1,
        "sim": {"horizon": 1800, "cell_length": 15, "arrival_process": "poisson"},
        "nodes": [{"id": "W"}, {"id": "S"}, {"id": "X"}, {"id": "D"}],
        "arcs": [
            {"id": "west_in", "from": "W", "to": "X", "length": 150},
            {"id": "south_in", "from": "S", "to": "X", "length": 150},
            {"id": "east_out", "from": "X", "to": "D", "length": 60},
            {"id": "north_out", "from": "X", "length": 150},
            {"id": "far", "from": "D", "length": 150},
        ],
        "arrivals": [
            {"source": "w_src", "node": "W", "rate": 0.1},
            {"source": "s_src", "node": "S", "rate": 0.1},
        ],
        "movements": [
            {"id": "w_src>west_in", "from": "w_src", "to": "west_in"},
            {"id": "s_src>south_in", "from": "s_src", "to": "south_in"},
            {"id": "west_in>east_out", "from": "west_in", "to": "east_out"},
            {"id": "south_in>north_out", "from": "south_in", "to": "north_out"},
            {"id": "east_out>far", "from": "east_out", "to": "far"},
        ],
        "phases": [
            {"id": "W.go", "node": "W", "movements": ["w_src>west_in"]},
            {"id": "S.go", "node": "S", "movements": ["s_src>south_in"]},
            {"id": "X.EW", "node": "X", "movements": ["west_in>east_out"]},
            {"id": "X.NS", "node": "X", "movements": ["south_in>north_out"]},
            {"id": "D.go", "node": "D", "movements": ["east_out>far"]},
        ],
        "controller": {"policy": "pwbp", "seed": 1},
    }


def riemann():
    cells = 40
    left = [0.02] * (cells // 2)
    right = [0.12] * (cells // 2)
    return {
        "schema_version": 1,
        "sim": {"horizon": 600, "cell_length": 30, "arrival_process": "deterministic"},
        "nodes": [{"id": "up"}],
        "arcs": [{"id": "road", "from": "up", "length": 1200, "lanes": 1}],
        "arrivals": [{"source": "feed", "node": "up", "rate": 0.3}],
        "movements": [{"id": "feed>road", "from": "feed", "to": "road"}],
        "phases": [{"id": "up.go", "node": "up", "movements": ["feed>road"]}],
        "initial": [{"arc": "road", "density": left + right}],
        "controller": {"policy": "pwbp", "seed": 1},
    }


def interior():
    # A ramp joining the middle of a corridor arc.
    return {
        "schema_version": 1,
        "sim": {"horizon": 1800, "cell_length": 30, "arrival_process": "poisson"},
        "nodes": [{"id": "W"}, {"id": "J", "cadence": 15}],
        "arcs": [
            {"id": "main", "from": "W", "to": "J", "length": 600, "lanes": 2},
            {"id": "out_e", "from": "J", "length": 300, "lanes": 2},
            {"id": "out_s", "from": "J", "length": 300, "lanes": 1,
             "fd": {"v_free": 12, "wave_speed": 4, "jam_density": 0.16,
                    "cv": {"v_free": 0.1, "wave_speed": 0.1, "jam_density": 0.05}}},
        ],
        "arrivals": [
            {"source": "west", "node": "W", "rate": 0.3},
            {"source": "ramp", "arc": "main", "position": 300, "rate": 0.15, "capacity": 0.4},
        ],
        "movements": [
            {"id": "west>main", "from": "west", "to": "main"},
            {"id": "main>out_e", "from": "main", "to": "out_e", "c": 1.0},
            {"id": "main>out_s", "from": "main", "to": "out_s", "c": 2.0},
        ],
        "phases": [
            {"id": "W.go", "node": "W", "movements": ["west>main"]},
            {"id": "J.east", "node": "J", "movements": ["main>out_e"]},
            {"id": "J.south", "node": "J", "movements": ["main>out_s"]},
            {"id": "J.both", "node": "J", "movements": ["main>out_e", "main>out_s"]},
        ],
        "controller": {"policy": "pwbp", "seed": 7, "mc_samples": 32},
    }


def main():
    OUT.mkdir(exist_ok=True)
    dump("ex1.cfg", ex1())
    dump("ex2_gridlock.cfg", ex2())
    dump("grid3x3.cfg", grid())
    dump("grid3x3_incident.cfg", grid_incident())
    dump("nwc.cfg", nwc())
    dump("riemann.cfg", riemann())
    dump("interior_inflow.cfg", interior())


if __name__ == "__main__":
    main()
