"""Search for the demand regime where feedback separates dcc from baseline."""
import time

from signalsim.harness import run_world
from signalsim.scenario import scenario_from_dict


def trial(tag, west, east, cross1, cross2, link, lanes, bias, seeds,
          duration=1500, warmup=300, h_cap=None):
    raw = {
        "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": link,
                     "boundary_length": 150, "lanes": lanes, "straight_bias": bias},
        "demand": {
            "sources": [
                {"sides": ["west"], "rate_windows": [[0, duration, west]], "group": "main"},
                {"sides": ["east"], "rate_windows": [[0, duration, east]], "group": "main"},
                {"sides": ["north", "south"], "nodes": [1],
                 "rate_windows": [[0, duration, cross1]], "group": "cross"},
                {"sides": ["north", "south"], "nodes": [2],
                 "rate_windows": [[0, duration, cross2]], "group": "cross"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
        "run": {"duration": duration, "warmup": warmup, "seed": 1},
    }
    if h_cap is not None:
        raw["controller"] = {"h_cap": h_cap}
    print(f"--- {tag}: W{west}/E{east} cross {cross1}|{cross2} link {link}x{lanes} bias {bias}"
          + (f" h_cap {h_cap}" if h_cap else ""))
    base = None
    for kind in ["cycle_adaptive", "baseline_sd", "dcc", "dcc_bc"]:
        means, stops, dead = [], [], 0
        t0 = time.time()
        for seed in seeds:
            sc = scenario_from_dict(raw, name="congest")
            b, w = run_world(sc, kind, seed=seed)
            means.append(b.mean_delay())
            stops.append(b.mean_stops())
            dead += 1 if b.deadlock else 0
        m = sum(means) / len(means)
        if kind == "baseline_sd":
            base = m
        rel = f" vs_base={m / base:5.3f}" if base and kind.startswith("dcc") else ""
        print(f"  {kind:15s} mean={m:8.2f} stops={sum(stops)/len(stops):5.2f} "
              f"per-seed={[round(x, 1) for x in means]} dead={dead} "
              f"wall={time.time() - t0:5.1f}s{rel}")


seeds = [1, 2, 3]
trial("A", 1000, 150, 350, 900, 80, 1, 0.85, seeds)
trial("B", 1100, 200, 400, 900, 150, 2, 0.85, seeds)
