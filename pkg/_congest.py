"""Does congestion feedback separate dcc from baseline_sd where it should?"""
import time

from signalsim.harness import run_world
from signalsim.scenario import scenario_from_dict


def trial(main_we, main_ew, cross, link, lanes, seeds, duration=1800, warmup=300,
          max_green=60.0, straight_bias=0.8):
    raw = {
        "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": link,
                     "boundary_length": 150, "lanes": lanes,
                     "straight_bias": straight_bias},
        "demand": {
            "sources": [
                {"sides": ["west"], "rate_windows": [[0, duration, main_we]], "group": "main"},
                {"sides": ["east"], "rate_windows": [[0, duration, main_ew]], "group": "main"},
                {"sides": ["north", "south"], "rate_windows": [[0, duration, cross]], "group": "cross"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": max_green},
        "run": {"duration": duration, "warmup": warmup, "seed": 1},
    }
    print(f"--- main {main_we}/{main_ew} cross {cross} link {link} lanes {lanes} "
          f"bias {straight_bias}")
    for kind in ["cycle_adaptive", "baseline_sd", "dcc", "dcc_bc"]:
        means, stops = [], []
        t0 = time.time()
        dead = 0
        for seed in seeds:
            sc = scenario_from_dict(raw, name="congest")
            b, w = run_world(sc, kind, seed=seed)
            means.append(b.mean_delay())
            stops.append(b.mean_stops())
            dead += 1 if b.deadlock else 0
        wall = time.time() - t0
        m = sum(means) / len(means)
        s = sum(stops) / len(stops)
        print(f"  {kind:15s} mean={m:8.2f} stops={s:5.2f} "
              f"per-seed={[round(x, 1) for x in means]} dead={dead} wall={wall:5.1f}s")


seeds = [1, 2, 3]
trial(1400, 500, 500, 100, 2, seeds)
trial(1100, 400, 700, 80, 1, seeds)
