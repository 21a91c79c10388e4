"""Tune the two-intersection scenarios against criteria 4 and 5 margins."""
import time

from signalsim.harness import run_world
from signalsim.scenario import scenario_from_dict


def asym_raw(left_scale, duration=2400, warmup=600):
    # left = node 1 (west main entry + its cross street), right = node 2
    return {
        "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": 80,
                     "boundary_length": 150, "lanes": 1, "straight_bias": 0.85},
        "demand": {
            "group_scale": {"left": left_scale},
            "sources": [
                {"sides": ["west"], "rate_windows": [[0, duration, 714]], "group": "left"},
                {"sides": ["north", "south"], "nodes": [1],
                 "rate_windows": [[0, duration, 250]], "group": "left"},
                {"sides": ["east"], "rate_windows": [[0, duration, 150]], "group": "right"},
                {"sides": ["north", "south"], "nodes": [2],
                 "rate_windows": [[0, duration, 450]], "group": "right"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
        "run": {"duration": duration, "warmup": warmup, "seed": 1, "max_volume": 2800},
    }


def sym_raw(scale, duration=2400, warmup=600):
    return {
        "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": 80,
                     "boundary_length": 150, "lanes": 1, "straight_bias": 0.85},
        "demand": {
            "scale": scale,
            "sources": [
                {"sides": ["west", "east"], "rate_windows": [[0, duration, 500]], "group": "main"},
                {"sides": ["north", "south"], "rate_windows": [[0, duration, 250]], "group": "cross"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
        "run": {"duration": duration, "warmup": warmup, "seed": 1, "max_volume": 2800},
    }


def bench(tag, raw, kinds, seeds):
    res = {}
    for kind in kinds:
        means, dead = [], 0
        t0 = time.time()
        for seed in seeds:
            sc = scenario_from_dict(raw, name=tag)
            b, w = run_world(sc, kind, seed=seed)
            means.append(b.mean_delay())
            dead += 1 if b.deadlock else 0
        m = sum(means) / len(means)
        res[kind] = m
        print(f"  {kind:15s} mean={m:8.2f} per-seed={[round(x, 1) for x in means]} "
              f"dead={dead} wall={time.time() - t0:5.1f}s")
    return res


seeds = list(range(1, 11))
print("=== asymmetric, left x1.4 (criterion 4 shape) ===")
r = bench("asym14", asym_raw(1.4), ["cycle_adaptive", "baseline_sd", "dcc", "dcc_bc"], seeds)
print(f"  dcc/baseline = {r['dcc'] / r['baseline_sd']:.3f} (need <=0.95)  "
      f"dcc/cycle = {r['dcc'] / r['cycle_adaptive']:.3f} (need <=0.90)")

print("=== symmetric, scale 1.0 lowest step (criterion 5 shape) ===")
r = bench("sym10", sym_raw(1.0), ["baseline_sd", "dcc"], seeds)
print(f"  |dcc-baseline|/baseline = {abs(r['dcc'] - r['baseline_sd']) / r['baseline_sd']:.3f} "
      f"(need <=0.05)")
