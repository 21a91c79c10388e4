"""Sweep guard-compliant asymmetric shapes for criterion 4 separation."""
import time

from signalsim.harness import run_world
from signalsim.scenario import scenario_from_dict


def raw_of(west, cross1_side, east, cross2_side, link, bias, duration, warmup,
           left_scale, max_green=60.0):
    return {
        "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": link,
                     "boundary_length": 150, "lanes": 1, "straight_bias": bias},
        "demand": {
            "group_scale": {"left": left_scale},
            "sources": [
                {"sides": ["west"], "rate_windows": [[0, duration, west]], "group": "left"},
                {"sides": ["north", "south"], "nodes": [1],
                 "rate_windows": [[0, duration, cross1_side]], "group": "left"},
                {"sides": ["east"], "rate_windows": [[0, duration, east]], "group": "right"},
                {"sides": ["north", "south"], "nodes": [2],
                 "rate_windows": [[0, duration, cross2_side]], "group": "right"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": max_green},
        "run": {"duration": duration, "warmup": warmup, "seed": 1, "max_volume": 2800},
    }


def probe(tag, cfg, seeds):
    total_high = cfg["west"] * cfg["ls"] + 2 * cfg["c1"] * cfg["ls"] + cfg["east"] + 2 * cfg["c2"]
    raw = raw_of(cfg["west"], cfg["c1"], cfg["east"], cfg["c2"], cfg["link"],
                 cfg.get("bias", 0.85), cfg.get("dur", 1800), cfg.get("warm", 450),
                 cfg["ls"], cfg.get("maxg", 60.0))
    out = {}
    for kind in ["baseline_sd", "dcc", "dcc_bc", "cycle_adaptive"]:
        means, dead = [], 0
        for seed in seeds:
            sc = scenario_from_dict(raw, name=tag)
            b, _w = run_world(sc, kind, seed=seed)
            means.append(b.mean_delay())
            dead += 1 if b.deadlock else 0
        out[kind] = sum(means) / len(means)
        if dead:
            out[kind + "_dead"] = dead
    rb = out["dcc"] / out["baseline_sd"]
    rc = out["dcc"] / out["cycle_adaptive"]
    print(f"{tag}: high_total={total_high:.0f} base={out['baseline_sd']:7.2f} "
          f"dcc={out['dcc']:7.2f} bc={out['dcc_bc']:7.2f} cyc={out['cycle_adaptive']:7.2f} "
          f"dcc/base={rb:.3f} dcc/cyc={rc:.3f}")
    return out


if __name__ == "__main__":
    seeds = [1, 2, 3, 4]
    t0 = time.time()
    probe("P1", {"west": 643, "c1": 71, "east": 150, "c2": 700, "link": 80, "ls": 1.4}, seeds)
    probe("P2", {"west": 643, "c1": 71, "east": 150, "c2": 700, "link": 60, "ls": 1.4}, seeds)
    probe("P3", {"west": 714, "c1": 100, "east": 100, "c2": 600, "link": 60, "ls": 1.4}, seeds)
    probe("P4", {"west": 643, "c1": 71, "east": 150, "c2": 700, "link": 80, "ls": 1.4,
                 "dur": 2400, "warm": 600}, seeds)
    print(f"wall {time.time() - t0:.0f}s")
