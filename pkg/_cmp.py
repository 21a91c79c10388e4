"""Seed-1 grid comparison across the four controllers."""
import sys
import time

from signalsim.harness import run_world
from signalsim.scenario import load_scenario

sc = load_scenario("src/signalsim/data/grid_4x6_pm_rush.toml")
seed = int(sys.argv[1]) if len(sys.argv) > 1 else 1

for kind in ["dcc_with_bc", "dcc", "baseline_sd", "cycle_adaptive"]:
    t0 = time.perf_counter()
    b, w = run_world(sc, kind, seed=seed)
    dt = time.perf_counter() - t0
    bands = {bs.band: bs for bs in b.band_stats()}
    per = " ".join(
        f"{name}=({bands[name].mean_delay:.2f},{bands[name].mean_stops:.2f},n={bands[name].n})"
        for name in ["low", "medium", "high"]
        if name in bands
    )
    print(
        f"{kind:15s} {dt:6.1f}s n={b.n:5d} mean={b.mean_delay():7.2f} "
        f"stops={b.mean_stops():.3f} p90={b.percentile(90):.1f} "
        f"deadlock={w.deadlock} | {per}",
        flush=True,
    )
