"""Probe the grid scenario against criterion 6/7 shapes on a few seeds."""
import sys
import time

from signalsim.harness import run_world
from signalsim.metrics import pooled_band_mean, pooled_mean_delay, pooled_mean_stops
from signalsim.scenario import apply_overrides, scenario_from_dict
from signalsim.service.handlers import resolve_scenario


def main(seeds, overrides=None, kinds=("cycle_adaptive", "baseline_sd", "dcc", "dcc_bc")):
    pooled = {}
    for kind in kinds:
        bundles = []
        t0 = time.time()
        dead = 0
        for seed in seeds:
            sc = resolve_scenario("grid_4x6_pm_rush")
            if overrides:
                sc = scenario_from_dict(apply_overrides(sc.raw, overrides), sc.name)
            b, _w = run_world(sc, kind, seed=seed)
            bundles.append(b)
            dead += 1 if b.deadlock else 0
        mean = pooled_mean_delay(bundles)
        stops = pooled_mean_stops(bundles)
        bands = {band: pooled_band_mean(bundles, band) for band in ("low", "medium", "high")}
        pooled[kind] = (mean, stops, bands)
        print(f"{kind:15s} mean={mean:7.2f} stops={stops:5.2f} "
              f"low={bands['low']:6.2f} med={bands['medium']:6.2f} high={bands['high']:7.2f} "
              f"dead={dead} wall={time.time()-t0:5.0f}s", flush=True)
    if "baseline_sd" in pooled and "dcc" in pooled:
        base, dcc = pooled["baseline_sd"], pooled["dcc"]
        print(f"order bc<=dcc<=base<=cyc: "
              f"{pooled.get('dcc_bc', dcc)[0]:.2f} <= {dcc[0]:.2f} <= {base[0]:.2f} <= "
              f"{pooled.get('cycle_adaptive', (float('inf'),))[0]:.2f}")
        print(f"high-band dcc/base = {dcc[2]['high'] / base[2]['high']:.3f} (<=0.90)  "
              f"low-band gap = {abs(dcc[2]['low'] - base[2]['low']) / base[2]['low']:.3f} (<=0.05)")
        if "cycle_adaptive" in pooled:
            cyc = pooled["cycle_adaptive"]
            print(f"stops dcc/cyc = {dcc[1] / cyc[1]:.3f}  bc/cyc = "
                  f"{pooled['dcc_bc'][1] / cyc[1]:.3f} (<=0.80)")


if __name__ == "__main__":
    seeds = [int(s) for s in sys.argv[1:]] or [1, 2, 3]
    main(seeds)
