"""Instrument dcc on a forced-high-band grid window: feedback spreads,
state counts, backoff and bottleneck activity."""
import statistics
import time

from importlib import resources

from signalsim import coordination as co
from signalsim.harness import run_world
from signalsim.scenario import apply_overrides, load_scenario, scenario_from_dict

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

text = (resources.files("signalsim.data") / "grid_4x6_pm_rush.toml").read_text()
raw = tomllib.loads(text)
raw["demand"]["sources"][0]["rate_windows"] = [[0, 900, 1056]]
raw["demand"]["band_windows"] = [[0, 900, "high"]]
raw["run"]["duration"] = 900
raw["run"]["warmup"] = 0

_orig_tick = co.dcc_tick
stats = {"calls": 0, "states": [], "fb_spread": [], "fb_mean": [], "gate_off": 0,
         "reverted": 0, "aug": 0}

def spy(state, sensed, g, tp, now, current_phase, green_elapsed):
    cf, cmd, out = _orig_tick(state, sensed, g, tp, now=now,
                              current_phase=current_phase, green_elapsed=green_elapsed)
    stats["calls"] += 1
    stats["states"].append(cf.n_states)
    if state.use_augmented:
        stats["aug"] += 1
        if now < state.gate_off_until:
            stats["gate_off"] += 1
    return cf, cmd, out

co.dcc_tick = spy
import signalsim.controllers as ctl
ctl.dcc_tick = spy

# capture feedback dicts by wrapping _phase_feedback
_orig_pf = co._phase_feedback
def pf_spy(state, g, tp, inp, now):
    fb = _orig_pf(state, g, tp, inp, now)
    if fb and now >= 300:
        vals = list(fb.values())
        stats["fb_mean"].append(statistics.mean(vals))
        stats["fb_spread"].append(max(vals) - min(vals))
    return fb
co._phase_feedback = pf_spy

sc = scenario_from_dict(raw, name="probe")
for kind in ("dcc", "dcc_bc", "baseline_sd"):
    for k in stats:
        stats[k] = [] if isinstance(stats[k], list) else 0
    t0 = time.perf_counter()
    b, w = run_world(sc, kind, seed=1)
    dt = time.perf_counter() - t0
    ns = stats["states"]
    fbm, fbs = stats["fb_mean"], stats["fb_spread"]
    print(f"{kind}: {dt:.1f}s mean={b.mean_delay():.2f} stops={sum(v.stops for v in b.vehicles)/b.n:.2f}")
    print(f"  states: mean={statistics.mean(ns):.0f} p95={sorted(ns)[int(0.95*len(ns))]} max={max(ns)}")
    if fbm:
        print(f"  fb mean-of-means={statistics.mean(fbm):.2f} spread: mean={statistics.mean(fbs):.2f} "
              f"p90={sorted(fbs)[int(0.9*len(fbs))]:.2f}")
    print(f"  gate_off_frac={stats['gate_off']/max(1,stats['aug']):.3f}")
