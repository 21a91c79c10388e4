"""Full grid dcc run: per-band runtime, state counts, gate backoff share."""
import statistics
import time
from importlib import resources

from signalsim import coordination as co
from signalsim.harness import run_world
from signalsim.scenario import load_scenario

text = (resources.files("signalsim.data") / "grid_4x6_pm_rush.toml").read_text()
sc = load_scenario(text)

by_band = {}
def band_of(t):
    if t < 900: return "low"
    if t < 1800: return "medium"
    return "high"

_orig_tick = co.dcc_tick
def spy(state, sensed, g, tp, now, current_phase, green_elapsed):
    t0 = time.perf_counter()
    cf, cmd, out = _orig_tick(state, sensed, g, tp, now=now,
                              current_phase=current_phase, green_elapsed=green_elapsed)
    dt = time.perf_counter() - t0
    b = by_band.setdefault(band_of(now), {"n": 0, "time": 0.0, "states": [], "off": 0})
    b["n"] += 1
    b["time"] += dt
    b["states"].append(cf.n_states)
    if state.use_augmented and now < state.gate_off_until:
        b["off"] += 1
    return cf, cmd, out

co.dcc_tick = spy
import signalsim.controllers as ctl
ctl.dcc_tick = spy

t0 = time.perf_counter()
b, w = run_world(sc, "dcc", seed=1)
print(f"dcc total {time.perf_counter()-t0:.1f}s mean={b.mean_delay():.2f}")
for band in ("low", "medium", "high"):
    s = by_band[band]
    ns = sorted(s["states"])
    print(f"  {band}: ticks={s['n']} time={s['time']:.1f}s "
          f"states mean={statistics.mean(ns):.0f} p95={ns[int(0.95*len(ns))]} "
          f"max={ns[-1]} gate_off_frac={s['off']/s['n']:.3f}")
