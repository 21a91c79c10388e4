import tomli as tomllib
from collections import Counter
from signalsim.scenario import scenario_from_dict, apply_overrides
from signalsim.controllers import build_controller
from signalsim.sim import World
import signalsim.coordination as coord
import signalsim.scheduler as sched

raw = tomllib.loads(open("src/signalsim/data/grid_4x6_pm_rush.toml","rb").read().decode())
for s in raw["demand"]["sources"]:
    s["rate_windows"] = [[0, 600, 1056]]
raw["demand"]["band_windows"] = [[0, 600, "high"]]
raw["run"]["duration"] = 600
raw["run"]["warmup"] = 0
sc = scenario_from_dict(raw, name="instr")

sizes = Counter()
max_seen = [0, None]
orig = sched.optimize
def spy(inp, params, initial_phase=None):
    shape = tuple(sorted(len(l) for l in inp.by_phase.values()))
    sizes[shape] += 1
    n = sum(shape)
    if n > max_seen[0]:
        max_seen[0] = n
        max_seen[1] = shape
    return orig(inp, params, initial_phase)
sched.optimize = spy
coord.optimize = spy

ctrl = build_controller(sc, "baseline_sd")
w = World(sc)
for _ in range(240):
    w.step(ctrl)
print("top input shapes (per-phase cluster counts):")
for shape, n in sizes.most_common(12):
    print(f"  {shape}: {n}")
print("max total:", max_seen)
print("calls:", sum(sizes.values()))
