import cProfile, pstats, sys
from signalsim.scenario import load_scenario, apply_overrides, scenario_from_dict
from signalsim.controllers import build_controller
from signalsim.sim import World

import tomli as tomllib
raw = tomllib.loads(open("src/signalsim/data/grid_4x6_pm_rush.toml","rb").read().decode())
# jump straight into the high band to profile the worst case
raw = apply_overrides(raw, {"run.seed": 1})
for s in raw["demand"]["sources"]:
    s["rate_windows"] = [[0, 600, 1056]]
raw["demand"]["band_windows"] = [[0, 600, "high"]]
raw["run"]["duration"] = 600
raw["run"]["warmup"] = 0
sc = scenario_from_dict(raw, name="prof")
ctrl = build_controller(sc, "baseline_sd")
w = World(sc)

def run():
    for _ in range(300):
        w.step(ctrl)

cProfile.run("run()", "_prof.out")
p = pstats.Stats("_prof.out")
p.sort_stats("cumulative").print_stats(18)
