"""Five-controller comparison on an inline 1x2 grid, with switch-rate stats."""
import time

from signalsim.controllers import build_controller
from signalsim.harness import run_world
from signalsim.metrics import collect
from signalsim.scenario import scenario_from_dict

RAW = {
    "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": 150,
                 "boundary_length": 150, "lanes": 2},
    "demand": {
        "sources": [
            {"sides": ["west", "east"], "rate_windows": [[0, 1200, 900]], "group": "main"},
            {"sides": ["north", "south"], "rate_windows": [[0, 1200, 350]], "group": "cross"},
        ],
    },
    "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
    "run": {"duration": 1200, "warmup": 300, "seed": 3},
}

for kind in ["fixed_time", "cycle_adaptive", "baseline_sd", "dcc", "dcc_bc"]:
    sc = scenario_from_dict(RAW, name="smoke")
    t0 = time.time()
    bundle, world = run_world(sc, kind, check_invariants=True, record_commands=True)
    dt = time.time() - t0
    switches = sum(1 for (_t, _i, cmd) in world.command_trace if cmd.action == "switch")
    greens = 1200 * 2 / max(switches, 1)
    print(f"{kind:15s} mean={bundle.mean_delay():7.2f} p95={bundle.percentile(0.95):7.2f} "
          f"stops={bundle.mean_stops():5.2f} n={len(bundle.vehicles):4d} "
          f"switches={switches:4d} meangreen={greens:5.1f} wall={dt:5.1f}s")
