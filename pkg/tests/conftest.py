import pytest

from signalsim.clusters import Cluster, InputClusterSequence
from signalsim.scenario import make_grid, scenario_from_dict
from signalsim.scheduler import DelayParams, Mode


@pytest.fixture
def two_phase_params():
    return DelayParams(mode=Mode.BASELINE, feedback={}, changeover=5.0)


@pytest.fixture
def pair_graph():
    """1x2 grid: two intersections joined by one road each direction."""
    graph, priors, info = make_grid(rows=1, cols=2, link_length=100.0,
                                     boundary_length=150.0, lanes=1)
    return graph, priors, info


def make_input(by_phase: dict[int, list[tuple[float, float]]],
               sat: float = 0.5) -> InputClusterSequence:
    """Build an input from {phase: [(count, arr), ...]} with service at sat."""
    built = {}
    for p, specs in by_phase.items():
        built[p] = [
            Cluster(c, a, a + c / sat, origin=p) for c, a in specs
        ]
    return InputClusterSequence(by_phase=built, horizon=600.0)


def tiny_scenario(duration=300, warmup=0, seed=1, rate_main=500, rate_cross=200,
                  rows=1, cols=2, lanes=1, link=100.0, controller=None):
    raw = {
        "network": {"kind": "grid", "rows": rows, "cols": cols,
                     "link_length": link, "boundary_length": 150.0, "lanes": lanes},
        "demand": {
            "sources": [
                {"sides": ["west", "east"],
                 "rate_windows": [[0, duration, rate_main]], "group": "main"},
                {"sides": ["north", "south"],
                 "rate_windows": [[0, duration, rate_cross]], "group": "cross"},
            ],
        },
        "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
        "run": {"duration": duration, "warmup": warmup, "seed": seed},
    }
    if controller:
        raw["controller"] = controller
    return scenario_from_dict(raw, name="tiny")
