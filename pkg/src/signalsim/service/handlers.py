"""In-process implementations behind both the HTTP endpoints and the CLI."""
from __future__ import annotations

import random
import time
from importlib import resources

from ..clusters import Cluster, InputClusterSequence
from ..harness import run_world
from ..oracle import brute_force_optimize
from ..scenario import Scenario, ScenarioError, load_scenario, validate_scenario
from ..scheduler import DelayParams, Mode, optimize


def shipped_scenario_names() -> list[str]:
    root = resources.files("signalsim.data")
    return sorted(
        p.name[: -len(".toml")]
        for p in root.iterdir()
        if p.name.endswith(".toml") and not p.name.startswith("experiment")
    )


def shipped_scenario_text(name: str) -> str:
    root = resources.files("signalsim.data")
    f = root / f"{name}.toml"
    if not f.is_file():
        raise ScenarioError(
            f"unknown scenario {name!r}; shipped: {', '.join(shipped_scenario_names())}"
        )
    return f.read_text()


def resolve_scenario(ref: str) -> Scenario:
    """Accept a shipped scenario name or an inline TOML document."""
    if "\n" not in ref and "=" not in ref:
        return load_scenario(shipped_scenario_text(ref))
    return load_scenario(ref)


def validate_text(text: str) -> list[str]:
    return validate_scenario(text)


def run_metrics(
    scenario: Scenario, controller: str, seed: int, duration: float | None = None
) -> dict:
    bundle, _world = run_world(scenario, controller, seed=seed, duration=duration)
    return {
        "scenario": bundle.scenario,
        "controller": bundle.controller,
        "seed": bundle.seed,
        "vehicles": bundle.n,
        "mean_delay": bundle.mean_delay(),
        "std_delay": bundle.std_delay(),
        "mean_stops": bundle.mean_stops(),
        "p95_delay": bundle.percentile(0.95),
        "deadlock": bundle.deadlock,
        "bands": {
            band: {
                "vehicles": n,
                "mean_delay": mean,
                "std_delay": std,
                "mean_stops": stops,
            }
            for band, (n, mean, std, stops) in bundle.band_stats().items()
        },
    }


def random_oracle_case(rng: random.Random) -> tuple[InputClusterSequence, DelayParams, int | None]:
    """One random small instance in the cross-check family.

    Two phases, up to four clusters each, integer arrivals in [0, 60],
    counts in [1, 8], changeover 5 s. Half the cases add a feedback table
    with a finite horizon, and a third start from a committed phase.
    """
    by_phase: dict[int, list[Cluster]] = {}
    for p in (1, 2):
        k = rng.randint(0, 4)
        arrs = sorted(rng.randint(0, 60) for _ in range(k))
        lst = []
        for arr in arrs:
            count = rng.randint(1, 8)
            lst.append(Cluster(count, float(arr), arr + count / 0.5, origin=p))
        by_phase[p] = lst
    inp = InputClusterSequence(by_phase=by_phase, horizon=300.0)
    if rng.random() < 0.5:
        params = DelayParams(
            mode=Mode.AUGMENTED,
            feedback={1: rng.uniform(0, 30), 2: rng.uniform(0, 30)},
            changeover=5.0,
            feedback_horizon=rng.uniform(20, 120),
        )
    else:
        params = DelayParams(mode=Mode.BASELINE, feedback={}, changeover=5.0)
    initial = rng.choice([None, None, 1, 2])
    return inp, params, initial


def oracle_suite(cases: int = 500, seed: int = 7) -> dict:
    """Compare the optimizer against exhaustive enumeration on random instances."""
    rng = random.Random(seed)
    mismatches = 0
    t0 = time.time()
    done = 0
    while done < cases:
        inp, params, initial = random_oracle_case(rng)
        if sum(len(v) for v in inp.by_phase.values()) == 0:
            continue
        done += 1
        got = optimize(inp, params, initial_phase=initial)
        want = brute_force_optimize(inp, params, initial_phase=initial)
        got_objective = 0.0
        for sc in got.scheduled:
            step = sc.local_delay
            if params.mode is Mode.AUGMENTED and sc.ast <= params.feedback_horizon:
                step += sc.cluster.count * params.phase_feedback(sc.phase)
            got_objective += step
        if (
            abs(got_objective - want.objective) > 1e-9
            or abs(got.total_local_delay - want.total_local_delay) > 1e-9
        ):
            mismatches += 1
    return {
        "cases": done,
        "mismatches": mismatches,
        "ok": mismatches == 0,
        "runtime_s": time.time() - t0,
    }
