"""Batch experimentation: run cells, pool seeds, write report files.

An experiment is (scenario x controllers x seeds), optionally swept over
named variants that override scenario keys by dotted path. Cells run
independently; one cell's failure is recorded and the rest continue.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from . import metrics
from .controllers import build_controller
from .metrics import MetricsBundle, collect
from .scenario import Scenario, apply_overrides, load_scenario, scenario_from_dict
from .sim import World


@dataclass
class ExperimentSpec:
    scenario_path: str
    controllers: list[str]
    seeds: list[int] = field(default_factory=lambda: list(range(1, 11)))
    duration: float | None = None
    out_dir: str = "results"
    variants: list[tuple[str, dict]] = field(default_factory=list)

    def __post_init__(self):
        if not self.seeds:
            raise ValueError("experiment needs at least one seed")


def load_experiment(path: str | Path) -> ExperimentSpec:
    raw = tomllib.loads(Path(path).read_text())
    exp = raw.get("experiment", {})
    if "scenario" not in exp:
        raise ValueError("experiment file needs experiment.scenario")
    scenario_path = exp["scenario"]
    if not Path(scenario_path).is_absolute():
        scenario_path = str(Path(path).parent / scenario_path)
    variants = [
        (v["name"], dict(v.get("overrides", {}))) for v in exp.get("variants", [])
    ]
    return ExperimentSpec(
        scenario_path=scenario_path,
        controllers=list(exp.get("controllers", ["baseline_sd"])),
        seeds=[int(s) for s in exp.get("seeds", range(1, 11))],
        duration=exp.get("duration"),
        out_dir=exp.get("out", "results"),
        variants=variants,
    )


def run(
    scenario: Scenario,
    controller_kind: str,
    seed: int | None = None,
    duration: float | None = None,
    check_invariants: bool = False,
    record_commands: bool = False,
) -> MetricsBundle:
    bundle, _world = run_world(
        scenario, controller_kind, seed, duration, check_invariants, record_commands
    )
    return bundle


def run_world(
    scenario: Scenario,
    controller_kind: str,
    seed: int | None = None,
    duration: float | None = None,
    check_invariants: bool = False,
    record_commands: bool = False,
) -> tuple[MetricsBundle, World]:
    """Run one cell and return both the metrics and the final world state."""
    if seed is not None and seed != scenario.run.seed:
        raw = apply_overrides(scenario.raw, {"run.seed": seed})
        scenario = scenario_from_dict(raw, name=scenario.name)
    if duration is not None and duration != scenario.run.duration:
        raw = apply_overrides(scenario.raw, {"run.duration": duration})
        scenario = scenario_from_dict(raw, name=scenario.name)
    controller = build_controller(scenario, controller_kind)
    world = World(
        scenario, check_invariants=check_invariants, record_commands=record_commands
    )
    ticks = int(round(scenario.run.duration / scenario.run.dt))
    for _ in range(ticks):
        world.step(controller)
        if world.deadlock:
            break
    bundle = collect(world, scenario.name, controller_kind, scenario.run.seed)
    return bundle, world


def _write_comparison(rows: list[dict], bands: list[str], path: Path) -> None:
    cols = ["variant", "controller", "seeds", "n", "mean", "std", "stops", "p50", "p90"]
    cols += [f"mean_{b}" for b in bands]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(cols)
        for r in rows:
            w.writerow([r.get(c, "") for c in cols])


def run_experiment(spec: ExperimentSpec) -> dict:
    """Run every cell, write per-run and pooled report files.

    Returns {(variant, controller): [MetricsBundle per seed]} with failed
    cells absent (their error strings are written to failures.csv).
    """
    base_raw = load_scenario(spec.scenario_path).raw
    out_root = Path(spec.out_dir)
    out_root.mkdir(parents=True, exist_ok=True)
    variants = spec.variants or [("base", {})]
    results: dict[tuple[str, str], list[MetricsBundle]] = {}
    failures: list[tuple[str, str, int, str]] = []
    band_labels: list[str] = []

    for vname, overrides in variants:
        raw = apply_overrides(base_raw, overrides)
        if spec.duration is not None:
            raw = apply_overrides(raw, {"run.duration": float(spec.duration)})
        for controller in spec.controllers:
            bundles = []
            for seed in spec.seeds:
                cell_raw = apply_overrides(raw, {"run.seed": int(seed)})
                try:
                    scenario = scenario_from_dict(cell_raw, name=Path(spec.scenario_path).stem)
                    bundle = run(scenario, controller)
                except Exception as e:  # a failed cell must not stop the grid
                    failures.append((vname, controller, seed, f"{type(e).__name__}: {e}"))
                    continue
                cell_dir = out_root / vname / controller / f"seed_{seed:02d}"
                cell_dir.mkdir(parents=True, exist_ok=True)
                metrics.write_per_vehicle(bundle, cell_dir / "per_vehicle.csv")
                metrics.write_cdf(bundle, cell_dir / "cdf.csv")
                metrics.write_bands(bundle, cell_dir / "bands.csv")
                bundles.append(bundle)
                for band in bundle.band_stats():
                    if band not in band_labels:
                        band_labels.append(band)
            if bundles:
                results[(vname, controller)] = bundles
                metrics.write_aggregate(bundles, out_root / vname / controller / "runs.csv")

    rows = []
    for (vname, controller), bundles in results.items():
        merged = MetricsBundle(
            scenario=bundles[0].scenario,
            controller=controller,
            seed=-1,
            vehicles=[v for b in bundles for v in b.vehicles],
            deadlock=any(b.deadlock for b in bundles),
        )
        row = {
            "variant": vname,
            "controller": controller,
            "seeds": len(bundles),
            "n": merged.n,
            "mean": f"{merged.mean_delay():.6f}",
            "std": f"{merged.std_delay():.6f}",
            "stops": f"{merged.mean_stops():.6f}",
            "p50": f"{merged.percentile(0.5):.6f}",
            "p90": f"{merged.percentile(0.9):.6f}",
        }
        for band, (_n, mean, _std, _stops) in merged.band_stats().items():
            row[f"mean_{band}"] = f"{mean:.6f}"
        rows.append(row)
    _write_comparison(rows, band_labels, out_root / "comparison.csv")
    if failures:
        with open(out_root / "failures.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["variant", "controller", "seed", "error"])
            w.writerows(failures)
    return results
