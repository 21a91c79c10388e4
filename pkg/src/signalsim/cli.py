"""Command line front end: one-off runs, experiments, linting, oracle checks.

Thin wrapper over the same handlers the HTTP service uses. Exit codes:
0 success, 1 invalid input, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

from .controllers import CONTROLLER_KINDS, ScheduleDrivenController, build_controller
from .harness import load_experiment, run_experiment, run_world
from .metrics import collect, write_aggregate, write_bands, write_cdf, write_per_vehicle
from .scenario import ScenarioError, apply_overrides, load_scenario, scenario_from_dict
from .scheduler import StateSpaceOverflow
from .service import handlers
from .sim import World


def _load_scenario_arg(ref: str):
    p = Path(ref)
    if p.exists():
        return load_scenario(p)
    return handlers.resolve_scenario(ref)


def _cmd_run(args) -> int:
    try:
        scenario = _load_scenario_arg(args.scenario)
    except (ScenarioError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.controller not in CONTROLLER_KINDS:
        print(
            f"error: unknown controller {args.controller!r}, "
            f"expected one of {', '.join(CONTROLLER_KINDS)}",
            file=sys.stderr,
        )
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        if args.debug_traces:
            raw = dict(scenario.raw)
            overrides = {"run.seed": args.seed}
            if args.duration is not None:
                overrides["run.duration"] = args.duration
            scenario = scenario_from_dict(apply_overrides(raw, overrides), scenario.name)
            controller = build_controller(scenario, args.controller)
            if isinstance(controller, ScheduleDrivenController):
                controller.schedule_rows = []
            world = World(scenario, record_commands=True)
            ticks = int(round(scenario.run.duration / scenario.run.dt))
            for _ in range(ticks):
                world.step(controller)
                if world.deadlock:
                    break
            bundle = collect(world, scenario.name, args.controller, args.seed)
            _write_traces(world, controller, out)
        else:
            bundle, _world = run_world(
                scenario, args.controller, seed=args.seed, duration=args.duration
            )
    except StateSpaceOverflow as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    write_per_vehicle(bundle, out / "per_vehicle.csv")
    write_aggregate([bundle], out / "aggregate.csv")
    write_cdf(bundle, out / "cdf.csv")
    write_bands(bundle, out / "bands.csv")
    print(
        f"{bundle.scenario} {bundle.controller} seed={bundle.seed}: "
        f"{bundle.n} vehicles, mean delay {bundle.mean_delay():.2f} s, "
        f"mean stops {bundle.mean_stops():.2f}"
        + (" [DEADLOCK]" if bundle.deadlock else "")
    )
    if bundle.deadlock:
        return 2
    return 0


def _write_traces(world: World, controller, out: Path) -> None:
    with open(out / "commands.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "intersection", "action", "phase"])
        for t, i, cmd in world.command_trace or []:
            w.writerow([t, i, cmd.action, "" if cmd.phase is None else cmd.phase])
    rows = getattr(controller, "schedule_rows", None)
    if rows is not None:
        with open(out / "schedules.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(
                ["t", "intersection", "pos", "phase", "count", "arr", "ast",
                 "local_delay", "augmented_delay"]
            )
            for row in rows:
                w.writerow(row)


def _cmd_experiment(args) -> int:
    try:
        spec = load_experiment(Path(args.spec))
    except (ScenarioError, OSError, KeyError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    if args.out:
        spec.out_dir = args.out
    results = run_experiment(spec)
    cells = sum(len(v) for v in results.values())
    out_root = Path(spec.out_dir)
    failures = out_root / "failures.csv"
    print(f"{cells} runs -> {out_root}")
    if failures.exists() and failures.stat().st_size > 0:
        with open(failures, newline="") as fh:
            n_failed = max(0, sum(1 for _ in fh) - 1)
        if n_failed:
            print(f"{n_failed} cells failed; see {failures}", file=sys.stderr)
            return 2
    return 0


def _cmd_validate(args) -> int:
    try:
        text = Path(args.scenario).read_text()
    except OSError:
        try:
            text = handlers.shipped_scenario_text(args.scenario)
        except ScenarioError as e:
            print(f"error: {e}", file=sys.stderr)
            return 1
    problems = handlers.validate_text(text)
    for p in problems:
        print(p)
    if problems:
        return 1
    print("ok")
    return 0


def _cmd_oracle(args) -> int:
    res = handlers.oracle_suite(cases=args.cases, seed=args.seed)
    print(
        f"{res['cases']} cases, {res['mismatches']} mismatches, "
        f"{res['runtime_s']:.1f}s"
    )
    return 0 if res["ok"] else 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="signalsim")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one scenario with one controller")
    p_run.add_argument("--scenario", required=True, help="scenario file or shipped name")
    p_run.add_argument("--controller", default="baseline_sd")
    p_run.add_argument("--seed", type=int, default=1)
    p_run.add_argument("--duration", type=float, default=None)
    p_run.add_argument("--out", default="out")
    p_run.add_argument("--debug-traces", action="store_true",
                       help="also write command and schedule traces")
    p_run.set_defaults(func=_cmd_run)

    p_exp = sub.add_parser("experiment", help="run an experiment spec file")
    p_exp.add_argument("spec", help="experiment TOML path")
    p_exp.add_argument("--out", default=None)
    p_exp.set_defaults(func=_cmd_experiment)

    p_val = sub.add_parser("validate", help="lint a scenario file")
    p_val.add_argument("scenario", help="scenario file or shipped name")
    p_val.set_defaults(func=_cmd_validate)

    p_or = sub.add_parser("oracle", help="cross-check the optimizer against enumeration")
    p_or.add_argument("--cases", type=int, default=500)
    p_or.add_argument("--seed", type=int, default=7)
    p_or.set_defaults(func=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
