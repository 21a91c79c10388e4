"""Per-vehicle metrics, aggregates, and their CSV encodings.

Delay is total queued waiting along the route. Vehicles entering during the
warmup window are excluded; vehicles still in the network at the end of the
run are included with the delay accrued so far (an empty exited field in
the CSV). All floats are written with fixed six-decimal formatting so that
repeated runs produce byte-identical files.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path


@dataclass(slots=True)
class VehicleMetric:
    id: int
    entered: float
    exited: float | None
    delay: float
    stops: int
    band: str


@dataclass
class MetricsBundle:
    scenario: str
    controller: str
    seed: int
    vehicles: list[VehicleMetric]
    deadlock: bool = False

    @property
    def n(self) -> int:
        return len(self.vehicles)

    def mean_delay(self) -> float:
        return sum(v.delay for v in self.vehicles) / self.n if self.n else 0.0

    def std_delay(self) -> float:
        if self.n < 2:
            return 0.0
        m = self.mean_delay()
        return math.sqrt(sum((v.delay - m) ** 2 for v in self.vehicles) / self.n)

    def mean_stops(self) -> float:
        return sum(v.stops for v in self.vehicles) / self.n if self.n else 0.0

    def percentile(self, q: float) -> float:
        if not self.vehicles:
            return 0.0
        delays = sorted(v.delay for v in self.vehicles)
        rank = max(1, math.ceil(q * len(delays)))
        return delays[rank - 1]

    def cdf(self) -> list[tuple[int, float]]:
        """Fraction of vehicles with delay <= d, at 1 s resolution."""
        if not self.vehicles:
            return []
        delays = sorted(v.delay for v in self.vehicles)
        top = int(math.ceil(delays[-1]))
        out = []
        j = 0
        for d in range(top + 1):
            while j < len(delays) and delays[j] <= d:
                j += 1
            out.append((d, j / len(delays)))
        return out

    def band_stats(self) -> dict[str, tuple[int, float, float, float]]:
        """band -> (n, mean delay, std delay, mean stops)."""
        groups: dict[str, list[VehicleMetric]] = {}
        for v in self.vehicles:
            groups.setdefault(v.band, []).append(v)
        out = {}
        for band in sorted(groups):
            vs = groups[band]
            m = sum(v.delay for v in vs) / len(vs)
            var = sum((v.delay - m) ** 2 for v in vs) / len(vs)
            out[band] = (len(vs), m, math.sqrt(var), sum(v.stops for v in vs) / len(vs))
        return out


def collect(world, scenario_name: str, controller: str, seed: int) -> MetricsBundle:
    """Build the bundle from a finished world, applying the warmup cut."""
    warmup = world.scenario.run.warmup
    vehicles = [
        VehicleMetric(
            id=v.id,
            entered=v.entered_at,
            exited=v.exited_at,
            delay=v.wait,
            stops=v.stops,
            band=v.band,
        )
        for v in world.vehicles
        if v.entered_at >= warmup
    ]
    return MetricsBundle(
        scenario=scenario_name,
        controller=controller,
        seed=seed,
        vehicles=vehicles,
        deadlock=world.deadlock,
    )


def _f(x: float) -> str:
    return f"{x:.6f}"


def write_per_vehicle(bundle: MetricsBundle, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["id", "entered", "exited", "delay", "stops", "band"])
        for v in bundle.vehicles:
            w.writerow(
                [v.id, _f(v.entered), _f(v.exited) if v.exited is not None else "",
                 _f(v.delay), v.stops, v.band]
            )


def read_per_vehicle(path: Path) -> list[VehicleMetric]:
    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(
                VehicleMetric(
                    id=int(row["id"]),
                    entered=float(row["entered"]),
                    exited=float(row["exited"]) if row["exited"] else None,
                    delay=float(row["delay"]),
                    stops=int(row["stops"]),
                    band=row["band"],
                )
            )
    return out


def write_aggregate(bundles: list[MetricsBundle], path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scenario", "controller", "seed", "n", "mean", "std",
                    "stops", "p50", "p90", "deadlock"])
        for b in bundles:
            w.writerow(
                [b.scenario, b.controller, b.seed, b.n, _f(b.mean_delay()),
                 _f(b.std_delay()), _f(b.mean_stops()), _f(b.percentile(0.5)),
                 _f(b.percentile(0.9)), int(b.deadlock)]
            )


def write_cdf(bundle: MetricsBundle, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delay_s", "fraction"])
        for d, frac in bundle.cdf():
            w.writerow([d, _f(frac)])


def write_bands(bundle: MetricsBundle, path: Path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["band", "n", "mean", "std", "stops"])
        for band, (n, mean, std, stops) in bundle.band_stats().items():
            w.writerow([band, n, _f(mean), _f(std), _f(stops)])


def pooled_mean_delay(bundles: list[MetricsBundle]) -> float:
    """Vehicle-weighted mean over several runs."""
    total = sum(v.delay for b in bundles for v in b.vehicles)
    n = sum(b.n for b in bundles)
    return total / n if n else 0.0


def pooled_mean_stops(bundles: list[MetricsBundle]) -> float:
    total = sum(v.stops for b in bundles for v in b.vehicles)
    n = sum(b.n for b in bundles)
    return total / n if n else 0.0


def pooled_band_mean(bundles: list[MetricsBundle], band: str) -> float:
    delays = [v.delay for b in bundles for v in b.vehicles if v.band == band]
    return sum(delays) / len(delays) if delays else 0.0
