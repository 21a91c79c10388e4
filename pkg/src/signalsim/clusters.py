"""Vehicle cluster representation and flow aggregation.

Approaching traffic is compressed into clusters (count, arr, dep): the
schedulable job unit. This module builds road cluster sequences from sensed
arrivals, combines them into the per-phase input a scheduler consumes, and
splits scheduled outflows into the fractional projections sent downstream.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Iterable, Mapping, Sequence

if TYPE_CHECKING:
    from .network import NetworkGraph, Phase
    from .scheduler import ControlFlow

# Vehicles closer together than this share a cluster (~saturation headway).
DEFAULT_GAP_THRESHOLD = 2.5
# Projected fragments below this weight are discarded to stop unbounded
# fragmentation across multi-hop projection.
EPS_COUNT = 0.05


@dataclass(slots=True)
class Cluster:
    """An aggregated platoon or queue: (count, arr, dep).

    count may be fractional for projected clusters (turning-proportion
    weighting). arr is the stop-line arrival of the head, relative to now;
    dep is the departure of the tail if service starts immediately.
    """

    count: float
    arr: float
    dep: float
    origin: int  # RoadId the cluster arrives on
    source: int | None = None  # upstream IntersectionId if projected, else local

    def __post_init__(self):
        if self.count <= 0:
            raise ValueError(f"cluster count must be positive, got {self.count}")
        if not (0 <= self.arr <= self.dep):
            raise ValueError(f"cluster needs 0 <= arr <= dep, got arr={self.arr} dep={self.dep}")

    @property
    def duration(self) -> float:
        return self.dep - self.arr


@dataclass(slots=True)
class RoadClusterSequence:
    """Clusters of one entry road, ordered by increasing arr, non-overlapping."""

    road: int
    clusters: list[Cluster] = field(default_factory=list)

    def validate(self) -> None:
        prev = None
        for c in self.clusters:
            if c.origin != self.road:
                raise ValueError(f"cluster origin {c.origin} not on road {self.road}")
            if prev is not None:
                if c.arr < prev.arr:
                    raise ValueError("clusters not ordered by arr")
                if c.arr < prev.dep:
                    raise ValueError("clusters overlap")
            prev = c


@dataclass(slots=True)
class InputClusterSequence:
    """Per-phase cluster lists over a common horizon: the scheduler's input."""

    by_phase: dict[int, list[Cluster]]
    horizon: float

    def total_count(self) -> float:
        return sum(c.count for lst in self.by_phase.values() for c in lst)

    def is_empty(self) -> bool:
        return all(not lst for lst in self.by_phase.values())


@dataclass(slots=True)
class OutflowProjectionMsg:
    """Scheduled departures forwarded to one downstream neighbor."""

    src: int
    dst: int
    issued_at: int
    clusters: list[Cluster]

    def rows(self) -> list[tuple]:
        """Flat records for the message-trace CSV."""
        return [
            (self.issued_at, self.src, self.dst, "outflow", c.origin, c.count, c.arr, c.dep)
            for c in self.clusters
        ]


def clusterize(
    road: int,
    arrivals: Sequence[tuple[float, bool]],
    gap_threshold: float = DEFAULT_GAP_THRESHOLD,
    sat_flow: float = 0.5,
) -> RoadClusterSequence:
    """Group predicted stop-line arrivals on one road into clusters.

    arrivals are (predicted arrival s, queued flag) sorted ascending; queued
    vehicles count as arrival 0 and form the head cluster. A vehicle joins
    the previous cluster when its gap is within gap_threshold, or when it
    would arrive before the previous cluster finished discharging (the queue
    absorbs it). dep = arr + count / sat_flow.
    """
    if gap_threshold <= 0:
        raise ValueError("gap_threshold must be positive")
    if sat_flow <= 0:
        raise ValueError("sat_flow must be positive")
    seq = RoadClusterSequence(road=road)
    count = 0.0
    arr = 0.0
    last_s = 0.0
    for s, queued in arrivals:
        s = 0.0 if queued else s
        if count == 0.0:
            count, arr, last_s = 1.0, s, s
            continue
        dep = arr + count / sat_flow
        if (s - last_s) <= gap_threshold or s < dep:
            count += 1.0
            last_s = s
        else:
            seq.clusters.append(Cluster(count, arr, arr + count / sat_flow, road))
            count, arr, last_s = 1.0, s, s
    if count > 0.0:
        seq.clusters.append(Cluster(count, arr, arr + count / sat_flow, road))
    return seq


def coalesce(
    clusters: Iterable[Cluster], gap_threshold: float = DEFAULT_GAP_THRESHOLD
) -> list[Cluster]:
    """Merge one road's clusters wherever the inter-cluster gap is within
    gap_threshold (or they overlap outright).

    Aggregation for planning input: counts and service durations add, the
    head keeps the earliest arrival. Green-time demand is conserved even
    where fragments overlapped, which keeps the schedule state space bounded
    when projected inflow arrives as many small fragments.
    """
    out: list[Cluster] = []
    for c in sorted(clusters, key=lambda c: (c.arr, c.dep)):
        if out and c.arr <= out[-1].dep + gap_threshold:
            p = out[-1]
            dur = p.duration + c.duration
            out[-1] = Cluster(p.count + c.count, p.arr, p.arr + dur, p.origin, p.source)
        else:
            out.append(c)
    return out


def merge_by_phase(
    seqs: Iterable[RoadClusterSequence],
    phases: Sequence["Phase"],
    horizon: float,
) -> InputClusterSequence:
    """Combine road sequences into per-phase lists sorted by arr.

    Several sequences may share a road (locally sensed plus projected
    inflow); per-road arrival order is preserved and ties break on
    (road id, position) for determinism. Clusters arriving past the horizon
    are dropped.
    """
    road_to_phase: dict[int, int] = {}
    for ph in phases:
        for entry, _exit in ph.movements:
            road_to_phase[entry] = ph.id
    by_phase: dict[int, list[tuple[float, int, int, Cluster]]] = {ph.id: [] for ph in phases}
    road_pos: dict[int, int] = {}
    for seq in seqs:
        phase_id = road_to_phase.get(seq.road)
        if phase_id is None:
            raise ValueError(f"road {seq.road} is not covered by any phase")
        for c in seq.clusters:
            if c.arr > horizon:
                continue
            pos = road_pos.get(seq.road, 0)
            road_pos[seq.road] = pos + 1
            by_phase[phase_id].append((c.arr, seq.road, pos, c))
    out: dict[int, list[Cluster]] = {}
    for phase_id, tagged in by_phase.items():
        tagged.sort(key=lambda t: (t[0], t[1], t[2]))
        out[phase_id] = [t[3] for t in tagged]
    return InputClusterSequence(by_phase=out, horizon=horizon)


def project_outflow(
    cf: "ControlFlow",
    g: "NetworkGraph",
    i: int,
    zeta: Mapping[tuple[int, int], float],
    horizon: float,
    issued_at: int = 0,
    eps_count: float = EPS_COUNT,
) -> list[OutflowProjectionMsg]:
    """Split a schedule's served clusters into downstream projections.

    Each scheduled cluster is weighted by the turning proportion toward every
    internal exit and shifted by the exit link's travel time. Fragments
    projected past the horizon or below eps_count are dropped.
    """
    per_dst: dict[int, list[Cluster]] = {}
    exits_of = g.exits_by_entry(i)
    for sc in cf.scheduled:
        entry = sc.cluster.origin
        for exit_road in exits_of.get(entry, ()):
            dst = g.roads[exit_road].to_node
            if dst is None or dst not in g.intersections:
                continue  # boundary sink: no downstream agent
            share = zeta.get((entry, exit_road), 0.0)
            if share <= 0.0:
                continue
            count = sc.cluster.count * share
            if count < eps_count:
                continue
            travel = g.roads[exit_road].travel_time
            arr = sc.ast + travel
            if arr > horizon:
                continue
            dep = arr + sc.cluster.duration * share
            per_dst.setdefault(dst, []).append(
                Cluster(count, arr, dep, origin=exit_road, source=i)
            )
    msgs = []
    for dst in sorted(per_dst):
        clusters = sorted(per_dst[dst], key=lambda c: (c.arr, c.origin))
        msgs.append(OutflowProjectionMsg(src=i, dst=dst, issued_at=issued_at, clusters=clusters))
    return msgs
