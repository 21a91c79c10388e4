"""Static road-network description: topology, phases, signal constraints.

The graph is immutable after load and shared read-only by every agent.
External sources and sinks are road endpoints with no intersection id; they
are never scheduled.
"""
from __future__ import annotations

from dataclasses import dataclass, field

DEFAULT_SAT_FLOW_PER_LANE = 0.5  # vehicles/s, 1800 veh/h/lane
DEFAULT_FREE_FLOW_SPEED = 13.9  # m/s, ~50 km/h
VEHICLE_STORAGE_LENGTH = 7.0  # m of link per stored vehicle per lane


class NetworkError(ValueError):
    pass


@dataclass(slots=True)
class RoadSegment:
    """Directed link. from_node/to_node of None mark an external source/sink."""

    id: int
    from_node: int | None
    to_node: int | None
    length: float
    lanes: int = 1
    free_flow_speed: float = DEFAULT_FREE_FLOW_SPEED
    capacity: int = 0  # storage in vehicles; 0 = derive from length
    saturation_flow: float = 0.0  # veh/s at green; 0 = derive from lanes

    def __post_init__(self):
        if self.length <= 0:
            raise NetworkError(f"road {self.id}: length must be > 0")
        if self.lanes < 1:
            raise NetworkError(f"road {self.id}: lanes must be >= 1")
        if self.from_node is None and self.to_node is None:
            raise NetworkError(f"road {self.id}: floating segment (no endpoints)")
        if self.capacity == 0:
            self.capacity = max(1, int(self.length / VEHICLE_STORAGE_LENGTH) * self.lanes)
        if self.saturation_flow == 0.0:
            self.saturation_flow = DEFAULT_SAT_FLOW_PER_LANE * self.lanes
        if self.capacity < 1 or self.saturation_flow <= 0:
            raise NetworkError(f"road {self.id}: bad capacity or saturation flow")

    @property
    def travel_time(self) -> float:
        return self.length / self.free_flow_speed


@dataclass(slots=True)
class Phase:
    """A compatible movement pattern: (entry road, exit road) pairs with right of way."""

    id: int
    movements: list[tuple[int, int]]


@dataclass(slots=True)
class IntersectionConfig:
    id: int
    phases: list[Phase]
    changeover: float = 5.0
    min_green: float = 5.0
    max_green: float = 60.0
    weight: float = 0.0  # bottleneck weight; 0 = derive from entry capacity

    def __post_init__(self):
        if self.changeover < 0:
            raise NetworkError(f"intersection {self.id}: changeover must be >= 0")
        if not (0 < self.min_green <= self.max_green):
            raise NetworkError(f"intersection {self.id}: need 0 < min_green <= max_green")


@dataclass
class NetworkGraph:
    """Validated road network with derived neighbor and phase indexes."""

    intersections: dict[int, IntersectionConfig]
    roads: dict[int, RoadSegment]
    _entry: dict[int, list[int]] = field(default_factory=dict, repr=False)
    _exit: dict[int, list[int]] = field(default_factory=dict, repr=False)
    _phase_of_entry: dict[tuple[int, int], int] = field(default_factory=dict, repr=False)
    _exits_by_entry: dict[int, dict[int, list[int]]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self._build_indexes()
        self._validate()
        self._assign_weights()

    def _build_indexes(self) -> None:
        self._entry = {i: [] for i in self.intersections}
        self._exit = {i: [] for i in self.intersections}
        for r in self.roads.values():
            if r.to_node is not None:
                if r.to_node not in self.intersections:
                    raise NetworkError(f"road {r.id}: unknown intersection {r.to_node}")
                self._entry[r.to_node].append(r.id)
            if r.from_node is not None:
                if r.from_node not in self.intersections:
                    raise NetworkError(f"road {r.id}: unknown intersection {r.from_node}")
                self._exit[r.from_node].append(r.id)
        for lst in self._entry.values():
            lst.sort()
        for lst in self._exit.values():
            lst.sort()
        self._phase_of_entry = {}
        self._exits_by_entry = {}
        for i, cfg in self.intersections.items():
            by_entry: dict[int, list[int]] = {}
            for ph in cfg.phases:
                for entry, exit_ in ph.movements:
                    if entry not in self.roads or exit_ not in self.roads:
                        raise NetworkError(f"intersection {i}: movement references unknown road")
                    if self.roads[entry].to_node != i:
                        raise NetworkError(f"intersection {i}: road {entry} does not enter it")
                    if self.roads[exit_].from_node != i:
                        raise NetworkError(f"intersection {i}: road {exit_} does not leave it")
                    key = (i, entry)
                    if key in self._phase_of_entry and self._phase_of_entry[key] != ph.id:
                        raise NetworkError(
                            f"intersection {i}: entry road {entry} appears in multiple phases"
                        )
                    self._phase_of_entry[key] = ph.id
                    by_entry.setdefault(entry, [])
                    if exit_ not in by_entry[entry]:
                        by_entry[entry].append(exit_)
            self._exits_by_entry[i] = by_entry

    def _validate(self) -> None:
        if not self.intersections:
            raise NetworkError("network has no intersections")
        for i, cfg in self.intersections.items():
            if not cfg.phases:
                raise NetworkError(f"intersection {i}: no phases")
            ids = [ph.id for ph in cfg.phases]
            if ids != list(range(1, len(ids) + 1)):
                raise NetworkError(f"intersection {i}: phase ids must be 1..{len(ids)}")
            for entry in self._entry[i]:
                if (i, entry) not in self._phase_of_entry:
                    raise NetworkError(f"intersection {i}: entry road {entry} not in any phase")
        for i in self.intersections:
            for j in self.downstream(i):
                if i not in self.downstream(j):
                    raise NetworkError(f"no return road from {j} to {i} (neighbors must be 2-way)")

    def _assign_weights(self) -> None:
        totals = {
            i: sum(self.roads[r].capacity for r in self._entry[i]) for i in self.intersections
        }
        mean = sum(totals.values()) / len(totals)
        for i, cfg in self.intersections.items():
            if cfg.weight == 0.0:
                cfg.weight = totals[i] / mean if mean > 0 else 1.0
            if cfg.weight <= 0:
                raise NetworkError(f"intersection {i}: weight must be > 0")

    # Lookups used throughout the simulator and coordination layer.

    def entry_roads(self, i: int) -> list[int]:
        return self._entry[i]

    def exit_roads(self, i: int) -> list[int]:
        return self._exit[i]

    def phase_of_entry(self, i: int, road: int) -> int:
        return self._phase_of_entry[(i, road)]

    def exits_by_entry(self, i: int) -> dict[int, list[int]]:
        return self._exits_by_entry[i]

    def upstream(self, i: int) -> list[int]:
        out = {self.roads[r].from_node for r in self._entry[i]}
        return sorted(j for j in out if j is not None)

    def downstream(self, i: int) -> list[int]:
        out = {self.roads[r].to_node for r in self._exit[i]}
        return sorted(j for j in out if j is not None)

    def neighbors(self, i: int) -> list[tuple[int, str, int]]:
        """(neighbor, direction, connecting road), sorted for determinism."""
        if i not in self.intersections:
            raise NetworkError(f"unknown intersection {i}")
        out = []
        for r in self._exit[i]:
            j = self.roads[r].to_node
            if j is not None:
                out.append((j, "downstream", r))
        for r in self._entry[i]:
            j = self.roads[r].from_node
            if j is not None:
                out.append((j, "upstream", r))
        return sorted(out)

    def road_between(self, i: int, j: int) -> int:
        """The road i -> j; raises if absent or ambiguous."""
        hits = [r for r in self._exit[i] if self.roads[r].to_node == j]
        if len(hits) != 1:
            raise NetworkError(f"expected exactly one road {i} -> {j}, found {len(hits)}")
        return hits[0]

    def phase_of_neighbor(self, i: int, j: int) -> int:
        """P(i, j): the phase at j that serves the road i -> j."""
        return self.phase_of_entry(j, self.road_between(i, j))

    def source_roads(self) -> list[int]:
        return sorted(r.id for r in self.roads.values() if r.from_node is None)

    def to_dict(self) -> dict:
        return {
            "intersections": [
                {
                    "id": cfg.id,
                    "changeover": cfg.changeover,
                    "min_green": cfg.min_green,
                    "max_green": cfg.max_green,
                    "weight": cfg.weight,
                    "phases": [
                        {"id": ph.id, "movements": [list(m) for m in ph.movements]}
                        for ph in cfg.phases
                    ],
                }
                for cfg in sorted(self.intersections.values(), key=lambda c: c.id)
            ],
            "roads": [
                {
                    "id": r.id,
                    "from": r.from_node,
                    "to": r.to_node,
                    "length": r.length,
                    "lanes": r.lanes,
                    "free_flow_speed": r.free_flow_speed,
                    "capacity": r.capacity,
                    "saturation_flow": r.saturation_flow,
                }
                for r in sorted(self.roads.values(), key=lambda r: r.id)
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "NetworkGraph":
        intersections = {}
        for raw in data["intersections"]:
            phases = [
                Phase(id=p["id"], movements=[tuple(m) for m in p["movements"]])
                for p in raw["phases"]
            ]
            intersections[raw["id"]] = IntersectionConfig(
                id=raw["id"],
                phases=phases,
                changeover=raw.get("changeover", 5.0),
                min_green=raw.get("min_green", 5.0),
                max_green=raw.get("max_green", 60.0),
                weight=raw.get("weight", 0.0),
            )
        roads = {}
        for raw in data["roads"]:
            roads[raw["id"]] = RoadSegment(
                id=raw["id"],
                from_node=raw.get("from"),
                to_node=raw.get("to"),
                length=raw["length"],
                lanes=raw.get("lanes", 1),
                free_flow_speed=raw.get("free_flow_speed", DEFAULT_FREE_FLOW_SPEED),
                capacity=raw.get("capacity", 0),
                saturation_flow=raw.get("saturation_flow", 0.0),
            )
        return cls(intersections=intersections, roads=roads)
