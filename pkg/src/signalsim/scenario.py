"""Scenario files: network geometry, demand, signal timing, run settings.

A scenario is a single TOML document with sections [network] [signals]
[demand] [controller] [run]. Networks are either explicit (intersections and
roads listed) or generated from a grid template; two-intersection layouts
are one-row grids. Road ids in generated grids are deterministic:
a*100+b for the internal road a -> b, 9000+n*10+side for a source feeding
node n, 8000+n*10+side for a sink leaving node n (side N=0 S=1 E=2 W=3).
"""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from .network import NetworkError, NetworkGraph, IntersectionConfig, Phase, RoadSegment

SIDES = ("north", "south", "east", "west")
_SIDE_CODE = {"north": 0, "south": 1, "east": 2, "west": 3}


class ScenarioError(ValueError):
    pass


@dataclass(slots=True)
class SourceDemand:
    road: int
    rate_windows: list[tuple[float, float, float]]  # (t0, t1, veh/hour)
    group: str = ""

    def rate_at(self, t: float) -> float:
        for t0, t1, rate in self.rate_windows:
            if t0 <= t < t1:
                return rate
        return 0.0


@dataclass(slots=True)
class DemandSpec:
    sources: list[SourceDemand]
    band_windows: list[tuple[float, float, str]] = field(default_factory=list)

    def band_of(self, t: float) -> str:
        for t0, t1, label in self.band_windows:
            if t0 <= t < t1:
                return label
        return "post"


@dataclass(slots=True)
class SignalsParams:
    changeover: float = 5.0
    min_green: float = 5.0
    max_green: float = 60.0
    fixed_plan: list[tuple[int, float]] = field(default_factory=list)  # (phase, green)
    c_min: float = 30.0
    c_max: float = 120.0


@dataclass(slots=True)
class RunParams:
    duration: float = 3600.0
    warmup: float = 600.0
    seed: int = 1
    dt: float = 1.0
    max_volume: float = 0.0  # veh/h cap per source; 0 disables the guard
    deadlock_ticks: int = 300


@dataclass
class Scenario:
    name: str
    graph: NetworkGraph
    demand: DemandSpec
    signals: SignalsParams
    controller: dict
    run: RunParams
    turning_priors: dict[int, dict[tuple[int, int], float]]
    raw: dict = field(repr=False, default_factory=dict)


def _grid_ids(rows: int, cols: int):
    def node(r: int, c: int) -> int:
        return r * cols + c + 1

    def internal(a: int, b: int) -> int:
        return a * 100 + b

    def source(n: int, side: str) -> int:
        return 9000 + n * 10 + _SIDE_CODE[side]

    def sink(n: int, side: str) -> int:
        return 8000 + n * 10 + _SIDE_CODE[side]

    return node, internal, source, sink


def make_grid(
    rows: int,
    cols: int,
    link_length: float = 150.0,
    boundary_length: float = 150.0,
    lanes: int = 2,
    free_flow_speed: float = 13.9,
    saturation_flow: float = 0.0,
    signals: SignalsParams | None = None,
    straight_bias: float = 0.7,
) -> tuple[NetworkGraph, dict[int, dict[tuple[int, int], float]], dict[int, tuple[str, int]]]:
    """Build a rows x cols signalized grid with boundary sources and sinks.

    Returns (graph, turning priors per intersection, source road -> (side,
    node)). Every intersection is 2-phase: phase 1 serves north/south
    entries, phase 2 east/west; each entry may take any exit except the
    U-turn. Straight movements get straight_bias of the flow, the remaining
    exits share the rest equally. saturation_flow is per lane (veh/s); 0
    keeps the road default.
    """
    if rows < 1 or cols < 1:
        raise ScenarioError("grid needs rows >= 1 and cols >= 1")
    signals = signals or SignalsParams()
    node, internal, source, sink = _grid_ids(rows, cols)
    roads: dict[int, RoadSegment] = {}

    def add_road(rid: int, frm: int | None, to: int | None, length: float) -> None:
        roads[rid] = RoadSegment(
            rid,
            frm,
            to,
            length,
            lanes=lanes,
            free_flow_speed=free_flow_speed,
            saturation_flow=saturation_flow * lanes,
        )

    # heading of traffic on each road, for straight-exit resolution
    heading: dict[int, str] = {}
    for r in range(rows):
        for c in range(cols):
            n = node(r, c)
            if c + 1 < cols:
                m = node(r, c + 1)
                add_road(internal(n, m), n, m, link_length)
                add_road(internal(m, n), m, n, link_length)
                heading[internal(n, m)] = "east"
                heading[internal(m, n)] = "west"
            if r + 1 < rows:
                m = node(r + 1, c)
                add_road(internal(n, m), n, m, link_length)
                add_road(internal(m, n), m, n, link_length)
                heading[internal(n, m)] = "south"
                heading[internal(m, n)] = "north"
            open_sides = []
            if r == 0:
                open_sides.append("north")
            if r == rows - 1:
                open_sides.append("south")
            if c == 0:
                open_sides.append("west")
            if c == cols - 1:
                open_sides.append("east")
            for side in open_sides:
                add_road(source(n, side), None, n, boundary_length)
                add_road(sink(n, side), n, None, boundary_length)
                # a source on the west side carries eastbound traffic, etc.
                heading[source(n, side)] = {
                    "north": "south", "south": "north", "west": "east", "east": "west"
                }[side]
                heading[sink(n, side)] = {
                    "north": "north", "south": "south", "west": "west", "east": "east"
                }[side]

    opposite = {"north": "south", "south": "north", "east": "west", "west": "east"}
    intersections: dict[int, IntersectionConfig] = {}
    priors: dict[int, dict[tuple[int, int], float]] = {}
    for r in range(rows):
        for c in range(cols):
            n = node(r, c)
            entries = [rid for rid, rd in roads.items() if rd.to_node == n]
            exits = [rid for rid, rd in roads.items() if rd.from_node == n]
            ns_movements: list[tuple[int, int]] = []
            ew_movements: list[tuple[int, int]] = []
            pri: dict[tuple[int, int], float] = {}
            for e in sorted(entries):
                hd = heading[e]
                allowed = [
                    x for x in sorted(exits) if heading[x] != opposite[hd]
                ]
                straight = [x for x in allowed if heading[x] == hd]
                for x in allowed:
                    if straight and len(allowed) > 1:
                        p = straight_bias if heading[x] == hd else (
                            (1 - straight_bias) / (len(allowed) - 1)
                        )
                    else:
                        p = 1.0 / len(allowed)
                    pri[(e, x)] = p
                target = ns_movements if hd in ("north", "south") else ew_movements
                target.extend((e, x) for x in allowed)
            phases = [Phase(1, ns_movements), Phase(2, ew_movements)]
            intersections[n] = IntersectionConfig(
                n,
                phases,
                changeover=signals.changeover,
                min_green=signals.min_green,
                max_green=signals.max_green,
            )
            priors[n] = pri
    graph = NetworkGraph(intersections=intersections, roads=roads)
    source_info = {
        rid: (side, nd)
        for nd in intersections
        for side in SIDES
        if (rid := 9000 + nd * 10 + _SIDE_CODE[side]) in roads
    }
    return graph, priors, source_info


def _explicit_network(section: dict) -> NetworkGraph:
    intersections = {}
    for raw in section.get("intersections", []):
        phases = [
            Phase(id=p["id"], movements=[tuple(m) for m in p["movements"]])
            for p in raw.get("phases", [])
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
    for raw in section.get("roads", []):
        roads[raw["id"]] = RoadSegment(
            id=raw["id"],
            from_node=raw.get("from"),
            to_node=raw.get("to"),
            length=raw["length"],
            lanes=raw.get("lanes", 1),
            free_flow_speed=raw.get("free_flow_speed", 13.9),
            capacity=raw.get("capacity", 0),
            saturation_flow=raw.get("saturation_flow", 0.0),
        )
    return NetworkGraph(intersections=intersections, roads=roads)


def _uniform_priors(graph: NetworkGraph) -> dict[int, dict[tuple[int, int], float]]:
    priors: dict[int, dict[tuple[int, int], float]] = {}
    for i in graph.intersections:
        pri = {}
        for entry, exits in graph.exits_by_entry(i).items():
            for x in exits:
                pri[(entry, x)] = 1.0 / len(exits)
        priors[i] = pri
    return priors


def apply_overrides(raw: dict, overrides: dict[str, object]) -> dict:
    """Deep-copy raw and set dotted-path keys, e.g. 'demand.group_scale.left'."""
    out = copy.deepcopy(raw)
    for path, value in overrides.items():
        parts = path.split(".")
        node = out
        for part in parts[:-1]:
            node = node.setdefault(part, {})
            if not isinstance(node, dict):
                raise ScenarioError(f"override path {path}: {part} is not a table")
        node[parts[-1]] = value
    return out


def scenario_from_dict(raw: dict, name: str = "scenario") -> Scenario:
    net = raw.get("network")
    if not net:
        raise ScenarioError("missing [network] section")
    sig_raw = raw.get("signals", {})
    signals = SignalsParams(
        changeover=sig_raw.get("changeover", 5.0),
        min_green=sig_raw.get("min_green", 5.0),
        max_green=sig_raw.get("max_green", 60.0),
        fixed_plan=[tuple(x) for x in sig_raw.get("fixed_time", {}).get("cycle", [])],
        c_min=sig_raw.get("cycle_adaptive", {}).get("c_min", 30.0),
        c_max=sig_raw.get("cycle_adaptive", {}).get("c_max", 120.0),
    )
    kind = net.get("kind", "grid")
    source_info: dict[int, tuple[str, int]] = {}
    if kind == "grid":
        graph, priors, source_info = make_grid(
            rows=net["rows"],
            cols=net["cols"],
            link_length=net.get("link_length", 150.0),
            boundary_length=net.get("boundary_length", 150.0),
            lanes=net.get("lanes", 2),
            free_flow_speed=net.get("free_flow_speed", 13.9),
            saturation_flow=net.get("saturation_flow", 0.0),
            signals=signals,
            straight_bias=net.get("straight_bias", 0.7),
        )
    elif kind == "explicit":
        graph = _explicit_network(net)
        priors = _uniform_priors(graph)
    else:
        raise ScenarioError(f"unknown network kind {kind!r}")

    dem_raw = raw.get("demand", {})
    scale = dem_raw.get("scale", 1.0)
    group_scale = dem_raw.get("group_scale", {})
    sources: list[SourceDemand] = []
    for src in dem_raw.get("sources", []):
        if "road" in src:
            road_ids = [src["road"]]
        else:
            sides = src.get("sides", list(SIDES))
            nodes = src.get("nodes")
            road_ids = sorted(
                rid
                for rid, (side, nd) in source_info.items()
                if side in sides and (nodes is None or nd in nodes)
            )
            if not road_ids:
                raise ScenarioError(f"demand source matches no roads: {src}")
        group = src.get("group", "")
        factor = scale * group_scale.get(group, 1.0)
        windows = [
            (float(t0), float(t1), float(rate) * factor)
            for t0, t1, rate in src["rate_windows"]
        ]
        for rid in road_ids:
            if rid not in graph.roads or graph.roads[rid].from_node is not None:
                raise ScenarioError(f"road {rid} is not a source road")
            sources.append(SourceDemand(road=rid, rate_windows=windows, group=group))
    sources.sort(key=lambda s: s.road)
    bands = [
        (float(t0), float(t1), str(label))
        for t0, t1, label in dem_raw.get("band_windows", [])
    ]
    demand = DemandSpec(sources=sources, band_windows=bands)

    for t in dem_raw.get("turning", []):
        at, entry, exit_, p = t["at"], t["entry"], t["exit"], float(t["p"])
        if (entry, exit_) not in priors.get(at, {}):
            raise ScenarioError(f"turning override ({at}, {entry}->{exit_}) not a movement")
        priors[at][(entry, exit_)] = p
    for i, pri in priors.items():
        by_entry: dict[int, float] = {}
        for (entry, _x), p in pri.items():
            by_entry[entry] = by_entry.get(entry, 0.0) + p
        for (entry, x), p in list(pri.items()):
            if by_entry[entry] <= 0:
                raise ScenarioError(f"turning priors for entry {entry} sum to 0")
            pri[(entry, x)] = p / by_entry[entry]

    run_raw = raw.get("run", {})
    run = RunParams(
        duration=float(run_raw.get("duration", 3600.0)),
        warmup=float(run_raw.get("warmup", 600.0)),
        seed=int(run_raw.get("seed", 1)),
        dt=float(run_raw.get("dt", 1.0)),
        max_volume=float(run_raw.get("max_volume", 0.0)),
        deadlock_ticks=int(run_raw.get("deadlock_ticks", 300)),
    )
    if run.duration <= run.warmup:
        raise ScenarioError("run duration must exceed warmup")
    if run.max_volume > 0:
        for s in sources:
            for _t0, _t1, rate in s.rate_windows:
                if rate > run.max_volume + 1e-9:
                    raise ScenarioError(
                        f"source {s.road} rate {rate} veh/h exceeds max_volume {run.max_volume}"
                    )

    controller = dict(raw.get("controller", {}))
    controller.setdefault("kind", "baseline_sd")
    return Scenario(
        name=raw.get("name", name),
        graph=graph,
        demand=demand,
        signals=signals,
        controller=controller,
        run=run,
        turning_priors=priors,
        raw=raw,
    )


def load_scenario(path_or_text: str | Path, name: str | None = None) -> Scenario:
    """Load a scenario from a TOML file path or a TOML document string."""
    if isinstance(path_or_text, Path) or (
        "\n" not in str(path_or_text) and str(path_or_text).endswith(".toml")
    ):
        p = Path(path_or_text)
        raw = tomllib.loads(p.read_text())
        return scenario_from_dict(raw, name=name or p.stem)
    raw = tomllib.loads(str(path_or_text))
    return scenario_from_dict(raw, name=name or "inline")


def load_network(scenario_text: str) -> NetworkGraph:
    """Parse and validate just the network portion of a scenario document."""
    raw = tomllib.loads(scenario_text)
    return scenario_from_dict(raw).graph


def validate_scenario(path_or_text: str | Path) -> list[str]:
    """All validation problems found, empty when the scenario is sound."""
    try:
        load_scenario(path_or_text)
    except (ScenarioError, NetworkError, KeyError, TypeError, tomllib.TOMLDecodeError) as e:
        return [f"{type(e).__name__}: {e}"]
    return []
