"""Deterministic mesoscopic traffic simulation.

Point queues with link storage: vehicles travel a link at free-flow speed,
join a FIFO stop-line queue, and discharge at saturation flow while their
phase is green, blocked when the receiving link is full (spillback). One
step is one second, matching the controllers' replanning cadence.

Step order within a tick: deliver last tick's messages, run controllers,
apply signal commands, discharge green queues, advance traveling vehicles,
generate demand, accrue waiting, then check the deadlock guard.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .clusters import RoadClusterSequence, clusterize
from .network import NetworkGraph
from .scenario import Scenario
from .scheduler import SignalCommand


@dataclass(slots=True)
class Vehicle:
    id: int
    route: list[int]
    leg: int
    entered_at: float
    band: str
    exited_at: float | None = None
    eta: float = 0.0
    queued: bool = False
    wait: float = 0.0
    waits_by_node: dict = field(default_factory=dict)
    stops: int = 0
    moved_tick: int = -1
    join_seq: int = 0

    @property
    def road(self) -> int:
        return self.route[self.leg]

    def next_road(self) -> int | None:
        return self.route[self.leg + 1] if self.leg + 1 < len(self.route) else None


@dataclass(slots=True)
class LinkState:
    road_id: int
    capacity: int
    transit: list = field(default_factory=list)
    queue: deque = field(default_factory=deque)

    @property
    def occupancy(self) -> int:
        return len(self.transit) + len(self.queue)


@dataclass(slots=True)
class SignalState:
    active: int = 1
    phase_start: float = 0.0
    in_changeover: bool = False
    changeover_left: float = 0.0
    pending: int | None = None

    def green_elapsed(self, now: float) -> float:
        return 0.0 if self.in_changeover else now - self.phase_start


class World:
    """Full mutable simulation state for one run."""

    def __init__(self, scenario: Scenario, check_invariants: bool = False,
                 record_commands: bool = False):
        self.scenario = scenario
        self.graph: NetworkGraph = scenario.graph
        self.dt = scenario.run.dt
        self.t = 0  # tick counter; simulation time = t * dt
        self.links = {
            r.id: LinkState(r.id, r.capacity) for r in self.graph.roads.values()
        }
        self.signals = {i: SignalState() for i in self.graph.intersections}
        self.vehicles: list[Vehicle] = []
        self.exited = 0
        self.pending: dict[int, deque] = {r: deque() for r in self.graph.source_roads()}
        self.credit: dict[int, float] = {r: 0.0 for r in self.graph.roads}
        self.mail_next: list = []
        self.mail_now: list = []
        # turn counts since the controller last drained them, per intersection
        self.turn_window: dict[int, dict[tuple[int, int], int]] = {
            i: {} for i in self.graph.intersections
        }
        # stop-line arrivals this tick, per entry road (cycle controllers read this)
        self.arrivals_this_tick: dict[int, int] = {}
        self.last_movement_tick = 0
        self.deadlock = False
        self.check = check_invariants
        self.command_trace: list[tuple[int, int, SignalCommand]] | None = (
            [] if record_commands else None
        )
        self._join_counter = 0
        seed = scenario.run.seed
        self._rng = {
            r: np.random.Generator(np.random.PCG64(np.random.SeedSequence((seed, r))))
            for r in self.graph.source_roads()
        }
        self._next_vid = 0
        # route priors keyed per intersection and entry for the sampling chain
        self._route_priors: dict[tuple[int, int], tuple[list[int], list[float]]] = {}
        for i, pri in scenario.turning_priors.items():
            by_entry: dict[int, list[tuple[int, float]]] = {}
            for (entry, exit_), p in sorted(pri.items()):
                by_entry.setdefault(entry, []).append((exit_, p))
            for entry, pairs in by_entry.items():
                exits = [x for x, _ in pairs]
                probs = np.array([p for _, p in pairs], dtype=float)
                probs = probs / probs.sum()
                self._route_priors[(i, entry)] = (exits, probs.tolist())

    @property
    def now(self) -> float:
        return self.t * self.dt

    def post(self, msgs) -> None:
        self.mail_next.extend(msgs)

    def in_network(self) -> int:
        return sum(l.occupancy for l in self.links.values())

    # --- per-tick phases -------------------------------------------------

    def _movement(self) -> None:
        self.last_movement_tick = self.t

    def _green_for(self, i: int, road: int) -> bool:
        sig = self.signals[i]
        return (not sig.in_changeover) and self.graph.phase_of_entry(i, road) == sig.active

    def _apply_commands(self, commands: dict[int, SignalCommand]) -> None:
        for i in sorted(self.signals):
            sig = self.signals[i]
            if sig.in_changeover:
                sig.changeover_left -= self.dt
                if sig.changeover_left <= 1e-9:
                    sig.active = sig.pending
                    sig.pending = None
                    sig.in_changeover = False
                    sig.phase_start = self.now
                continue  # commands are ignored mid-changeover
            cmd = commands.get(i)
            if cmd is None or cmd.action != "switch" or cmd.phase == sig.active:
                continue
            cfg = self.graph.intersections[i]
            if cfg.changeover <= 0:
                sig.active = cmd.phase
                sig.phase_start = self.now
            else:
                sig.in_changeover = True
                sig.changeover_left = cfg.changeover
                sig.pending = cmd.phase

    def _enter_link(self, veh: Vehicle, road: int) -> None:
        veh.eta = self.graph.roads[road].travel_time
        veh.queued = False
        veh.moved_tick = self.t
        self.links[road].transit.append(veh)

    def _serve(self, veh: Vehicle, i: int, entry: int, exit_: int) -> None:
        veh.leg += 1
        self.turn_window[i][(entry, exit_)] = self.turn_window[i].get((entry, exit_), 0) + 1
        self._enter_link(veh, exit_)
        self._movement()

    def _discharge(self) -> None:
        for i in sorted(self.graph.intersections):
            sig = self.signals[i]
            cfg = self.graph.intersections[i]
            active_entries = set()
            if not sig.in_changeover:
                phase = next(p for p in cfg.phases if p.id == sig.active)
                active_entries = {e for e, _x in phase.movements}
            for entry in self.graph.entry_roads(i):
                if entry not in active_entries:
                    self.credit[entry] = 0.0  # red: no banked service
                    continue
                sat = self.graph.roads[entry].saturation_flow
                cap = max(1.0, sat * self.dt)
                self.credit[entry] = min(self.credit[entry] + sat * self.dt, cap)
                q = self.links[entry].queue
                while self.credit[entry] >= 1.0 and q:
                    veh = q[0]
                    exit_ = veh.next_road()
                    if self.links[exit_].occupancy >= self.links[exit_].capacity:
                        break  # spillback: downstream storage full
                    q.popleft()
                    self.credit[entry] -= 1.0
                    self._serve(veh, i, entry, exit_)

    def _advance(self) -> None:
        for rid in sorted(self.links):
            link = self.links[rid]
            road = self.graph.roads[rid]
            still = []
            for veh in link.transit:
                if veh.moved_tick == self.t:
                    still.append(veh)
                    continue
                veh.eta -= self.dt
                if veh.eta > 1e-9:
                    still.append(veh)
                    continue
                self._movement()
                if road.to_node is None:
                    veh.exited_at = self.now + self.dt
                    self.exited += 1
                    continue
                i = road.to_node
                nxt = veh.next_road()
                self.arrivals_this_tick[rid] = self.arrivals_this_tick.get(rid, 0) + 1
                if (
                    not link.queue
                    and self._green_for(i, rid)
                    and self.credit[rid] >= 1.0
                    and self.links[nxt].occupancy < self.links[nxt].capacity
                ):
                    self.credit[rid] -= 1.0
                    self._serve(veh, i, rid, nxt)
                    continue
                if link.queue or not self._green_for(i, rid):
                    veh.stops += 1
                veh.queued = True
                self._join_counter += 1
                veh.join_seq = self._join_counter
                link.queue.append(veh)
            link.transit = still

    def _sample_route(self, source: int, rng) -> list[int]:
        route = [source]
        road = self.graph.roads[source]
        while road.to_node is not None:
            exits, probs = self._route_priors[(road.to_node, road.id)]
            pick = exits[rng.choice(len(exits), p=probs)]
            route.append(pick)
            road = self.graph.roads[pick]
        return route

    def _generate(self) -> None:
        demand = self.scenario.demand
        by_road = {s.road: s for s in demand.sources}
        for source in self.graph.source_roads():
            link = self.links[source]
            buf = self.pending[source]
            while buf and link.occupancy < link.capacity:
                self._enter_link(buf.popleft(), source)
                self._movement()
            spec = by_road.get(source)
            if spec is None:
                continue
            rate = spec.rate_at(self.now) / 3600.0
            if rate <= 0:
                continue
            rng = self._rng[source]
            n = int(rng.poisson(rate * self.dt))
            for _ in range(n):
                veh = Vehicle(
                    id=self._next_vid,
                    route=self._sample_route(source, rng),
                    leg=0,
                    entered_at=self.now,
                    band=demand.band_of(self.now),
                )
                self._next_vid += 1
                self.vehicles.append(veh)
                if link.occupancy < link.capacity:
                    self._enter_link(veh, source)
                    self._movement()
                else:
                    buf.append(veh)

    def _accrue_waits(self) -> None:
        for rid in sorted(self.links):
            link = self.links[rid]
            if not link.queue:
                continue
            node = self.graph.roads[rid].to_node
            for veh in link.queue:
                veh.wait += self.dt
                veh.waits_by_node[node] = veh.waits_by_node.get(node, 0.0) + self.dt
        # Vehicles buffered at a full source link are queueing just outside
        # the network; dropping their wait would reward controllers that
        # push congestion upstream off the map.
        for rid in sorted(self.pending):
            buf = self.pending[rid]
            if not buf:
                continue
            node = self.graph.roads[rid].to_node
            for veh in buf:
                veh.wait += self.dt
                veh.waits_by_node[node] = veh.waits_by_node.get(node, 0.0) + self.dt

    def _check_invariants(self) -> None:
        in_net = self.in_network()
        buffered = sum(len(b) for b in self.pending.values())
        assert len(self.vehicles) == in_net + buffered + self.exited, "conservation violated"
        for rid, link in self.links.items():
            assert link.occupancy <= link.capacity, f"link {rid} over capacity"
            seqs = [v.join_seq for v in link.queue]
            assert seqs == sorted(seqs), f"link {rid} queue not FIFO"

    def sense(self, i: int, horizon: float) -> list[RoadClusterSequence]:
        """Detector view for intersection i: queued plus approaching vehicles."""
        out = []
        gap = float(self.scenario.controller.get("gap_threshold", 2.5))
        for rid in self.graph.entry_roads(i):
            link = self.links[rid]
            arrivals = [(0.0, True) for _ in link.queue]
            arrivals.extend(
                (veh.eta, False)
                for veh in sorted(link.transit, key=lambda v: (v.eta, v.id))
                if veh.eta <= horizon
            )
            out.append(
                clusterize(rid, arrivals, gap, self.graph.roads[rid].saturation_flow)
            )
        return out

    def step(self, controller) -> None:
        self.mail_now = self.mail_next
        self.mail_next = []
        controller.deliver(self, self.mail_now)
        commands = controller.decide(self)
        if self.command_trace is not None:
            for i in sorted(commands):
                self.command_trace.append((self.t, i, commands[i]))
        self.arrivals_this_tick = {}
        self._apply_commands(commands)
        self._discharge()
        self._advance()
        self._generate()
        self._accrue_waits()
        if self.check:
            self._check_invariants()
        if (
            self.in_network() > 0
            and self.t - self.last_movement_tick >= self.scenario.run.deadlock_ticks
        ):
            self.deadlock = True
        self.t += 1
