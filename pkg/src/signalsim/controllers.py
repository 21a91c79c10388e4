"""Signal controllers sharing one interface: deliver(world, msgs) then
decide(world) -> {intersection: SignalCommand} once per tick.

fixed_time cycles a static plan. cycle_adaptive recomputes a Webster cycle
from the previous cycle's flow ratios. The schedule-driven family plans by
DP each second; its variants differ only in how neighbor feedback enters
the objective: baseline_sd ignores it, dcc augments with it, dcc_bc
additionally reverts to the plain objective at bottleneck agents.
"""
from __future__ import annotations

from dataclasses import dataclass, field

from .coordination import (
    AgentState,
    TurningProportions,
    dcc_tick,
    update_turning_proportions,
)
from .network import NetworkGraph
from .scenario import Scenario
from .scheduler import SignalCommand

CONTROLLER_KINDS = ("fixed_time", "cycle_adaptive", "baseline_sd", "dcc", "dcc_bc")


class FixedTimeController:
    """Cycles each intersection through a fixed (phase, green) plan."""

    def __init__(self, graph: NetworkGraph, plan: list[tuple[int, float]]):
        self.graph = graph
        self.plan = plan

    def deliver(self, world, msgs) -> None:
        pass

    def _next_phase(self, current: int) -> int:
        ids = [p for p, _g in self.plan]
        return ids[(ids.index(current) + 1) % len(ids)]

    def decide(self, world) -> dict[int, SignalCommand]:
        out = {}
        greens = dict(self.plan)
        for i in sorted(self.graph.intersections):
            sig = world.signals[i]
            if sig.in_changeover:
                out[i] = SignalCommand.hold()
                continue
            if sig.green_elapsed(world.now) >= greens[sig.active]:
                out[i] = SignalCommand.switch(self._next_phase(sig.active))
            else:
                out[i] = SignalCommand.hold()
        return out


def webster_cycle(ys: list[float], lost_time: float, c_min: float, c_max: float) -> float:
    """Webster cycle length from per-phase flow ratios, clamped to bounds."""
    total = sum(ys)
    if total <= 0:
        return c_min
    if total >= 1:
        return c_max  # oversaturated: pin at the maximum
    c = (1.5 * lost_time + 5.0) / (1.0 - total)
    return min(max(c, c_min), c_max)


def webster_greens(
    cycle: float, ys: list[float], lost_time: float, min_green: float
) -> list[float]:
    """Green splits proportional to flow ratios, floored at min_green."""
    avail = max(cycle - lost_time, min_green * len(ys))
    total = sum(ys)
    if total <= 0:
        return [avail / len(ys)] * len(ys)
    return [max(avail * y / total, min_green) for y in ys]


@dataclass
class _CycleState:
    greens: dict[int, float]
    cycle_len: float
    cycle_start: float = 0.0
    counts: dict[int, int] = field(default_factory=dict)  # per entry road


class CycleAdaptiveController:
    """Recomputes cycle and splits each cycle from observed flow ratios."""

    def __init__(self, graph: NetworkGraph, c_min: float = 30.0, c_max: float = 120.0):
        self.graph = graph
        self.c_min = c_min
        self.c_max = c_max
        self.state: dict[int, _CycleState] = {}
        for i, cfg in graph.intersections.items():
            equal = c_min / len(cfg.phases)
            self.state[i] = _CycleState(
                greens={p.id: equal for p in cfg.phases}, cycle_len=c_min
            )

    def deliver(self, world, msgs) -> None:
        pass

    def _replan(self, world, i: int) -> None:
        st = self.state[i]
        cfg = self.graph.intersections[i]
        lost = len(cfg.phases) * cfg.changeover
        ys = []
        for ph in cfg.phases:
            entries = sorted({e for e, _x in ph.movements})
            ratios = [
                (st.counts.get(e, 0) / st.cycle_len) / self.graph.roads[e].saturation_flow
                for e in entries
            ]
            ys.append(max(ratios) if ratios else 0.0)
        cycle = webster_cycle(ys, lost, self.c_min, self.c_max)
        greens = webster_greens(cycle, ys, lost, cfg.min_green)
        st.greens = {ph.id: g for ph, g in zip(cfg.phases, greens)}
        st.cycle_len = cycle
        st.cycle_start = world.now
        st.counts = {}

    def decide(self, world) -> dict[int, SignalCommand]:
        out = {}
        for i in sorted(self.graph.intersections):
            st = self.state[i]
            for road, n in world.arrivals_this_tick.items():
                if self.graph.roads[road].to_node == i:
                    st.counts[road] = st.counts.get(road, 0) + n
            if world.now - st.cycle_start >= st.cycle_len:
                self._replan(world, i)
            sig = world.signals[i]
            if sig.in_changeover:
                out[i] = SignalCommand.hold()
                continue
            cfg = self.graph.intersections[i]
            if sig.green_elapsed(world.now) >= st.greens[sig.active]:
                ids = [p.id for p in cfg.phases]
                out[i] = SignalCommand.switch(ids[(ids.index(sig.active) + 1) % len(ids)])
            else:
                out[i] = SignalCommand.hold()
        return out


class ScheduleDrivenController:
    """DP-planning agents with optional congestion-feedback coordination."""

    def __init__(
        self,
        graph: NetworkGraph,
        priors: dict[int, dict[tuple[int, int], float]],
        use_augmented: bool = False,
        use_bottleneck: bool = False,
        emit_feedback: bool = True,
        feedback_override: float | None = None,
        alpha: float = 0.1,
        window: float = 10.0,
        epsilon: float = 5.0,
        h_cap: float = 120.0,
        plan_gap: float = 2.5,
    ):
        self.graph = graph
        self.tp = TurningProportions(priors=priors, alpha=alpha)
        self.window = window
        self.agents = {
            i: AgentState(
                intersection=i,
                use_augmented=use_augmented,
                use_bottleneck=use_bottleneck,
                emit_feedback=emit_feedback,
                feedback_override=feedback_override,
                epsilon=epsilon,
                h_cap=h_cap,
                plan_gap=plan_gap,
            )
            for i in graph.intersections
        }
        self.schedule_rows: list[tuple] | None = None  # debug dump when enabled

    def deliver(self, world, msgs) -> None:
        for msg in msgs:
            self.agents[msg.dst].receive(msg)

    def decide(self, world) -> dict[int, SignalCommand]:
        ticks_per_window = max(1, int(round(self.window / world.dt)))
        if world.t > 0 and world.t % ticks_per_window == 0:
            for i in sorted(self.agents):
                observed = [(e, x, n) for (e, x), n in sorted(world.turn_window[i].items())]
                update_turning_proportions(self.tp, i, observed)
                world.turn_window[i] = {}
        out = {}
        for i in sorted(self.agents):
            agent = self.agents[i]
            sig = world.signals[i]
            sensed = world.sense(i, agent.h_cap)
            # Mid-changeover the switch to pending is already paid for, so
            # that is the phase whose continuation costs nothing.
            phase = sig.pending if sig.in_changeover and sig.pending else sig.active
            cf, cmd, outgoing = dcc_tick(
                agent,
                sensed,
                self.graph,
                self.tp,
                now=world.t,
                current_phase=phase,
                green_elapsed=sig.green_elapsed(world.now),
            )
            world.post(outgoing)
            out[i] = cmd
            if self.schedule_rows is not None:
                for k, sc in enumerate(cf.scheduled):
                    self.schedule_rows.append(
                        (world.t, i, k, sc.phase, sc.cluster.count, sc.cluster.arr,
                         sc.ast, sc.local_delay, sc.augmented_delay)
                    )
        return out


def build_controller(scenario: Scenario, kind: str):
    """Instantiate a controller by name with the scenario's parameters."""
    c = scenario.controller
    g = scenario.graph
    if kind == "fixed_time":
        plan = scenario.signals.fixed_plan or [(1, 30.0), (2, 30.0)]
        return FixedTimeController(g, plan)
    if kind == "cycle_adaptive":
        return CycleAdaptiveController(g, scenario.signals.c_min, scenario.signals.c_max)
    if kind in ("baseline_sd", "dcc", "dcc_bc"):
        return ScheduleDrivenController(
            g,
            scenario.turning_priors,
            use_augmented=kind in ("dcc", "dcc_bc"),
            use_bottleneck=kind == "dcc_bc",
            emit_feedback=bool(c.get("emit_feedback", True)),
            feedback_override=c.get("feedback_override"),
            alpha=float(c.get("alpha", 0.1)),
            window=float(c.get("window", 10.0)),
            epsilon=float(c.get("epsilon", 5.0)),
            h_cap=float(c.get("h_cap", 120.0)),
            plan_gap=float(c.get("plan_gap", 2.5)),
        )
    raise ValueError(f"unknown controller kind {kind!r}, expected one of {CONTROLLER_KINDS}")
