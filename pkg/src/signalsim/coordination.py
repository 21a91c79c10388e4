"""Neighbor coordination: congestion feedback, turning estimation, agent tick.

Each intersection agent exchanges two message kinds with direct neighbors:
outflow projections downstream (predicted demand) and congestion feedback
upstream (average delay per vehicle, per phase). Feedback consumed at tick t
was issued at tick t-1 or earlier; an agent never reads same-tick mail.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

from .clusters import (
    DEFAULT_GAP_THRESHOLD,
    Cluster,
    InputClusterSequence,
    OutflowProjectionMsg,
    RoadClusterSequence,
    coalesce,
    merge_by_phase,
    project_outflow,
)
from .network import NetworkGraph
from .scheduler import (
    ControlFlow,
    DelayParams,
    Mode,
    SignalCommand,
    StateSpaceOverflow,
    enforce_max_green,
    first_action,
    optimize,
)

DEFAULT_EPSILON = 5.0  # s/veh slack in the bottleneck comparison
DEFAULT_ALPHA = 0.1  # turning-count EMA smoothing
DEFAULT_H_CAP = 120.0  # s, horizon cap
STATE_BUDGET = 60000  # per-replan DP cap before the ungated retry kicks in
GATE_HEAVY_STATES = 20000  # gated solve cost that triggers a cooldown
GATE_BACKOFF_TICKS = 60  # how long an agent plans ungated after a heavy solve
STALE_FULL = 5  # ticks a feedback value stays at full strength
STALE_ZERO = 10  # ticks after which it counts as 0


@dataclass(slots=True)
class CongestionFeedbackMsg:
    """Per-phase average delay sent to an upstream neighbor.

    aggregate is the sender's all-phase average over the same schedule; it
    rides along so receivers can evaluate the bottleneck comparison without
    a separate channel.
    """

    src: int
    dst: int
    phase: int
    value: float  # s/veh, >= 0
    issued_at: int
    aggregate: float = 0.0

    def __post_init__(self):
        if not (self.value >= 0 and self.aggregate >= 0):
            raise ValueError("feedback values must be >= 0 and finite")

    def rows(self) -> list[tuple]:
        return [(self.issued_at, self.src, self.dst, "feedback", self.phase, self.value)]


@dataclass
class TurningProportions:
    """Per-intersection (entry, exit) split estimates.

    Ratios come from an exponential moving average of per-window turn
    counts, normalized per entry road; entries with no observed flow yet
    fall back to the scenario priors.
    """

    priors: dict[int, dict[tuple[int, int], float]]
    alpha: float = DEFAULT_ALPHA
    avg: dict[int, dict[tuple[int, int], float]] = field(default_factory=dict)

    def __post_init__(self):
        if not (0 < self.alpha <= 1):
            raise ValueError("alpha must be in (0, 1]")
        for i, pri in self.priors.items():
            self.avg.setdefault(i, {pair: 0.0 for pair in pri})

    def ratios(self, i: int) -> dict[tuple[int, int], float]:
        by_entry: dict[int, float] = {}
        for (entry, _x), v in self.avg[i].items():
            by_entry[entry] = by_entry.get(entry, 0.0) + v
        out = {}
        for pair, prior in self.priors[i].items():
            s = by_entry.get(pair[0], 0.0)
            out[pair] = self.avg[i][pair] / s if s > 1e-9 else prior
        return out

    def entry_share(self, i: int, entry: int, j: int, g: NetworkGraph) -> float:
        """Share of traffic on one entry road of i that heads to neighbor j."""
        ratios = self.ratios(i)
        return sum(
            p for (e, x), p in ratios.items()
            if e == entry and g.roads[x].to_node == j
        )

    def pair_share(self, i: int, u: int, j: int, g: NetworkGraph) -> float:
        """zeta(u, j): share of traffic entering i from u that heads to j."""
        return self.entry_share(i, g.road_between(u, i), j, g)


def update_turning_proportions(
    tp: TurningProportions,
    i: int,
    observed: list[tuple[int, int, float]],
    alpha: float | None = None,
) -> TurningProportions:
    """Fold one observation window's turn counts into the moving averages."""
    a = tp.alpha if alpha is None else alpha
    counts = {(e, x): float(n) for e, x, n in observed}
    if any(n < 0 for n in counts.values()):
        raise ValueError("turn counts must be >= 0")
    for pair in tp.avg[i]:
        tp.avg[i][pair] = (1 - a) * tp.avg[i][pair] + a * counts.get(pair, 0.0)
    return tp


def staleness_factor(age: int, full: int = STALE_FULL, zero: int = STALE_ZERO) -> float:
    """1 for fresh messages, linear decay to 0 between full and zero ticks."""
    if age <= full:
        return 1.0
    if age >= zero:
        return 0.0
    return (zero - age) / (zero - full)


def congestion_feedback(cf: ControlFlow, p: int) -> float:
    """Average local delay per vehicle over the schedule's phase-p clusters."""
    delay = 0.0
    count = 0.0
    for sc in cf.scheduled:
        if sc.phase == p:
            delay += sc.local_delay
            count += sc.cluster.count
    return delay / count if count > 0 else 0.0


def aggregate_feedback(cf: ControlFlow) -> float:
    """All-phase average delay per vehicle: the bottleneck-comparison input."""
    count = sum(sc.cluster.count for sc in cf.scheduled)
    return cf.total_local_delay / count if count > 0 else 0.0


def effective_feedback(
    i: int,
    entry: int,
    g: NetworkGraph,
    tp: TurningProportions,
    inbox: dict[tuple[int, int], CongestionFeedbackMsg],
    now: int = 0,
) -> float:
    """Turning-weighted sum of downstream feedbacks for one entry road of i.

    For each downstream neighbor j other than the entry's own upstream
    intersection, weight j's feedback for the phase serving the road i -> j
    by the share of the entry's traffic heading to j. Boundary entries have
    no upstream intersection, so nothing is excluded for them. Missing
    messages contribute 0; stale ones decay.
    """
    u = g.roads[entry].from_node
    total = 0.0
    for j in g.downstream(i):
        if u is not None and j == u:
            continue
        share = tp.entry_share(i, entry, j, g)
        if share <= 0.0:
            continue
        msg = inbox.get((j, g.phase_of_neighbor(i, j)))
        if msg is None:
            continue
        total += share * msg.value * staleness_factor(now - msg.issued_at)
    return total


def is_bottleneck(
    d_self: float,
    w_self: float,
    neighbor_pairs: list[tuple[float, float]],
    epsilon: float = DEFAULT_EPSILON,
) -> bool:
    """Whether this agent's weighted congestion dominates every neighbor's."""
    if w_self <= 0 or any(w <= 0 for _d, w in neighbor_pairs):
        raise ValueError("weights must be > 0")
    if epsilon < 0:
        raise ValueError("epsilon must be >= 0")
    return all(d_self * w_self + epsilon >= d * w for d, w in neighbor_pairs)


@dataclass
class AgentState:
    """One intersection agent's mutable coordination state."""

    intersection: int
    use_augmented: bool = False
    use_bottleneck: bool = False
    emit_feedback: bool = True
    feedback_override: float | None = None  # force a fixed d-tilde on every phase
    epsilon: float = DEFAULT_EPSILON
    h_cap: float = DEFAULT_H_CAP
    plan_gap: float = DEFAULT_GAP_THRESHOLD  # aggregation gap for planning input
    last_cf: ControlFlow | None = None
    last_aggregate: float = 0.0
    gate_off_until: int = 0  # tick until which the feedback horizon gate stays off
    inbox_outflow: dict[int, OutflowProjectionMsg] = field(default_factory=dict)
    inbox_feedback: dict[tuple[int, int], CongestionFeedbackMsg] = field(default_factory=dict)

    def receive(self, msg) -> None:
        if isinstance(msg, OutflowProjectionMsg):
            self.inbox_outflow[msg.src] = msg
        elif isinstance(msg, CongestionFeedbackMsg):
            self.inbox_feedback[(msg.src, msg.phase)] = msg
        else:
            raise TypeError(f"unknown message type {type(msg).__name__}")


def _phase_feedback(
    state: AgentState,
    g: NetworkGraph,
    tp: TurningProportions,
    inp: InputClusterSequence,
    now: int,
) -> dict[int, float]:
    """Flatten per-entry effective feedback to the per-phase values the
    optimizer takes, weighting entries by their current input counts."""
    i = state.intersection
    cfg = g.intersections[i]
    if state.feedback_override is not None:
        return {ph.id: state.feedback_override for ph in cfg.phases}
    per_entry: dict[int, float] = {}
    for entry in g.entry_roads(i):
        per_entry[entry] = effective_feedback(
            i, entry, g, tp, state.inbox_feedback, now
        )
    counts_by_origin: dict[int, float] = {}
    for lst in inp.by_phase.values():
        for c in lst:
            counts_by_origin[c.origin] = counts_by_origin.get(c.origin, 0.0) + c.count
    out = {}
    for ph in cfg.phases:
        entries = sorted({e for e, _x in ph.movements})
        weights = [counts_by_origin.get(e, 0.0) for e in entries]
        if sum(weights) > 0:
            d = sum(w * per_entry[e] for w, e in zip(weights, entries)) / sum(weights)
        elif entries:
            d = sum(per_entry[e] for e in entries) / len(entries)
        else:
            d = 0.0
        out[ph.id] = d
    return out


def dcc_tick(
    state: AgentState,
    sensed: list[RoadClusterSequence],
    g: NetworkGraph,
    tp: TurningProportions,
    now: int,
    current_phase: int,
    green_elapsed: float,
) -> tuple[ControlFlow, SignalCommand, list]:
    """One replanning step for one intersection.

    Assembles local plus projected demand, derives per-phase feedback,
    drops to the plain objective when the bottleneck comparison says this
    agent is the congestion source, optimizes, and emits next-tick mail.
    """
    i = state.intersection
    cfg = g.intersections[i]
    base_h = max((g.roads[r].travel_time for r in g.entry_roads(i)), default=0.0)

    by_road: dict[int, list[Cluster]] = {}
    for seq in sensed:
        if seq.clusters:
            by_road.setdefault(seq.road, []).extend(seq.clusters)
    latest_proj = 0.0
    for src in sorted(state.inbox_outflow):
        msg = state.inbox_outflow[src]
        age = (now - msg.issued_at) * 1.0
        for c in msg.clusters:
            arr = max(0.0, c.arr - age)
            by_road.setdefault(c.origin, []).append(
                Cluster(c.count, arr, arr + c.duration, c.origin, c.source)
            )
            latest_proj = max(latest_proj, arr)
    # Sensed and projected demand on one road is one service stream: merge
    # within-gap fragments so the job count stays bounded no matter how
    # finely upstream schedules were cut.
    seqs = [
        RoadClusterSequence(road=road, clusters=coalesce(by_road[road], state.plan_gap))
        for road in sorted(by_road)
    ]
    horizon = min(state.h_cap, max(base_h, latest_proj))
    inp = merge_by_phase(seqs, cfg.phases, horizon)

    feedback = _phase_feedback(state, g, tp, inp, now)
    mode = Mode.AUGMENTED if state.use_augmented else Mode.BASELINE
    if state.use_bottleneck and mode is Mode.AUGMENTED:
        pairs = []
        for j in g.downstream(i):
            msgs = [m for (src, _p), m in state.inbox_feedback.items() if src == j]
            agg = max(
                (m.aggregate * staleness_factor(now - m.issued_at) for m in msgs),
                default=0.0,
            )
            pairs.append((agg, g.intersections[j].weight))
        if is_bottleneck(state.last_aggregate, cfg.weight, pairs, state.epsilon):
            mode = Mode.BASELINE

    gate_on = mode is Mode.AUGMENTED and now >= state.gate_off_until
    params = DelayParams(
        mode=mode,
        feedback=feedback,
        changeover=cfg.changeover,
        min_green=cfg.min_green,
        max_green=cfg.max_green,
        feedback_horizon=horizon if gate_on else float("inf"),
        max_states=STATE_BUDGET,
    )
    try:
        cf = optimize(inp, params, initial_phase=current_phase)
        cf = enforce_max_green(cf, inp, params, initial_phase=current_phase)
    except StateSpaceOverflow:
        # Under deep congestion the horizon gate keeps almost every
        # interleaving alive (an early finish can still pick up feedback
        # charges a later one avoids, so nothing dominates). Dropping the
        # gate makes the feedback term depend only on which clusters were
        # consumed, pruning collapses the state space, and the retry is
        # deterministic. The cooldown stops the agent from burning the
        # same failed attempt on every one-second replan.
        state.gate_off_until = now + GATE_BACKOFF_TICKS
        params = replace(params, feedback_horizon=float("inf"))
        cf = optimize(inp, params, initial_phase=current_phase)
        cf = enforce_max_green(cf, inp, params, initial_phase=current_phase)
    else:
        if gate_on and cf.n_states > GATE_HEAVY_STATES:
            state.gate_off_until = now + GATE_BACKOFF_TICKS
    cmd = first_action(cf, current_phase, green_elapsed, params, n_phases=len(cfg.phases))

    outgoing: list = list(
        project_outflow(cf, g, i, tp.ratios(i), horizon=state.h_cap, issued_at=now)
    )
    agg = aggregate_feedback(cf)
    if state.emit_feedback:
        for u in g.upstream(i):
            for ph in cfg.phases:
                outgoing.append(
                    CongestionFeedbackMsg(
                        src=i,
                        dst=u,
                        phase=ph.id,
                        value=congestion_feedback(cf, ph.id),
                        issued_at=now,
                        aggregate=agg,
                    )
                )
    state.last_aggregate = agg
    state.last_cf = cf
    return cf, cmd, outgoing
