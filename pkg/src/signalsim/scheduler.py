"""Intersection schedule optimization.

A phase schedule is found by forward-recursion dynamic programming over the
input cluster sequence: states are (clusters consumed per phase, last phase
served) and transitions append the next cluster of some phase, paying a
changeover when the phase switches. The objective is cumulative augmented
delay; a second accumulator carries plain local delay so congestion feedback
can be computed from the same schedule without re-deriving it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

from .clusters import Cluster, InputClusterSequence

MAX_GREEN_ITERATIONS = 20


class Mode(Enum):
    BASELINE = "baseline"
    AUGMENTED = "augmented"


class StateSpaceOverflow(RuntimeError):
    """The DP state count exceeded the configured cap (horizon too long)."""


@dataclass(slots=True)
class DelayParams:
    """Objective and timing parameters for one optimization call.

    feedback maps phase id to the effective next-hop delay per vehicle.
    feedback_horizon bounds how far into the schedule the feedback term is
    charged: a cluster started later than this sends its vehicles downstream
    outside the planning window, so no next-hop cost is attributed. The
    default (infinity) charges every cluster.
    """

    mode: Mode = Mode.BASELINE
    feedback: dict[int, float] = field(default_factory=dict)
    changeover: float = 5.0
    min_green: float = 5.0
    max_green: float = 60.0
    feedback_horizon: float = math.inf
    max_states: int = 500_000

    def __post_init__(self):
        for p, v in self.feedback.items():
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"feedback for phase {p} must be finite and >= 0, got {v}")
        if self.changeover < 0:
            raise ValueError("changeover must be >= 0")
        if not (0 < self.min_green <= self.max_green):
            raise ValueError("need 0 < min_green <= max_green")

    def phase_feedback(self, phase: int) -> float:
        if self.mode is Mode.BASELINE:
            return 0.0
        return self.feedback.get(phase, 0.0)


@dataclass(slots=True)
class ScheduledCluster:
    """One cluster placed in the schedule at actual start time ast."""

    cluster: Cluster
    phase: int
    ast: float
    local_delay: float
    augmented_delay: float

    @property
    def finish(self) -> float:
        return self.ast + self.cluster.duration


@dataclass(slots=True)
class ControlFlow:
    """An intersection schedule: phase sequence S plus timed clusters."""

    S: list[int] = field(default_factory=list)
    scheduled: list[ScheduledCluster] = field(default_factory=list)
    total_local_delay: float = 0.0
    total_augmented_delay: float = 0.0
    forced: bool = False  # max-green fallback had to hard-cut the schedule
    n_states: int = 0  # DP states explored to produce this schedule

    def is_empty(self) -> bool:
        return not self.scheduled


@dataclass(frozen=True, slots=True)
class SignalCommand:
    """Executor command: hold the current phase or switch to another."""

    action: str  # "hold" or "switch"
    phase: int | None = None

    @classmethod
    def hold(cls) -> "SignalCommand":
        return cls("hold")

    @classmethod
    def switch(cls, phase: int) -> "SignalCommand":
        return cls("switch", phase)


def cluster_delay(c: Cluster, ast: float) -> float:
    """Delay contributed by serving c at ast: count * (ast - arr)."""
    if ast < c.arr:
        raise ValueError(f"ast {ast} precedes cluster arrival {c.arr}")
    return c.count * (ast - c.arr)


def augmented_delay(c: Cluster, ast: float, d_phase: float) -> float:
    """Local delay plus the estimated next-hop term: count * ((ast - arr) + d̃)."""
    if d_phase < 0:
        raise ValueError(f"feedback must be >= 0, got {d_phase}")
    if ast < c.arr:
        raise ValueError(f"ast {ast} precedes cluster arrival {c.arr}")
    return c.count * ((ast - c.arr) + d_phase)


def optimize(
    inp: InputClusterSequence, params: DelayParams, initial_phase: int | None = None
) -> ControlFlow:
    """Minimum cumulative augmented delay schedule over all interleavings.

    Valid interleavings preserve per-phase cluster order and insert the
    changeover between phase switches. Service is semi-active: ast =
    max(arrival, previous finish plus changeover if switching). When
    initial_phase is given, opening the schedule on any other phase pays the
    changeover too: the rolling executor is already serving that phase, and
    without the charge every replan treats the first switch as free. States
    with equal (consumed, last phase) keep a dominance frontier over finish
    time, cumulative augmented delay, and cumulative local delay. Ties in
    the final objective break toward the lower last phase index, then
    earlier finish.
    """
    phase_ids = sorted(inp.by_phase)
    lists = [inp.by_phase[p] for p in phase_ids]
    counts = [len(lst) for lst in lists]
    if sum(counts) == 0:
        return ControlFlow()
    initial_pi = phase_ids.index(initial_phase) if initial_phase in phase_ids else -1

    nonempty = [pi for pi in range(len(phase_ids)) if counts[pi]]
    if len(nonempty) == 1:
        # Only one phase has demand: the sole interleaving is FIFO service,
        # opening with a changeover when the signal sits on another phase.
        pi = nonempty[0]
        cf = ControlFlow()
        finish = params.changeover if initial_pi not in (-1, pi) else 0.0
        d = params.phase_feedback(phase_ids[pi])
        for c in lists[pi]:
            ast = finish if finish > c.arr else c.arr
            local = c.count * (ast - c.arr)
            aug = local + c.count * d
            cf.S.append(phase_ids[pi])
            cf.scheduled.append(
                ScheduledCluster(c, phase_ids[pi], ast, local_delay=local, augmented_delay=aug)
            )
            cf.total_local_delay += local
            cf.total_augmented_delay += aug
            finish = ast + c.duration
        return cf

    changeover = params.changeover
    fb_horizon = params.feedback_horizon
    # Per-cluster arrays: arrival, duration, count, feedback mass.
    arrs = [[c.arr for c in lst] for lst in lists]
    durs = [[c.duration for c in lst] for lst in lists]
    cnts = [[c.count for c in lst] for lst in lists]
    fb = [params.phase_feedback(p) for p in phase_ids]
    fb_mass = [[cnt * fb[pi] for cnt in cnts[pi]] for pi in range(len(phase_ids))]
    # Prefix sums of feedback mass: slack for dominance under the horizon cutoff.
    fb_prefix = []
    for masses in fb_mass:
        acc, pref = 0.0, [0.0]
        for m in masses:
            acc += m
            pref.append(acc)
        fb_prefix.append(pref)
    fb_total = sum(pref[-1] for pref in fb_prefix)
    gated = math.isfinite(fb_horizon) and fb_total > 0.0

    # Entry: (finish, aug, local, ast, phase_idx, prev_key, prev_entry_idx)
    start_key = (tuple([0] * len(phase_ids)), initial_pi)
    layers: list[dict] = [{start_key: [(0.0, 0.0, 0.0, 0.0, initial_pi, None, -1)]}]
    n_states = 1
    total = sum(counts)

    n_ph = len(phase_ids)
    inf = math.inf
    for _depth in range(total):
        nxt: dict = {}
        for key, entries in layers[-1].items():
            consumed, last = key
            for pi in range(n_ph):
                ci = consumed[pi]
                if ci >= counts[pi]:
                    continue
                arr = arrs[pi][ci]
                dur = durs[pi][ci]
                cnt = cnts[pi][ci]
                mass = fb_mass[pi][ci]
                switch = last != pi and last != -1
                new_key = (consumed[:pi] + (ci + 1,) + consumed[pi + 1:], pi)
                bucket = nxt.get(new_key)
                if bucket is None:
                    bucket = nxt[new_key] = []
                ap = bucket.append
                for ei, e in enumerate(entries):
                    ready = e[0] + changeover if switch else e[0]
                    ast = ready if ready > arr else arr
                    step_local = cnt * (ast - arr)
                    step_aug = step_local + (mass if ast <= fb_horizon else 0.0)
                    ap((ast + dur, e[1] + step_aug, e[2] + step_local, ast, pi, key, ei))
        # Prune each bucket to its dominance frontier. Entries sort by
        # (finish, aug, local, ...); within a bucket the consumed multiset is
        # fixed, so without horizon gating aug - local is a bucket constant
        # and the frontier is the staircase of strictly improving local
        # delay. Under the gate an earlier-finishing state may still incur
        # feedback terms a later one avoids, so it only dominates with a
        # slack covering the whole remaining feedback mass.
        for key, bucket in nxt.items():
            if len(bucket) > 1:
                bucket.sort()
                if not gated:
                    kept = []
                    best = inf
                    for e in bucket:
                        el = e[2]
                        if el < best:
                            kept.append(e)
                            best = el
                else:
                    consumed = key[0]
                    remaining = fb_total - sum(
                        fb_prefix[pi][consumed[pi]] for pi in range(n_ph)
                    )
                    kept = []
                    for e in bucket:
                        ea, el = e[1], e[2]
                        dominated = False
                        for k in kept:
                            slack = remaining if k[0] <= fb_horizon else 0.0
                            if k[1] + slack <= ea and k[2] <= el:
                                dominated = True
                                break
                        if not dominated:
                            kept.append(e)
                nxt[key] = kept
        n_states += sum(len(b) for b in nxt.values())
        if n_states > params.max_states:
            raise StateSpaceOverflow(
                f"{n_states} DP states exceeds cap {params.max_states}; horizon too long"
            )
        layers.append(nxt)

    best = None
    for key in sorted(layers[-1], key=lambda k: k[1]):
        for ei, e in enumerate(layers[-1][key]):
            rank = (e[1], key[1], e[0])
            if best is None or rank < best[0]:
                best = (rank, key, ei)
    assert best is not None

    # Walk parent pointers back to the start, then emit in forward order.
    chain = []
    key, ei = best[1], best[2]
    for depth in range(total, 0, -1):
        e = layers[depth][key][ei]
        chain.append(e)
        key, ei = e[5], e[6]
    chain.reverse()

    cf = ControlFlow(n_states=n_states)
    cursor = [0] * len(phase_ids)
    for e in chain:
        _finish, _aug, _local, ast, pi, _pk, _pe = e
        c = lists[pi][cursor[pi]]
        cursor[pi] += 1
        local = c.count * (ast - c.arr)
        aug = local + c.count * fb[pi]
        cf.S.append(phase_ids[pi])
        cf.scheduled.append(
            ScheduledCluster(c, phase_ids[pi], ast, local_delay=local, augmented_delay=aug)
        )
        cf.total_local_delay += local
        cf.total_augmented_delay += aug
    return cf


def _split_cluster(c: Cluster, room: float) -> tuple[Cluster, Cluster] | None:
    """Split c at the vehicle boundary served within room seconds of green.

    Integer counts split at a whole vehicle; fractional counts split
    proportionally by time. Returns None when no usable boundary exists.
    """
    rate = c.count / c.duration
    k = room * rate
    if float(c.count).is_integer():
        k = math.floor(k + 1e-9)
    if k < 1e-9 or k > c.count - 1e-9:
        return None
    cut = c.arr + k / rate
    head = Cluster(k, c.arr, cut, c.origin, c.source)
    tail = Cluster(c.count - k, cut, c.dep, c.origin, c.source)
    return head, tail


def _first_violation(
    cf: ControlFlow, max_green: float, cut_ids: set[int]
) -> tuple[int, float] | None:
    """Index and run start of the first cluster whose green run exceeds max_green.

    A green run restarts on a phase change or at a split suffix (the signal
    cuts there when executing). Idle gaps within a phase do not restart the
    run; the conservative reading splits more, never less.
    """
    run_start = 0.0
    prev_phase = None
    for idx, sc in enumerate(cf.scheduled):
        if sc.phase != prev_phase or id(sc.cluster) in cut_ids:
            run_start = sc.ast
            prev_phase = sc.phase
        if sc.finish > run_start + max_green + 1e-9:
            return idx, run_start
    return None


def _hard_cut(cf: ControlFlow, params: DelayParams) -> ControlFlow:
    """Retime the schedule in its existing order, forcing a red gap at every
    max-green boundary. Fallback when splitting plus re-solving did not
    converge."""
    out = ControlFlow(forced=True)
    finish = 0.0
    run_start = 0.0
    prev_phase = None
    queue = [(sc.cluster, sc.phase) for sc in reversed(cf.scheduled)]
    while queue:
        c, phase = queue.pop()
        if prev_phase is None:
            ast = c.arr
            run_start = ast
        elif phase != prev_phase:
            ast = max(finish + params.changeover, c.arr)
            run_start = ast
        else:
            ast = max(finish, c.arr)
        while True:
            boundary = run_start + params.max_green
            if ast + c.duration <= boundary + 1e-9:
                break
            room = boundary - ast
            parts = _split_cluster(c, room) if room > 1e-9 else None
            if parts is not None:
                head, tail = parts
                queue.append((tail, phase))
                c = head
                break
            if ast <= run_start + 1e-9:
                break  # heads its run and cannot split: serve whole
            # Defer past the boundary: leave the phase and come back,
            # spending two changeovers of forced red.
            ast = max(boundary + 2 * params.changeover, c.arr)
            run_start = ast
        local = c.count * (ast - c.arr)
        aug = local + c.count * params.phase_feedback(phase)
        out.S.append(phase)
        out.scheduled.append(ScheduledCluster(c, phase, ast, local, aug))
        out.total_local_delay += local
        out.total_augmented_delay += aug
        finish = ast + c.duration
        prev_phase = phase
    return out


def enforce_max_green(
    cf: ControlFlow,
    inp: InputClusterSequence,
    params: DelayParams,
    initial_phase: int | None = None,
) -> ControlFlow:
    """Split clusters so no continuous green exceeds max_green.

    The first offending cluster is split at the vehicle boundary where
    elapsed green reaches max_green and the schedule is re-solved; split
    suffixes start a fresh green run for later checks. After the iteration
    cap the schedule is hard-cut instead and flagged.
    """
    work = {p: list(lst) for p, lst in inp.by_phase.items()}
    cut_ids: set[int] = set()
    for _ in range(MAX_GREEN_ITERATIONS):
        viol = _first_violation(cf, params.max_green, cut_ids)
        if viol is None:
            return cf
        idx, run_start = viol
        sc = cf.scheduled[idx]
        room = run_start + params.max_green - sc.ast
        parts = _split_cluster(sc.cluster, room)
        if parts is None:
            break
        head, tail = parts
        if id(sc.cluster) in cut_ids:
            cut_ids.add(id(head))
        cut_ids.add(id(tail))
        lst = work[sc.phase]
        pos = next(i for i, c in enumerate(lst) if c is sc.cluster)
        work[sc.phase] = lst[:pos] + [head, tail] + lst[pos + 1:]
        cf = optimize(
            InputClusterSequence(by_phase=work, horizon=inp.horizon),
            params,
            initial_phase=initial_phase,
        )
    out = _hard_cut(cf, params)
    return out


def first_action(
    cf: ControlFlow,
    current_phase: int,
    green_elapsed: float,
    params: DelayParams,
    n_phases: int | None = None,
) -> SignalCommand:
    """Translate the schedule head into hold or switch for this tick.

    Never switches before min_green. Forces a switch once green_elapsed
    reaches max_green even if the schedule keeps the current phase: the
    rolling replan measures runs from now, so without this backstop a
    persistent queue could hold green forever.
    """
    head = cf.S[0] if cf.S else None
    if green_elapsed >= params.max_green:
        target = next((p for p in cf.S if p != current_phase), None)
        if target is None and n_phases is not None and n_phases > 1:
            target = current_phase % n_phases + 1
        if target is not None:
            return SignalCommand.switch(target)
        return SignalCommand.hold()
    if head is None or head == current_phase:
        return SignalCommand.hold()
    if green_elapsed < params.min_green:
        return SignalCommand.hold()
    return SignalCommand.switch(head)
