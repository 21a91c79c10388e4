"""Exhaustive schedule enumeration for cross-checking the optimizer.

Walks every order-preserving interleaving of the per-phase cluster lists,
timing each with the same semi-active rules the optimizer uses, and keeps
the best by the identical objective and tie-break. Kept deliberately free
of pruning so it stays an independent reference.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .clusters import InputClusterSequence
from .scheduler import DelayParams

MAX_ORACLE_CLUSTERS = 16


@dataclass(slots=True)
class OracleResult:
    objective: float
    total_local_delay: float
    total_augmented_delay: float
    schedule: list[tuple[int, float]]  # (phase id, ast) in service order


def brute_force_optimize(
    inp: InputClusterSequence, params: DelayParams, initial_phase: int | None = None
) -> OracleResult:
    """Best schedule over all valid interleavings, by full enumeration."""
    phase_ids = sorted(inp.by_phase)
    lists = [inp.by_phase[p] for p in phase_ids]
    total = sum(len(lst) for lst in lists)
    if total > MAX_ORACLE_CLUSTERS:
        raise ValueError(f"{total} clusters is too many to enumerate")
    if total == 0:
        return OracleResult(0.0, 0.0, 0.0, [])

    changeover = params.changeover
    fb = [params.phase_feedback(p) for p in phase_ids]
    fb_horizon = params.feedback_horizon
    n = len(lists)
    best: tuple | None = None

    consumed = [0] * n
    acc: list[tuple[int, float]] = []

    def rec(last: int, finish: float, aug: float, local: float) -> None:
        nonlocal best
        if len(acc) == total:
            rank = (aug, last, finish)
            if best is None or rank < best[0]:
                best = (rank, local, list(acc))
            return
        for pi in range(n):
            ci = consumed[pi]
            if ci >= len(lists[pi]):
                continue
            c = lists[pi][ci]
            ready = finish + changeover if (last != -1 and last != pi) else finish
            ast = max(ready, c.arr)
            step_local = c.count * (ast - c.arr)
            step_aug = step_local + (c.count * fb[pi] if ast <= fb_horizon else 0.0)
            consumed[pi] += 1
            acc.append((pi, ast))
            rec(pi, ast + c.duration, aug + step_aug, local + step_local)
            acc.pop()
            consumed[pi] -= 1

    initial_pi = phase_ids.index(initial_phase) if initial_phase in phase_ids else -1
    rec(initial_pi, 0.0, 0.0, 0.0)
    assert best is not None
    rank, local, order = best
    fb_const = sum(
        c.count * fb[pi] for pi in range(n) for c in lists[pi]
    )
    return OracleResult(
        objective=rank[0],
        total_local_delay=local,
        total_augmented_delay=local + fb_const,
        schedule=[(phase_ids[pi], ast) for pi, ast in order],
    )


def interleaving_count(inp: InputClusterSequence) -> int:
    """Number of valid interleavings (multinomial over per-phase lengths)."""
    sizes = [len(lst) for lst in inp.by_phase.values()]
    out = math.factorial(sum(sizes))
    for s in sizes:
        out //= math.factorial(s)
    return out
