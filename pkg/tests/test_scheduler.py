import math
import random

import pytest

from signalsim.clusters import Cluster, InputClusterSequence
from signalsim.oracle import brute_force_optimize, interleaving_count
from signalsim.scheduler import (
    DelayParams,
    Mode,
    SignalCommand,
    StateSpaceOverflow,
    augmented_delay,
    cluster_delay,
    enforce_max_green,
    first_action,
    optimize,
)

from conftest import make_input


def test_cluster_delay_values():
    assert cluster_delay(Cluster(4, 10.0, 18.0, 1), ast=15.0) == 20.0
    assert cluster_delay(Cluster(2.5, 0.0, 5.0, 1), ast=8.0) == 20.0
    assert cluster_delay(Cluster(3, 7.0, 13.0, 1), ast=7.0) == 0.0
    with pytest.raises(ValueError):
        cluster_delay(Cluster(1, 5.0, 7.0, 1), ast=4.0)


def test_augmented_delay_values():
    assert augmented_delay(Cluster(2, 0.0, 4.0, 1), ast=5.0, d_phase=3.0) == 16.0
    assert augmented_delay(Cluster(1, 7.0, 9.0, 1), ast=7.0, d_phase=4.0) == 4.0
    assert augmented_delay(Cluster(2, 0.0, 4.0, 1), ast=5.0, d_phase=0.0) == 10.0
    with pytest.raises(ValueError):
        augmented_delay(Cluster(1, 0.0, 2.0, 1), ast=0.0, d_phase=-1.0)


def test_optimize_empty_input():
    cf = optimize(make_input({1: [], 2: []}), DelayParams())
    assert cf.is_empty()
    assert cf.total_local_delay == 0.0


def test_optimize_single_cluster_serves_at_arrival():
    cf = optimize(make_input({1: [(3, 12.0)], 2: []}), DelayParams())
    assert cf.S == [1]
    assert cf.scheduled[0].ast == 12.0
    assert cf.total_local_delay == 0.0


def test_optimize_prefers_cheap_order():
    # Serving the large waiting platoon first strands one vehicle for its
    # service time plus two changeovers; the reverse strands eight.
    inp = make_input({1: [(8, 0.0)], 2: [(1, 0.0)]})
    cf = optimize(inp, DelayParams(changeover=5.0))
    assert cf.S == [1, 2]
    # phase 2 starts at 16 + 5: delay 1 * 21
    assert cf.total_local_delay == pytest.approx(21.0)


def test_optimize_semi_active_timing():
    # Same phase, no changeover inside a phase: second cluster waits for the
    # first to finish discharging.
    inp = make_input({1: [(2, 0.0), (1, 2.0)], 2: []})
    cf = optimize(inp, DelayParams())
    a, b = cf.scheduled
    assert a.ast == 0.0
    assert b.ast == pytest.approx(4.0)
    assert cf.total_local_delay == pytest.approx(2.0)


def test_optimize_charges_changeover_on_switch():
    inp = make_input({1: [(1, 0.0)], 2: [(1, 0.0)]})
    cf = optimize(inp, DelayParams(changeover=5.0))
    first, second = cf.scheduled
    assert first.ast == 0.0
    assert second.ast == pytest.approx(first.finish + 5.0)


def test_initial_phase_charges_first_switch():
    # One waiting cluster on phase 2. With the signal already on phase 1 the
    # service cannot start before the changeover has run.
    inp = make_input({1: [], 2: [(2, 0.0)]})
    cf = optimize(inp, DelayParams(changeover=5.0), initial_phase=1)
    assert cf.scheduled[0].ast == pytest.approx(5.0)
    cf2 = optimize(inp, DelayParams(changeover=5.0), initial_phase=2)
    assert cf2.scheduled[0].ast == 0.0


def test_initial_phase_breaks_symmetric_tie():
    # Identical demand both phases: continuing the active phase avoids one
    # changeover, so the optimizer must open with it.
    inp = make_input({1: [(2, 0.0)], 2: [(2, 0.0)]})
    for start in (1, 2):
        cf = optimize(inp, DelayParams(changeover=5.0), initial_phase=start)
        assert cf.S[0] == start


def test_augmented_mode_shifts_objective_not_order():
    # Uniform feedback adds count * d to every cluster regardless of order,
    # so the schedule cannot change when every phase gets the same d.
    inp = make_input({1: [(3, 0.0), (2, 10.0)], 2: [(4, 2.0)]})
    base = optimize(inp, DelayParams(mode=Mode.BASELINE, changeover=5.0))
    aug = optimize(
        inp,
        DelayParams(mode=Mode.AUGMENTED, feedback={1: 7.0, 2: 7.0}, changeover=5.0),
    )
    assert aug.S == base.S
    assert [sc.ast for sc in aug.scheduled] == [sc.ast for sc in base.scheduled]
    assert aug.total_augmented_delay == pytest.approx(
        base.total_local_delay + 7.0 * inp.total_count()
    )


def test_augmented_zero_feedback_equals_baseline():
    rng = random.Random(3)
    for _ in range(50):
        by_phase = {
            p: [(rng.randint(1, 6), float(rng.randint(0, 40))) for _ in range(rng.randint(0, 3))]
            for p in (1, 2)
        }
        inp = make_input(by_phase)
        base = optimize(inp, DelayParams(mode=Mode.BASELINE, changeover=5.0))
        aug = optimize(
            inp, DelayParams(mode=Mode.AUGMENTED, feedback={}, changeover=5.0)
        )
        assert aug.S == base.S
        assert aug.total_local_delay == pytest.approx(base.total_local_delay)


def test_feedback_horizon_redirects_pressure():
    # Phase 1 carries downstream cost. With the horizon open the optimizer
    # defers phase 1 behind phase 2; truncating the horizon to exclude any
    # late start makes deferral pointless and the plain order returns.
    inp = make_input({1: [(4, 0.0)], 2: [(3, 0.0)]})
    open_params = DelayParams(
        mode=Mode.AUGMENTED, feedback={1: 30.0}, changeover=5.0, feedback_horizon=math.inf
    )
    assert optimize(inp, open_params).S == [1, 2]
    gated = DelayParams(
        mode=Mode.AUGMENTED, feedback={1: 30.0}, changeover=5.0, feedback_horizon=5.0
    )
    # Starting phase 1 after t=5 dodges 4 * 30 of feedback at the price of
    # local delay: serve 2 first, then 1 outside the horizon.
    assert optimize(inp, gated).S == [2, 1]


def test_optimize_matches_oracle_exhaustively():
    rng = random.Random(11)
    for trial in range(300):
        by_phase = {}
        for p in (1, 2):
            specs = []
            t = 0.0
            for _ in range(rng.randint(0, 4)):
                t += rng.uniform(0, 20)
                specs.append((rng.randint(1, 8), round(t, 1)))
            by_phase[p] = specs
        inp = make_input(by_phase)
        if trial % 2:
            params = DelayParams(
                mode=Mode.AUGMENTED,
                feedback={1: rng.uniform(0, 25), 2: rng.uniform(0, 25)},
                changeover=5.0,
                feedback_horizon=rng.choice([math.inf, rng.uniform(10, 80)]),
            )
        else:
            params = DelayParams(mode=Mode.BASELINE, changeover=5.0)
        start = rng.choice([None, 1, 2])
        cf = optimize(inp, params, initial_phase=start)
        ref = brute_force_optimize(inp, params, initial_phase=start)
        got = sum(
            sc.cluster.count
            * ((sc.ast - sc.cluster.arr) + (params.phase_feedback(sc.phase)
               if sc.ast <= params.feedback_horizon else 0.0))
            for sc in cf.scheduled
        )
        assert got == pytest.approx(ref.objective, abs=1e-9)
        assert [(sc.phase, sc.ast) for sc in cf.scheduled] == [
            (p, pytest.approx(a)) for p, a in ref.schedule
        ]


def test_optimize_three_phases_against_oracle():
    rng = random.Random(23)
    for _ in range(40):
        by_phase = {}
        for p in (1, 2, 3):
            specs = []
            t = 0.0
            for _ in range(rng.randint(0, 2)):
                t += rng.uniform(0, 25)
                specs.append((rng.randint(1, 5), round(t, 1)))
            by_phase[p] = specs
        inp = make_input(by_phase)
        params = DelayParams(changeover=4.0)
        cf = optimize(inp, params)
        ref = brute_force_optimize(inp, params)
        assert cf.total_local_delay == pytest.approx(ref.objective, abs=1e-9)


def test_splitting_never_hurts():
    # A split cluster admits every schedule the whole cluster admits, so the
    # optimum over the split input is never worse.
    rng = random.Random(5)
    params = DelayParams(changeover=5.0)
    for _ in range(40):
        count = rng.randint(2, 8)
        arr = float(rng.randint(0, 20))
        other = [(rng.randint(1, 6), float(rng.randint(0, 30)))]
        whole = make_input({1: [(count, arr)], 2: other})
        k = rng.randint(1, count - 1)
        dur = count / 0.5
        cut = arr + (k / count) * dur
        split_inp = InputClusterSequence(
            by_phase={
                1: [Cluster(k, arr, cut, 1), Cluster(count - k, cut, arr + dur, 1)],
                2: whole.by_phase[2],
            },
            horizon=600.0,
        )
        a = optimize(whole, params).total_local_delay
        b = optimize(split_inp, params).total_local_delay
        assert b <= a + 1e-9


def test_interleaving_count():
    inp = make_input({1: [(1, 0.0), (1, 5.0)], 2: [(1, 0.0)]})
    assert interleaving_count(inp) == 3
    inp = make_input({1: [(1, 0.0)] * 3, 2: [(1, 0.0)] * 3})
    assert interleaving_count(inp) == 20


def test_state_space_overflow():
    specs = [(1, float(t)) for t in range(0, 60, 4)]
    inp = make_input({1: specs, 2: specs})
    with pytest.raises(StateSpaceOverflow):
        optimize(inp, DelayParams(max_states=50))


def test_enforce_max_green_splits_long_run():
    # 35 vehicles discharge for 70 s; max_green 60 forces a cut at the 30th
    # vehicle. The executor inserts the red at the split boundary, so the
    # schedule itself keeps the pieces back to back.
    inp = make_input({1: [(35, 0.0)], 2: []})
    params = DelayParams(changeover=5.0, max_green=60.0)
    cf = optimize(inp, params)
    cf = enforce_max_green(cf, inp, params)
    counts = [sc.cluster.count for sc in cf.scheduled]
    assert counts[0] == pytest.approx(30.0)
    assert sum(counts) == pytest.approx(35.0)
    assert all(sc.cluster.duration <= 60.0 + 1e-6 for sc in cf.scheduled)
    assert not cf.forced


def test_enforce_max_green_repeated_splits():
    inp = make_input({1: [(100, 0.0)], 2: [(2, 10.0)]})
    params = DelayParams(changeover=5.0, max_green=60.0)
    cf = optimize(inp, params)
    cf = enforce_max_green(cf, inp, params)
    assert all(sc.cluster.duration <= 60.0 + 1e-6 for sc in cf.scheduled)
    assert sum(sc.cluster.count for sc in cf.scheduled) == pytest.approx(102.0)
    # FIFO within each phase survives the splitting
    for p in (1, 2):
        asts = [sc.ast for sc in cf.scheduled if sc.phase == p]
        assert asts == sorted(asts)


def test_enforce_max_green_noop_when_legal():
    inp = make_input({1: [(4, 0.0)], 2: [(3, 2.0)]})
    params = DelayParams(changeover=5.0, max_green=60.0)
    cf = optimize(inp, params)
    out = enforce_max_green(cf, inp, params)
    assert out is cf


def test_first_action_holds_until_min_green():
    params = DelayParams(changeover=5.0, min_green=5.0, max_green=60.0)
    cf = optimize(make_input({1: [], 2: [(3, 0.0)]}), params, initial_phase=1)
    assert first_action(cf, current_phase=1, green_elapsed=2.0, params=params) == SignalCommand.hold()
    assert first_action(cf, current_phase=1, green_elapsed=5.0, params=params) == SignalCommand.switch(2)


def test_first_action_holds_on_matching_head():
    params = DelayParams()
    cf = optimize(make_input({1: [(3, 0.0)], 2: [(1, 30.0)]}), params, initial_phase=1)
    assert cf.S[0] == 1
    assert first_action(cf, 1, 20.0, params) == SignalCommand.hold()


def test_first_action_max_green_backstop():
    params = DelayParams(min_green=5.0, max_green=60.0)
    # Schedule keeps phase 1 but green already ran out: switch to the first
    # other scheduled phase, or round-robin when none is queued.
    cf = optimize(make_input({1: [(3, 0.0)], 2: [(1, 10.0)]}), params, initial_phase=1)
    act = first_action(cf, 1, 60.0, params)
    assert act == SignalCommand.switch(2)
    lone = optimize(make_input({1: [(3, 0.0)], 2: []}), params, initial_phase=1)
    assert first_action(lone, 1, 60.0, params, n_phases=2) == SignalCommand.switch(2)
    assert first_action(lone, 1, 59.0, params, n_phases=2) == SignalCommand.hold()


def test_first_action_empty_schedule_holds():
    params = DelayParams()
    cf = optimize(make_input({1: [], 2: []}), params)
    assert first_action(cf, 1, 10.0, params) == SignalCommand.hold()


def test_delay_params_validation():
    with pytest.raises(ValueError):
        DelayParams(feedback={1: -2.0})
    with pytest.raises(ValueError):
        DelayParams(changeover=-1.0)
    with pytest.raises(ValueError):
        DelayParams(min_green=0.0)
    with pytest.raises(ValueError):
        DelayParams(min_green=10.0, max_green=5.0)
