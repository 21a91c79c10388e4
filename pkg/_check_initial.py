"""DP vs oracle with random initial phases, then the 5-controller smoke run."""
import random
import time

from signalsim.clusters import Cluster, InputClusterSequence
from signalsim.oracle import brute_force_optimize
from signalsim.scheduler import DelayParams, Mode, optimize

rng = random.Random(42)
bad = 0
t0 = time.time()
for trial in range(400):
    n_phases = rng.choice([2, 2, 3])
    by_phase = {}
    for p in range(1, n_phases + 1):
        k = rng.randint(0, 4)
        cs = []
        for _ in range(k):
            arr = rng.randint(0, 60)
            cnt = rng.randint(1, 8)
            dur = cnt / 0.5
            cs.append(Cluster(cnt, arr, arr + dur, origin=p))
        cs.sort(key=lambda c: c.arr)
        fixed = []
        t = 0.0
        for c in cs:
            a = max(c.arr, t)
            fixed.append(Cluster(c.count, a, a + c.duration, origin=p))
            t = a + c.duration
        by_phase[p] = fixed
    if sum(len(v) for v in by_phase.values()) == 0:
        continue
    inp = InputClusterSequence(by_phase=by_phase, horizon=300.0)
    mode = rng.choice([Mode.BASELINE, Mode.AUGMENTED])
    fb = {p: rng.choice([0.0, rng.uniform(0, 30)]) for p in by_phase}
    hz = rng.choice([float("inf"), rng.uniform(10, 120)])
    params = DelayParams(
        mode=mode, feedback=fb, changeover=5.0, feedback_horizon=hz
    )
    init = rng.choice([None] + list(by_phase))
    got = optimize(inp, params, initial_phase=init)
    # recompute DP objective with the same gating for comparison
    obj = 0.0
    for sc in got.scheduled:
        step = sc.local_delay
        if mode is Mode.AUGMENTED and sc.ast <= hz:
            step += sc.cluster.count * fb.get(sc.phase, 0.0)
        obj += step
    want = brute_force_optimize(inp, params, initial_phase=init)
    if abs(obj - want.objective) > 1e-6 or abs(got.total_local_delay - want.total_local_delay) > 1e-6:
        bad += 1
        print("MISMATCH", trial, init, obj, want.objective,
              got.total_local_delay, want.total_local_delay)
        if bad > 3:
            break
print(f"oracle cross-check: {400 - bad}/400 ok in {time.time() - t0:.1f}s")
