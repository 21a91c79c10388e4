"""Trace feedback values through a congested dcc run."""
from signalsim.controllers import build_controller
from signalsim.coordination import _phase_feedback, congestion_feedback
from signalsim.metrics import collect
from signalsim.scenario import scenario_from_dict
from signalsim.sim import World

raw = {
    "network": {"kind": "grid", "rows": 1, "cols": 2, "link_length": 80,
                 "boundary_length": 150, "lanes": 1, "straight_bias": 0.8},
    "demand": {
        "sources": [
            {"sides": ["west"], "rate_windows": [[0, 1800, 1100]], "group": "main"},
            {"sides": ["east"], "rate_windows": [[0, 1800, 400]], "group": "main"},
            {"sides": ["north", "south"], "rate_windows": [[0, 1800, 700]], "group": "cross"},
        ],
    },
    "signals": {"changeover": 5.0, "min_green": 5.0, "max_green": 60.0},
    "run": {"duration": 900, "warmup": 300, "seed": 2},
}
sc = scenario_from_dict(raw, name="dbg")
ctl = build_controller(sc, "dcc")
world = World(sc)

for t in range(900):
    world.step(ctl)
    if t % 100 == 99:
        for i in sorted(ctl.agents):
            ag = ctl.agents[i]
            cf = ag.last_cf
            nsched = len(cf.scheduled) if cf else 0
            tails = [round(sc_.ast, 1) for sc_ in (cf.scheduled if cf else [])][-3:]
            fb_in = {(k[0], k[1]): round(m.value, 3) for k, m in ag.inbox_feedback.items()}
            out_fb = {p.id: round(congestion_feedback(cf, p.id), 3)
                      for p in sc.graph.intersections[i].phases} if cf else {}
            qs = {r: world.links[r].occupancy for r in sc.graph.entry_roads(i)}
            print(f"t={t+1} i={i} sched={nsched} tail_ast={tails} "
                  f"d_hat_out={out_fb} fb_inbox={fb_in} entryocc={qs}")
        print()
b = collect(world, scenario=sc.name, controller="dcc", seed=2)
print("mean delay", round(b.mean_delay(), 2))
