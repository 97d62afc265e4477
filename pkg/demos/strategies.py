"""Sequential, parallel and two-way searches compared on a 64-switch ring.

Prints the probe count and worst-case hop latency per strategy, then the
analytical table for a ring of 65536 positions.

    python demos/strategies.py
"""
from ringprobe import (ControlDomain, FailureState, RingView, Topology, build_ring,
                       locate_bidirectional, locate_parallel, ring_fabric, set_failures)
from ringprobe.evaluation import run_bounds

n = 64
t = Topology.from_edges([(i, (i + 1) % n) for i in range(n)], name="ring64")
ring = build_ring(t)
fabric = ring_fabric(t, ring)
view = RingView.create(ring, ControlDomain({0}))
broken = [set_failures(fabric, FailureState("symmetric", {e})) for e in range(n)]

print(f"{'strategy':<18}{'max probes':>11}{'max latency':>13}")
for name, run in [("sequential", lambda f: locate_parallel(f, view, m=1)),
                  ("parallel m=3", lambda f: locate_parallel(f, view, m=3)),
                  ("two-way", lambda f: locate_bidirectional(f, view)),
                  ("two-way m=3", lambda f: locate_bidirectional(f, view, m=3))]:
    reports = [run(f) for f in broken]
    assert all(r.located == {e} for e, r in enumerate(reports))
    print(f"{name:<18}{max(r.messages for r in reports):>11}{max(r.latency for r in reports):>13.0f}")

print("\nanalytical bounds, L=65536, 1 us per hop")
study = run_bounds()
for row in study.records:
    print(f"  m={row.m:<6} probes={row.M:<6} worst case {row.T_UB_s_3sf} s")
print(f"  sequential window {study.summary['sequential_lower_s'] * 1e3:.1f} ms"
      f" .. {study.summary['sequential_upper_s']:.3f} s")
