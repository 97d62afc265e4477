"""From topology to a located link failure on the seven-switch example.

Run from the repository root::

    python demos/walkthrough.py
"""
from pathlib import Path

from ringprobe import (ControlDomain, FailureState, RingView, build_ring, improve_walk,
                       load_topology, locate_single, ring_fabric, set_failures, solve_cpp,
                       verify, walk_metrics)
from ringprobe.rules import render_table

HERE = Path(__file__).resolve().parents[1]
t = load_topology(HERE / "corpus" / "fixtures" / "fig1.edgelist")
print(f"{t.num_switches} switches, {t.num_edges} links")

# A shortest closed walk over every link, then reshuffled so repeated arcs share rules.
tour = solve_cpp(t)
walk = improve_walk(tour, t)
for label, w in (("postman tour", tour), ("improved", walk)):
    m = walk_metrics(w)
    print(f"{label:>13}: L={m.length} duplicates={m.duplicates} rules={m.rule_cost}")
print("ring:", " ".join(t.label(s) for s in walk.switches()))

# Compile forwarding, reverse-direction and bounce-back rules.
ring = build_ring(t)
print(f"\nclockwise rules ({len(ring.cw.rules)}):")
print(render_table([ring.cw], t.labels))

# One probe around the ring confirms the network is healthy.
fabric = ring_fabric(t, ring)
view = RingView.create(ring, ControlDomain({t.labels.index("s1")}))
print("\nhealthy:", verify(fabric, view).verdict)

# Break s4-s7 and bisect.
broken = set_failures(fabric, FailureState("symmetric", {t.find_edge("s4", "s7")}))
report = locate_single(broken, view)
for p in report.probes:
    where = "full loop" if p.target is None else f"bounce at {t.label(ring.walk.switch_at(p.target))}"
    print(f"  probe {where:<18} {'returned' if p.returned else 'lost':<8} {p.hops} hops")
(edge,) = report.located
print(f"located {t.edge_label(edge)} with {report.messages} probes, {report.total_hops} hops")
