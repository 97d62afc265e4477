"""Randomised invariants over small connected multigraphs."""
import math
from collections import Counter

from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from ringprobe.diagnosis import (RingView, ceil_log, cost_bounds, locate_bidirectional,
                                 locate_multi, locate_parallel, locate_single, ring_fabric)
from ringprobe.rules import build_ring, compile_ring, total_static_rules
from ringprobe.simulator import ASYMMETRIC, SYMMETRIC, FailureState, set_failures
from ringprobe.topology import (Arc, ControlDomain, Topology, directed_arcs, find_bridges,
                                rule_lower_bound)
from ringprobe.walks import (euler_cycle_directed, improve_walk, reverse_walk, solve_cpp,
                             validate_walk, walk_metrics)

import oracles

PROFILE = settings(max_examples=40, deadline=None, suppress_health_check=[HealthCheck.too_slow])


@st.composite
def graphs(draw, max_switches=8, max_extra=6, multi=True):
    n = draw(st.integers(2, max_switches))
    pairs = [(draw(st.integers(0, i - 1)), i) for i in range(1, n)]
    for _ in range(draw(st.integers(0, max_extra))):
        u = draw(st.integers(0, n - 1))
        v = draw(st.integers(0, n - 1))
        if u != v and (multi or {u, v} not in [set(p) for p in pairs]):
            pairs.append((u, v))
    order = draw(st.permutations(range(len(pairs))))
    return Topology.from_edges([pairs[i] for i in order], n)


@PROFILE
@given(graphs(max_switches=10, max_extra=10))
def test_bridges_match_brute_force(t):
    b = find_bridges(t)
    assert set(b) == oracles.bridges(t)
    assert rule_lower_bound(t) >= t.num_edges
    assert (rule_lower_bound(t) == 2 * t.num_edges) == (len(b) == t.num_edges)


@PROFILE
@given(graphs())
def test_directed_arcs_pair_up(t):
    arcs = directed_arcs(t)
    assert len(arcs) == 2 * t.num_edges
    by_edge = Counter(a.edge for a in arcs)
    assert set(by_edge.values()) <= {2}
    assert all(a.reversed() in arcs for a in arcs)


@PROFILE
@given(graphs(max_switches=15, max_extra=12))
def test_postman_tour_shape(t):
    w = solve_cpp(t)
    assert validate_walk(w, t)
    assert t.num_edges <= len(w) <= 2 * t.num_edges
    all_even = all(len(x) % 2 == 0 for x in t.incidence())
    assert (len(w) == t.num_edges) == all_even
    assert max(Counter(a.edge for a in w.arcs).values()) <= 2


@PROFILE
@given(graphs(max_switches=6, max_extra=4))
def test_postman_tour_is_shortest(t):
    assert len(solve_cpp(t)) == oracles.shortest_cover_length(t)


@PROFILE
@given(graphs(max_switches=9, max_extra=8))
def test_improvement_keeps_length_and_cover(t):
    w = solve_cpp(t)
    better = improve_walk(w, t)
    assert len(better) == len(w)
    assert validate_walk(better, t)
    assert walk_metrics(better).duplicates >= walk_metrics(w).duplicates
    assert walk_metrics(better).rule_cost >= rule_lower_bound(t)


@PROFILE
@given(graphs())
def test_reverse_and_directed_cycle(t):
    w = improve_walk(solve_cpp(t), t)
    rev = reverse_walk(w)
    assert reverse_walk(rev) == w
    assert walk_metrics(rev).duplicates == walk_metrics(w).duplicates
    d = euler_cycle_directed(t)
    assert len(d) == 2 * t.num_edges and walk_metrics(d).duplicates == 0
    assert validate_walk(d, t, "asymmetric")


@PROFILE
@given(graphs())
def test_compiled_ring_replays_and_counts(t):
    ring = build_ring(t)
    L, kappa = ring.length, walk_metrics(ring.walk).duplicates
    assert total_static_rules([ring.cw, ring.ccw, ring.bounce_1]) == 3 * L - 2 * kappa
    assert total_static_rules(ring.static_sets()) == 4 * L - 2 * kappa
    assert compile_ring(ring.walk) == compile_ring(ring.walk)
    f = ring_fabric(t, ring)
    for p in range(L):
        view = RingView.create(ring, ControlDomain({ring.walk.switch_at(p)}))
        r = locate_single(f, view, position=p)
        assert r.verdict == "healthy" and r.total_hops == L


@PROFILE
@given(graphs(), st.data())
def test_single_failure_localised_by_every_strategy(t, data):
    ring = build_ring(t)
    f = ring_fabric(t, ring)
    L = ring.length
    e = data.draw(st.integers(0, t.num_edges - 1))
    p = data.draw(st.integers(0, L - 1))
    m = data.draw(st.integers(1, 5))
    view = RingView.create(ring, ControlDomain({ring.walk.switch_at(p)}))
    broken = set_failures(f, FailureState(SYMMETRIC, {e}))
    single = locate_single(broken, view, position=p)
    assert single.located == {e}
    assert single.messages <= 1 + math.ceil(math.log2(L))
    par = locate_parallel(broken, view, position=p, m=m)
    assert par.located == {e} and par.messages <= 1 + m * ceil_log(L, m + 1)
    assert locate_bidirectional(broken, view, position=p, m=m).located == {e}
    assert locate_multi(broken, view).located == {e}


@PROFILE
@given(graphs(), st.data())
def test_multiple_failures(t, data):
    ring = build_ring(t)
    f = ring_fabric(t, ring)
    failed = data.draw(st.sets(st.integers(0, t.num_edges - 1), min_size=1, max_size=4))
    s = data.draw(st.integers(0, t.num_switches - 1))
    view = RingView.create(ring, ControlDomain({s}))
    broken = set_failures(f, FailureState(SYMMETRIC, failed))
    p = view.injection_points[0]
    _, first = oracles.first_failed(ring.walk.arcs, p, failed)
    assert locate_single(broken, view).located == {first}
    multi = locate_multi(broken, view)
    assert 1 <= len(multi.located) <= 2 * view.beta
    assert multi.located <= failed


@PROFILE
@given(graphs(max_switches=6, max_extra=4), st.data())
def test_symmetric_failure_is_both_arcs(t, data):
    ring = build_ring(t)
    f = ring_fabric(t, ring)
    e = t.edges[data.draw(st.integers(0, t.num_edges - 1))]
    view = RingView.create(ring, ControlDomain({0}))
    sym = locate_single(set_failures(f, FailureState(SYMMETRIC, {e.id})), view)
    asym = locate_single(set_failures(f, FailureState(ASYMMETRIC, {
        Arc(e.id, e.u, e.v), Arc(e.id, e.v, e.u)})), view)
    assert [(p.target, p.returned) for p in sym.probes] == [(p.target, p.returned) for p in asym.probes]


@PROFILE
@given(graphs(max_switches=6, max_extra=4), st.data())
def test_asymmetric_arc_localised(t, data):
    ring = build_ring(t, mode="asymmetric")
    f = ring_fabric(t, ring)
    arc = ring.walk.arcs[data.draw(st.integers(0, ring.length - 1))]
    view = RingView.create(ring, ControlDomain({0}))
    r = locate_single(set_failures(f, FailureState(ASYMMETRIC, {arc})), view)
    assert arc in r.located and len(r.located) == 2


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 10 ** 6), st.integers(1, 300))
def test_message_bound_formula(L, m):
    b = cost_bounds(L, m=m)
    t = (b.messages - 1) // m
    assert (m + 1) ** t >= L and (t == 0 or (m + 1) ** (t - 1) < L)
    assert b.latency_upper == L + 2 * L * t
    assert cost_bounds(L, m=m, bidirectional=True).latency_upper == L + L * t
