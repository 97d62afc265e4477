import json
import random

import pytest

from ringprobe.rules import FLOW_CCW, FLOW_CW, Header, Match, Rule, RuleSet, Forward, compile_ring
from ringprobe.simulator import (ASYMMETRIC, DROP_FAILED_LINK, DROP_NO_MATCH, DROP_TTL,
                                 SYMMETRIC, FabricError, FailureState, ProbeOutcome, build_fabric,
                                 inject, latency_of, set_failures)
from ringprobe.topology import Arc, TopologyError
from ringprobe.walks import Walk

from conftest import FIG1_RING, random_closed_walk, random_connected


@pytest.fixture(scope="module")
def ring(fig1):
    return compile_ring(Walk.from_switches(fig1, FIG1_RING))


@pytest.fixture(scope="module")
def fabric(fig1, ring):
    f = build_fabric(fig1, ring.static_sets())
    return f.with_rules([ring.loopbacks(0, "C1")])


def send(f, ring, target=None, position=0, controller="C1"):
    ctx = ring.cw.contexts[position]
    header = Header(FLOW_CW, None if target is None else (position + target) % ring.length,
                    1, ctx.vlan, controller)
    return inject(f, header, ring.walk.switch_at(position), ctx.in_arc)


class TestBuild:
    def test_table_one(self, fig1, ring):
        f = build_fabric(fig1, [ring.cw])
        assert len(f.tables) == 7 and f.num_rules == 9

    def test_empty_fabric_drops(self, fig1):
        out = inject(build_fabric(fig1), Header(FLOW_CW), 0)
        assert not out.returned and out.drop_reason == DROP_NO_MATCH and out.hops == 0

    def test_duplicates_rejected(self, fig1, ring):
        with pytest.raises(FabricError):
            build_fabric(fig1, [ring.cw, ring.cw])

    def test_foreign_references(self, fig1):
        with pytest.raises(FabricError):
            build_fabric(fig1, [[Rule(9, 1, Match(), ())]])
        with pytest.raises(FabricError):
            build_fabric(fig1, [[Rule(0, 1, Match(), (Forward(Arc(0, 0, 6)),))]])

    def test_priority_order(self, fig1, ring):
        f = build_fabric(fig1, ring.static_sets())
        for rules in f.tables.values():
            prios = [r.priority for r in rules]
            assert prios == sorted(prios, reverse=True)


class TestFailures:
    def test_symmetric_blocks_both_arcs(self):
        fs = FailureState(SYMMETRIC, {7})
        assert fs.blocks(Arc(7, 3, 6)) and fs.blocks(Arc(7, 6, 3))

    def test_asymmetric_blocks_one_arc(self):
        fs = FailureState(ASYMMETRIC, {Arc(4, 1, 4)})
        assert fs.blocks(Arc(4, 1, 4)) and not fs.blocks(Arc(4, 4, 1))

    def test_unknown_edge(self, fabric):
        with pytest.raises(TopologyError):
            set_failures(fabric, FailureState(SYMMETRIC, {42}))
        with pytest.raises(TopologyError):
            set_failures(fabric, FailureState(ASYMMETRIC, {Arc(0, 0, 6)}))

    def test_wrong_kind(self):
        with pytest.raises(ValueError):
            FailureState(SYMMETRIC, {Arc(0, 0, 1)})
        with pytest.raises(ValueError):
            FailureState("sideways")

    def test_no_failures_everything_returns(self, fabric, ring):
        assert all(send(fabric, ring, k).returned for k in range(ring.length))


class TestInject:
    def test_full_loop(self, fabric, ring):
        out = send(fabric, ring)
        assert out.returned and out.hops == 11
        assert out.trace[-1].out == "to_controller"

    def test_worked_example_probes(self, fig1, fabric, ring):
        f = set_failures(fabric, FailureState(SYMMETRIC, {fig1.find_edge("s4", "s7")}))
        assert send(f, ring, 5).returned
        lost = send(f, ring, 8)
        assert not lost.returned and lost.drop_reason == DROP_FAILED_LINK
        assert not send(f, ring, 6).returned
        assert not send(f, ring).returned

    def test_bounce_is_round_trip(self, fabric, ring):
        out = send(fabric, ring, 5)
        arcs = out.arcs()
        assert out.hops == 10
        assert arcs[:5] == list(ring.walk.arcs[:5])
        assert arcs[5:] == [a.reversed() for a in reversed(ring.walk.arcs[:5])]

    def test_bounce_at_injection(self, fabric, ring):
        out = send(fabric, ring, 0)
        assert out.returned and out.hops == 0

    def test_no_loopback_exhausts_budget(self, fig1, ring):
        f = build_fabric(fig1, ring.static_sets(), hop_budget=4 * ring.length + 4)
        out = send(f, ring)
        assert not out.returned and out.drop_reason == DROP_TTL
        assert out.hops == 4 * ring.length + 4

    def test_returned_iff_to_controller(self, fig1, fabric, ring):
        f = set_failures(fabric, FailureState(SYMMETRIC, {2}))
        for k in range(ring.length):
            out = send(f, ring, k)
            assert out.returned == (out.trace[-1].out == "to_controller")

    def test_deterministic(self, fig1, ring):
        a = build_fabric(fig1, ring.static_sets()).with_rules([ring.loopbacks(0, "C1")])
        b = build_fabric(fig1, ring.static_sets()).with_rules([ring.loopbacks(0, "C1")])
        assert send(a, ring, 7) == send(b, ring, 7)

    def test_cached_truncation_matches_fresh_trace(self, fig1, ring):
        base = build_fabric(fig1, ring.static_sets()).with_rules([ring.loopbacks(0, "C1")])
        for e in range(fig1.num_edges):
            fs = FailureState(SYMMETRIC, {e})
            fresh = set_failures(build_fabric(fig1, ring.static_sets())
                                 .with_rules([ring.loopbacks(0, "C1")]), fs)
            warm = set_failures(base, fs)
            for k in range(ring.length):
                send(base, ring, k)
                assert send(warm, ring, k) == send(fresh, ring, k)

    def test_symmetric_equals_both_arcs_failed(self, fig1, fabric, ring):
        for e in fig1.edges:
            sym = set_failures(fabric, FailureState(SYMMETRIC, {e.id}))
            asym = set_failures(fabric, FailureState(ASYMMETRIC, {Arc(e.id, e.u, e.v), Arc(e.id, e.v, e.u)}))
            for k in [None] + list(range(ring.length)):
                a, b = send(sym, ring, k), send(asym, ring, k)
                assert (a.returned, a.hops) == (b.returned, b.hops)

    def test_trace_jsonl(self, fabric, ring):
        lines = send(fabric, ring, 2).to_jsonl().splitlines()
        assert len(lines) == 5
        assert json.loads(lines[0])["switch"] == 0


class TestLatency:
    def test_parallel_and_sequential(self):
        assert latency_of([10, 6], parallel=True) == 10
        assert latency_of([10, 6], parallel=False) == 16
        assert latency_of([], parallel=True) == 0

    def test_ring_walk(self, fabric, ring):
        out = send(fabric, ring)
        assert latency_of([out], parallel=False, tau=2.0) == 22.0
        assert isinstance(out, ProbeOutcome)


def replay(t, walk):
    ring = compile_ring(walk)
    f = build_fabric(t, ring.static_sets()).with_rules([ring.loopbacks(0, "C1")])
    cw = send(f, ring)
    ctx = ring.ccw.contexts[0]
    ccw = inject(f, Header(FLOW_CCW, None, 2, ctx.vlan, "C1"), ring.ccw.walk.switch_at(0), ctx.in_arc)
    return ring, cw, ccw


class TestReplay:
    def test_corpus(self, zoo_rings):
        for t, ring in zoo_rings[:80]:
            f = build_fabric(t, ring.static_sets()).with_rules([ring.loopbacks(0, "C1")])
            out = send(f, ring)
            assert out.returned and tuple(out.arcs()) == ring.walk.arcs, t.name

    @pytest.mark.parametrize("seed", range(20))
    def test_random_walks(self, seed):
        rng = random.Random(seed)
        t = random_connected(rng, rng.randint(2, 6), rng.randint(0, 5), multi=True)
        walk = random_closed_walk(rng, t)
        ring, cw, ccw = replay(t, walk)
        assert tuple(cw.arcs()) == walk.arcs
        assert tuple(ccw.arcs()) == ring.ccw.walk.arcs
