import random
from pathlib import Path

import pytest

from ringprobe.topology import Arc, Topology, is_connected, load_topology
from ringprobe.walks import Walk

ROOT = Path(__file__).resolve().parents[1]
FIXTURES = ROOT / "corpus" / "fixtures"
ZOO = ROOT / "corpus" / "zoo"

# ring used for the worked examples (switch labels, closed)
FIG1_RING = "s1 s5 s2 s3 s6 s7 s4 s3 s6 s5 s2 s1".split()

# hand walks on the four-switch multigraph: switch sequence and edge id per hop
FIG2_SHORT = ("s1 s2 s3 s2 s4 s1 s3 s4 s2 s4 s1", [0, 1, 1, 5, 3, 4, 2, 6, 7, 3])
FIG2_LONG = ("s1 s2 s3 s4 s1 s2 s4 s1 s3 s4 s2 s4 s1", [0, 1, 2, 3, 0, 5, 3, 4, 2, 6, 7, 3])


def walk_from(t, switches, edges):
    """Walk from a closed switch sequence and the edge id of every hop."""
    seq = [t.labels.index(s) for s in switches.split()]
    arcs = [Arc(e, a, b) for e, a, b in zip(edges, seq, seq[1:])]
    return Walk(tuple(arcs), seq[0])


@pytest.fixture(scope="session")
def fig1():
    return load_topology(FIXTURES / "fig1.edgelist")


@pytest.fixture(scope="session")
def fig2():
    return load_topology(FIXTURES / "fig2.edgelist")


@pytest.fixture(scope="session")
def line4():
    return load_topology(FIXTURES / "line4.edgelist")


def zoo_topologies(max_edges=None):
    out = []
    for path in sorted(ZOO.glob("*.graphml")):
        t = load_topology(path)
        if t.num_edges >= 2 and is_connected(t) and (max_edges is None or t.num_edges <= max_edges):
            out.append(t)
    return out


@pytest.fixture(scope="session")
def zoo():
    return zoo_topologies()


def random_connected(rng: random.Random, n: int, extra: int, multi: bool = False) -> Topology:
    """Random spanning tree on ``n`` switches plus ``extra`` more links."""
    pairs = [(rng.randrange(i), i) for i in range(1, n)]
    seen = {frozenset(p) for p in pairs}
    tries = 0
    while extra and tries < 200:
        tries += 1
        u, v = rng.sample(range(n), 2)
        if not multi and frozenset((u, v)) in seen:
            continue
        seen.add(frozenset((u, v)))
        pairs.append((u, v))
        extra -= 1
    return Topology.from_edges(pairs, n, name=f"rand{n}_{len(pairs)}")


def random_closed_walk(rng, t, max_len=24):
    """Closed walk over every edge: randomised depth-first traversal with random detours."""
    adj = t.incidence()
    arcs = []
    used = set()

    def visit(v):
        order = list(adj[v])
        rng.shuffle(order)
        for eid, w in order:
            if eid not in used:
                used.add(eid)
                arcs.append(Arc(eid, v, w))
                visit(w)
                arcs.append(Arc(eid, w, v))
            elif rng.random() < 0.15 and len(arcs) < max_len:
                arcs.append(Arc(eid, v, w))
                arcs.append(Arc(eid, w, v))

    visit(0)
    return Walk(tuple(arcs), 0)


@pytest.fixture(scope="session")
def zoo_rings(zoo):
    from ringprobe.rules import build_ring
    return [(t, build_ring(t)) for t in zoo]


# acceptance criterion -> (passed, description, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.rstrip("ab")), k)):
        ok, text, detail = ACCEPTANCE[key]
        line = f"criterion {key:<3} {'PASS' if ok else 'FAIL'}  {text}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
