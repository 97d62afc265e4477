"""Brute-force reference computations, kept independent of the library code."""
from collections import deque
from itertools import product


def _components(n, pairs):
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for u, v in pairs:
        parent[find(u)] = find(v)
    return len({find(x) for x in range(n)})


def bridges(t):
    """Edges whose removal increases the component count."""
    pairs = [(e.u, e.v) for e in t.edges]
    base = _components(t.num_switches, pairs)
    return {i for i in range(len(pairs))
            if _components(t.num_switches, pairs[:i] + pairs[i + 1:]) > base}


def shortest_cover_length(t, start=0):
    """Length of the shortest closed walk from ``start`` using every edge.

    Breadth-first search over (switch, covered-edge mask) states.
    """
    full = (1 << t.num_edges) - 1
    adj = [[] for _ in t.switches]
    for e in t.edges:
        adj[e.u].append((e.id, e.v))
        adj[e.v].append((e.id, e.u))
    seen = {(start, 0): 0}
    queue = deque([(start, 0)])
    while queue:
        v, mask = queue.popleft()
        d = seen[(v, mask)]
        if v == start and mask == full:
            return d
        for eid, w in adj[v]:
            state = (w, mask | (1 << eid))
            if state not in seen:
                seen[state] = d + 1
                queue.append(state)
    raise ValueError("graph is not connected")


def _strongly_connected(nodes, arcs):
    if not nodes:
        return True
    out, back = {}, {}
    for a, b in arcs:
        out.setdefault(a, []).append(b)
        back.setdefault(b, []).append(a)
    root = next(iter(nodes))
    for graph in (out, back):
        seen = {root}
        stack = [root]
        while stack:
            x = stack.pop()
            for y in graph.get(x, ()):
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        if seen != nodes:
            return False
    return True


def min_distinct_arcs(t):
    """Fewest distinct arcs in any closed walk that uses every edge.

    A closed walk with arc set S exists iff S is strongly connected, so this
    is the smallest strongly connected arc set touching every edge (each edge
    contributes one direction or both).
    """
    nodes = set(t.switches)
    best = None
    for choice in product((0, 1, 2), repeat=t.num_edges):
        size = sum(2 if c == 2 else 1 for c in choice)
        if best is not None and size >= best:
            continue
        arcs = []
        for e, c in zip(t.edges, choice):
            if c in (0, 2):
                arcs.append((e.u, e.v))
            if c in (1, 2):
                arcs.append((e.v, e.u))
        if _strongly_connected(nodes, arcs):
            best = size
    return best


def first_failed(walk_arcs, position, failed_edges):
    """Offset and edge of the first failed arc met walking forward from ``position``."""
    L = len(walk_arcs)
    for off in range(L):
        a = walk_arcs[(position + off) % L]
        if a.edge in failed_edges:
            return off, a.edge
    return None


def bisection_plan(L, failed_offset):
    """Probe offsets a halving search issues, with floor midpoints.

    Written directly from the search rule: the candidates are offsets
    ``lo..hi``; the probe goes ``floor((hi - lo + 1) / 2)`` past ``lo``.
    """
    lo, hi, probes = 0, L - 1, []
    while hi > lo:
        k = lo + (hi - lo + 1) // 2
        probes.append((k, k <= failed_offset))
        if k <= failed_offset:
            lo = k
        else:
            hi = k - 1
    return probes
