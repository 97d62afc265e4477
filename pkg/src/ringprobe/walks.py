"""Closed covering walks: postman tours, directed Euler cycles and the
duplicate-arc heuristic that lowers their static-rule cost.

A walk is stored as a tuple of arcs.  Ring position ``p`` (0-based) is the
tail of ``arcs[p]``, so ``walk.switch_at(p)`` is the switch a packet sits on
before taking hop ``p``.
"""
from __future__ import annotations

import json
import logging
from collections import Counter, deque
from dataclasses import dataclass

import networkx as nx

from .topology import Arc, Topology, TopologyError, find_bridges, is_connected, NotConnectedError

logger = logging.getLogger(__name__)

UNDIRECTED = "undirected"
DIRECTED = "directed"

# Above this many odd-degree switches the pairing falls back to a greedy
# nearest-pair heuristic unless exact matching is forced.
EXACT_MATCHING_LIMIT = 40


class WalkError(ValueError):
    """A walk is not a closed cover of the topology it is used with."""


@dataclass(frozen=True)
class Walk:
    arcs: tuple[Arc, ...]
    start: int
    cover: str = UNDIRECTED

    def __post_init__(self):
        object.__setattr__(self, "arcs", tuple(self.arcs))
        if self.cover not in (UNDIRECTED, DIRECTED):
            raise ValueError(f"unknown cover kind {self.cover!r}")
        if self.arcs:
            if self.arcs[0].tail != self.start:
                raise WalkError("first arc must leave the start switch")
            for p, arc in enumerate(self.arcs):
                nxt = self.arcs[(p + 1) % len(self.arcs)]
                if arc.head != nxt.tail:
                    raise WalkError(f"walk breaks between positions {p} and {p + 1}")

    def __len__(self) -> int:
        return len(self.arcs)

    def switch_at(self, position: int) -> int:
        return self.arcs[position % len(self.arcs)].tail

    def switches(self) -> list[int]:
        """Switch sequence around the ring, one entry per position."""
        return [a.tail for a in self.arcs]

    def rotated(self, position: int) -> "Walk":
        """Same ring, read starting from ``position``."""
        p = position % len(self.arcs)
        arcs = self.arcs[p:] + self.arcs[:p]
        return Walk(arcs, arcs[0].tail, self.cover)

    def to_dict(self) -> dict:
        m = walk_metrics(self)
        return {
            "arcs": [{"edge_id": a.edge, "tail": a.tail, "head": a.head} for a in self.arcs],
            "metrics": {"L": m.length, "kappa": m.duplicates, "rule_cost": m.rule_cost},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict, cover: str = UNDIRECTED) -> "Walk":
        arcs = tuple(Arc(a["edge_id"], a["tail"], a["head"]) for a in data["arcs"])
        if not arcs:
            raise WalkError("empty walk")
        return cls(arcs, arcs[0].tail, cover)

    @classmethod
    def from_switches(cls, t: Topology, sequence, cover: str = UNDIRECTED) -> "Walk":
        """Build a walk from a closed switch sequence (ids or labels).

        The last entry must repeat the first.  Each hop uses the lowest edge id
        between the two switches, which is unambiguous on simple graphs.
        """
        seq = [t._resolve(s) for s in sequence]
        if len(seq) < 2 or seq[0] != seq[-1]:
            raise WalkError("a closed switch sequence must end where it starts")
        arcs = tuple(Arc(t.find_edge(a, b), a, b) for a, b in zip(seq, seq[1:]))
        return cls(arcs, seq[0], cover)


@dataclass(frozen=True)
class WalkMetrics:
    length: int
    duplicates: int
    unique_arcs: int

    @property
    def rule_cost(self) -> int:
        return self.length - self.duplicates


def walk_metrics(w: Walk) -> WalkMetrics:
    """Length, duplicate-arc count and rule cost of a walk.

    Every occurrence of an arc beyond its first counts as one duplicate; the
    two directions of an edge are different arcs.
    """
    unique = len(set(w.arcs))
    return WalkMetrics(len(w.arcs), len(w.arcs) - unique, unique)


def _kappa(arcs) -> int:
    return len(arcs) - len(set(arcs))


# -- postman tour ------------------------------------------------------------

def _check_input(t: Topology, start: int) -> None:
    if t.num_edges == 0:
        raise TopologyError("topology has no edges")
    if not is_connected(t):
        raise NotConnectedError(f"topology {t.name!r} is not connected")
    if not 0 <= start < t.num_switches:
        raise TopologyError(f"start switch {start} is not in the topology")


def _bfs_tree(t: Topology, adj, source: int):
    """Hop distances and parent edges from ``source``; lowest edge id wins ties."""
    dist = [-1] * t.num_switches
    parent = [(-1, -1)] * t.num_switches
    dist[source] = 0
    queue = deque([source])
    while queue:
        v = queue.popleft()
        for eid, w in adj[v]:
            if dist[w] == -1:
                dist[w] = dist[v] + 1
                parent[w] = (eid, v)
                queue.append(w)
    return dist, parent


def _pair_odd_vertices(odd, dist, exact: bool) -> list[tuple[int, int]]:
    if exact:
        g = nx.Graph()
        for i, a in enumerate(odd):
            for b in odd[i + 1:]:
                g.add_edge(a, b, weight=dist[a][b])
        return sorted(tuple(sorted(p)) for p in nx.min_weight_matching(g))
    candidates = sorted((dist[a][b], a, b) for i, a in enumerate(odd) for b in odd[i + 1:])
    taken: set[int] = set()
    pairs = []
    for _, a, b in candidates:
        if a not in taken and b not in taken:
            taken.update((a, b))
            pairs.append((a, b))
    return pairs


def _hierholzer(num_switches: int, out_arcs, start: int, total: int) -> list:
    """Euler circuit over arc copies.

    ``out_arcs[v]`` lists ``(key, arc)`` for every copy leaving ``v``, already
    sorted so that the lowest-numbered arc is taken first.  ``key`` identifies
    the physical copy; an undirected copy shows up once per endpoint and is
    consumed by whichever side uses it first.
    """
    used: set = set()
    ptr = [0] * num_switches
    stack: list = [(start, None)]
    circuit = []
    while stack:
        v, via = stack[-1]
        lst = out_arcs[v]
        while ptr[v] < len(lst) and lst[ptr[v]][0] in used:
            ptr[v] += 1
        if ptr[v] < len(lst):
            key, arc = lst[ptr[v]]
            used.add(key)
            stack.append((arc.head, arc))
        else:
            stack.pop()
            if via is not None:
                circuit.append(via)
    circuit.reverse()
    if len(circuit) != total:
        raise WalkError("multigraph is not connected; no Euler circuit")
    return circuit


def solve_cpp(t: Topology, start: int = 0, exact: bool | None = None) -> Walk:
    """Shortest closed walk from ``start`` traversing every edge at least once.

    Odd-degree switches are paired by minimum-weight perfect matching on hop
    distances (exact up to ``EXACT_MATCHING_LIMIT`` odd switches, greedy
    nearest-pair above unless ``exact=True``).  Matched shortest paths are
    duplicated, any edge then carrying three or more copies is trimmed by
    pairs, and Hierholzer's algorithm extracts the circuit.
    """
    _check_input(t, start)
    adj = t.incidence()
    odd = [v for v in t.switches if len(adj[v]) % 2]
    copies = [1] * t.num_edges
    if odd:
        if exact is None:
            exact = len(odd) <= EXACT_MATCHING_LIMIT
        trees = {v: _bfs_tree(t, adj, v) for v in odd}
        dist = {v: trees[v][0] for v in odd}
        for a, b in _pair_odd_vertices(odd, dist, exact):
            parent = trees[a][1]
            v = b
            while v != a:
                eid, prev = parent[v]
                copies[eid] += 1
                v = prev
        # Removing two parallel copies keeps degrees even and the graph
        # connected, so no edge needs more than two traversals.
        for eid, c in enumerate(copies):
            if c > 2:
                copies[eid] = 2 - c % 2
    out_arcs: list[list] = [[] for _ in t.switches]
    for e in t.edges:
        for c in range(copies[e.id]):
            out_arcs[e.u].append(((e.id, c), Arc(e.id, e.u, e.v)))
            out_arcs[e.v].append(((e.id, c), Arc(e.id, e.v, e.u)))
    for lst in out_arcs:
        lst.sort(key=lambda item: item[0])
    arcs = _hierholzer(t.num_switches, out_arcs, start, sum(copies))
    return Walk(tuple(arcs), start, UNDIRECTED)


def euler_cycle_directed(t: Topology, start: int = 0) -> Walk:
    """Closed walk using every arc of the directed form exactly once (L = 2|E|)."""
    _check_input(t, start)
    out_arcs: list[list] = [[] for _ in t.switches]
    for e in t.edges:
        out_arcs[e.u].append((2 * e.id, Arc(e.id, e.u, e.v)))
        out_arcs[e.v].append((2 * e.id + 1, Arc(e.id, e.v, e.u)))
    for lst in out_arcs:
        lst.sort(key=lambda item: item[0])
    arcs = _hierholzer(t.num_switches, out_arcs, start, 2 * t.num_edges)
    return Walk(tuple(arcs), start, DIRECTED)


# -- validation and reversal -------------------------------------------------

def validate_walk(w: Walk, t: Topology, mode: str = "symmetric") -> bool:
    """True iff ``w`` is closed, uses only arcs of ``t`` and covers it.

    ``symmetric`` mode needs every edge, ``asymmetric`` mode every arc.
    """
    if not w.arcs:
        return False
    for p, arc in enumerate(w.arcs):
        if not t.has_arc(arc):
            return False
        if arc.head != w.arcs[(p + 1) % len(w.arcs)].tail:
            return False
    if w.arcs[0].tail != w.start:
        return False
    if mode == "symmetric":
        return len({a.edge for a in w.arcs}) == t.num_edges
    if mode == "asymmetric":
        return len(set(w.arcs)) == 2 * t.num_edges
    raise ValueError(f"unknown failure mode {mode!r}")


def reverse_walk(w: Walk) -> Walk:
    """The counter-clockwise walk: same ring, every hop taken backwards."""
    arcs = tuple(a.reversed() for a in reversed(w.arcs))
    return Walk(arcs, w.start, w.cover)


# -- duplicate-arc heuristic -------------------------------------------------

def _closest_pair(arcs, edge_id: int):
    """Closest opposite-direction occurrences of ``edge_id``: (gap, i, j), i < j."""
    L = len(arcs)
    fwd, back = [], []
    for p, a in enumerate(arcs):
        if a.edge == edge_id:
            (fwd if a.tail < a.head else back).append(p)
    best = None
    for x in fwd:
        for y in back:
            d = abs(x - y)
            cand = (min(d, L - d), min(x, y), max(x, y))
            if best is None or cand < best:
                best = cand
    return best


def _both_directions(arcs, candidates) -> set[int]:
    seen: dict[int, set] = {}
    for a in arcs:
        if a.edge in candidates:
            seen.setdefault(a.edge, set()).add(a.tail)
    return {e for e, tails in seen.items() if len(tails) == 2}


def _reverse_span(arcs, a: int, b: int) -> tuple:
    """Reverse the closed sub-walk made of arcs ``a..b-1``."""
    middle = tuple(x.reversed() for x in reversed(arcs[a:b]))
    return arcs[:a] + middle + arcs[b:]


def improve_walk(w: Walk, t: Topology) -> Walk:
    """Raise the duplicate-arc count of a postman tour without changing its length.

    Non-bridge edges used in both directions are inspected, closest pair
    first.  Removing the pair splits the ring into two parts; for every pair
    of positions, one per part, sitting on the same switch, the sub-cycle
    between them is reversed and the result kept if it shares more arcs.
    Inspected edges are dropped from the work list whether or not they
    improved, and edges no longer used both ways are pruned after each round.
    The start switch is preserved.
    """
    if not validate_walk(w, t, "symmetric"):
        raise WalkError("improve_walk needs a closed walk covering every edge")
    arcs = tuple(w.arcs)
    L = len(arcs)
    bridges = find_bridges(t)
    pending = _both_directions(arcs, set(range(t.num_edges)) - bridges)
    kappa = _kappa(arcs)
    while pending:
        gap, i, j, edge_id = min(_closest_pair(arcs, e) + (e,) for e in pending)
        pending.discard(edge_id)
        first = range(i + 1, j + 1)
        second = [p for p in range(L) if p not in first]
        gamma = sorted((k, l) for k in first for l in second
                       if arcs[k % L].tail == arcs[l % L].tail)
        for k, l in gamma:
            a, b = min(k, l), max(k, l)
            candidate = _reverse_span(arcs, a, b)
            if _kappa(candidate) > kappa:
                logger.debug("edge %d: reversed positions %d..%d", edge_id, a, b)
                arcs, kappa = candidate, _kappa(candidate)
                break
        pending &= _both_directions(arcs, pending)
    return Walk(arcs, w.start, w.cover)
