"""Forwarding-plane topologies: loading, validation and structural analysis.

A :class:`Topology` is an undirected multigraph whose vertices are switches
(dense integer ids) and whose edges are bidirectional links.  Each edge has
two directions, represented as :class:`Arc` objects.
"""
from __future__ import annotations

import io
import json
import logging
import os
import xml.etree.ElementTree as ET
from collections import deque
from dataclasses import dataclass, field
from typing import Iterable, Sequence

logger = logging.getLogger(__name__)


class TopologyError(ValueError):
    """Base class for topology problems."""


class GraphMLParseError(TopologyError):
    pass


class UnsupportedFormatError(TopologyError):
    pass


class EmptyTopologyError(TopologyError):
    pass


class NotConnectedError(TopologyError):
    """Raised when an operation needs a connected topology."""


@dataclass(frozen=True)
class Edge:
    id: int
    u: int
    v: int

    @property
    def endpoints(self) -> tuple[int, int]:
        return (self.u, self.v)


@dataclass(frozen=True, order=True)
class Arc:
    """One direction of a link, traversed from ``tail`` to ``head``."""

    edge: int
    tail: int
    head: int

    def reversed(self) -> "Arc":
        return Arc(self.edge, self.head, self.tail)

    def __str__(self) -> str:
        return f"e{self.edge}:{self.tail}->{self.head}"


@dataclass(frozen=True)
class ControlDomain:
    """Switches a controller can program and inject packets into."""

    switches: frozenset

    def __post_init__(self):
        if not self.switches:
            raise ValueError("a control domain needs at least one switch")
        object.__setattr__(self, "switches", frozenset(self.switches))

    def __contains__(self, switch) -> bool:
        return switch in self.switches


@dataclass(frozen=True)
class Topology:
    switches: tuple[int, ...]
    edges: tuple[Edge, ...]
    name: str = ""
    labels: tuple[str, ...] = field(default=(), compare=False)
    dropped_self_loops: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "switches", tuple(self.switches))
        object.__setattr__(self, "edges", tuple(self.edges))
        if tuple(self.switches) != tuple(range(len(self.switches))):
            raise TopologyError("switch ids must be dense integers 0..n-1")
        known = set(self.switches)
        for i, e in enumerate(self.edges):
            if e.id != i:
                raise TopologyError(f"edge ids must be dense, got {e.id} at index {i}")
            if e.u not in known or e.v not in known:
                raise TopologyError(f"edge {e.id} references an unknown switch")
            if e.u == e.v:
                raise TopologyError(f"edge {e.id} is a self-loop")
        if not self.labels:
            object.__setattr__(self, "labels", tuple(str(s) for s in self.switches))
        elif len(self.labels) != len(self.switches):
            raise TopologyError("one label per switch is required")

    @classmethod
    def from_edges(cls, pairs: Iterable[tuple[int, int]], num_switches: int | None = None,
                   name: str = "", labels: Sequence[str] = (), dropped_self_loops: int = 0) -> "Topology":
        pairs = list(pairs)
        if num_switches is None:
            num_switches = 1 + max((max(p) for p in pairs), default=-1)
        edges = tuple(Edge(i, u, v) for i, (u, v) in enumerate(pairs))
        return cls(tuple(range(num_switches)), edges, name, tuple(labels), dropped_self_loops)

    @property
    def num_switches(self) -> int:
        return len(self.switches)

    @property
    def num_edges(self) -> int:
        return len(self.edges)

    def edge(self, edge_id: int) -> Edge:
        return self.edges[edge_id]

    def degree(self, switch: int) -> int:
        return sum((e.u == switch) + (e.v == switch) for e in self.edges)

    def incidence(self) -> list[list[tuple[int, int]]]:
        """Per switch, the ``(edge_id, neighbour)`` pairs sorted by edge id."""
        adj: list[list[tuple[int, int]]] = [[] for _ in self.switches]
        for e in self.edges:
            adj[e.u].append((e.id, e.v))
            adj[e.v].append((e.id, e.u))
        return adj

    def arc_index(self, arc: Arc) -> int:
        """Stable numbering of arcs: ``2*edge`` for u->v, ``2*edge+1`` for v->u."""
        e = self.edges[arc.edge]
        if (arc.tail, arc.head) == (e.u, e.v):
            return 2 * e.id
        if (arc.tail, arc.head) == (e.v, e.u):
            return 2 * e.id + 1
        raise TopologyError(f"{arc} is not an orientation of edge {e.id}")

    def has_arc(self, arc: Arc) -> bool:
        if not 0 <= arc.edge < len(self.edges):
            return False
        e = self.edges[arc.edge]
        return {arc.tail, arc.head} == {e.u, e.v} and arc.tail != arc.head

    def label(self, switch: int) -> str:
        return self.labels[switch]

    def edge_label(self, edge_id: int) -> str:
        e = self.edges[edge_id]
        return f"({self.labels[e.u]},{self.labels[e.v]})"

    def find_edge(self, a, b) -> int:
        """Lowest edge id joining switches ``a`` and ``b`` (ids or labels)."""
        a, b = self._resolve(a), self._resolve(b)
        for e in self.edges:
            if {e.u, e.v} == {a, b}:
                return e.id
        raise KeyError(f"no edge between {a} and {b}")

    def _resolve(self, s) -> int:
        if isinstance(s, int):
            return s
        return self.labels.index(s)


# -- loading -----------------------------------------------------------------

def _read_bytes(document) -> bytes:
    if isinstance(document, bytes):
        return document
    if isinstance(document, (str, os.PathLike)):
        with open(document, "rb") as fh:
            return fh.read()
    data = document.read()
    return data.encode() if isinstance(data, str) else data


def load_graphml(document, name: str | None = None) -> Topology:
    """Parse an undirected GraphML document (Topology Zoo flavour).

    ``document`` may be raw bytes, a path, or a binary file object.  Node ids
    are renumbered densely in document order; parallel edges are kept and
    self-loops are dropped with a warning.
    """
    raw = _read_bytes(document)
    try:
        root = ET.fromstring(raw)
    except ET.ParseError as exc:
        raise GraphMLParseError(f"malformed GraphML: {exc}") from exc

    def tag(el):
        return el.tag.rsplit("}", 1)[-1]

    if tag(root) != "graphml":
        raise GraphMLParseError(f"root element is <{tag(root)}>, expected <graphml>")
    graph = next((el for el in root if tag(el) == "graph"), None)
    if graph is None:
        raise GraphMLParseError("document has no <graph> element")
    if graph.get("edgedefault", "directed") == "directed":
        raise UnsupportedFormatError("directed graphs are not supported")

    label_keys = set()
    name_keys = set()
    for key in (el for el in root if tag(el) == "key"):
        attr = (key.get("attr.name") or "").lower()
        if key.get("for") == "node" and attr == "label":
            label_keys.add(key.get("id"))
        if key.get("for") == "graph" and attr in ("network", "name", "label"):
            name_keys.add(key.get("id"))

    ids: dict[str, int] = {}
    labels: list[str] = []
    graph_name = name
    pairs: list[tuple[int, int]] = []
    pending: list[tuple[str, str]] = []
    for el in graph:
        kind = tag(el)
        if kind == "data" and el.get("key") in name_keys and graph_name is None:
            graph_name = (el.text or "").strip()
        elif kind == "node":
            node_id = el.get("id")
            if node_id is None or node_id in ids:
                raise GraphMLParseError(f"missing or duplicate node id {node_id!r}")
            ids[node_id] = len(ids)
            label = next((d.text for d in el if tag(d) == "data" and d.get("key") in label_keys), None)
            labels.append((label or node_id).strip())
        elif kind == "edge":
            pending.append((el.get("source"), el.get("target")))

    if not ids:
        raise EmptyTopologyError("graph has no nodes")
    self_loops = 0
    for src, dst in pending:
        if src not in ids or dst not in ids:
            raise GraphMLParseError(f"edge references undeclared node ({src!r}, {dst!r})")
        if src == dst:
            self_loops += 1
            continue
        pairs.append((ids[src], ids[dst]))
    if self_loops:
        logger.warning("dropped %d self-loop edge(s)", self_loops)
    return Topology.from_edges(pairs, len(ids), graph_name or "", labels, self_loops)


def load_edgelist(document, name: str = "") -> Topology:
    """Parse a plain edge list: one ``u v`` pair per line, ``#`` starts a comment."""
    if isinstance(document, (str, os.PathLike)) and os.path.exists(document):
        with open(document, encoding="utf-8") as fh:
            text = fh.read()
        name = name or os.path.splitext(os.path.basename(document))[0]
    elif isinstance(document, bytes):
        text = document.decode()
    elif isinstance(document, str):
        text = document
    else:
        text = document.read()
        if isinstance(text, bytes):
            text = text.decode()
    ids: dict[str, int] = {}
    pairs = []
    self_loops = 0
    for lineno, line in enumerate(io.StringIO(text), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 2:
            raise TopologyError(f"line {lineno}: expected 'u v', got {line!r}")
        for p in parts:
            ids.setdefault(p, len(ids))
        if parts[0] == parts[1]:
            self_loops += 1
            continue
        pairs.append((ids[parts[0]], ids[parts[1]]))
    if not ids:
        raise EmptyTopologyError("edge list is empty")
    if self_loops:
        logger.warning("dropped %d self-loop edge(s)", self_loops)
    return Topology.from_edges(pairs, len(ids), name, list(ids), self_loops)


def load_topology(path) -> Topology:
    """Load a ``.graphml`` file or a plain edge list, depending on the suffix."""
    path = os.fspath(path)
    stem = os.path.splitext(os.path.basename(path))[0]
    if path.lower().endswith((".graphml", ".xml")):
        return load_graphml(path)
    return load_edgelist(path, name=stem)


# -- analysis ----------------------------------------------------------------

def is_connected(t: Topology) -> bool:
    if t.num_switches <= 1:
        return True
    adj = t.incidence()
    seen = {0}
    queue = deque([0])
    while queue:
        v = queue.popleft()
        for _, w in adj[v]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == t.num_switches


def _require_connected(t: Topology) -> None:
    if not is_connected(t):
        raise NotConnectedError(f"topology {t.name!r} is not connected")


def find_bridges(t: Topology) -> frozenset[int]:
    """Edge ids whose removal disconnects ``t``.

    Iterative DFS with low-link values.  The edge used to enter a vertex is
    skipped by id, so a parallel edge correctly closes a cycle.
    """
    _require_connected(t)
    n = t.num_switches
    if n == 0:
        return frozenset()
    adj = t.incidence()
    disc = [-1] * n
    low = [0] * n
    bridges = set()
    counter = 0
    disc[0] = low[0] = counter
    # (vertex, edge used to reach it, iterator position)
    stack = [(0, -1, 0)]
    while stack:
        v, via, i = stack[-1]
        if i < len(adj[v]):
            stack[-1] = (v, via, i + 1)
            eid, w = adj[v][i]
            if eid == via:
                continue
            if disc[w] == -1:
                counter += 1
                disc[w] = low[w] = counter
                stack.append((w, eid, 0))
            else:
                low[v] = min(low[v], disc[w])
        else:
            stack.pop()
            if stack:
                parent = stack[-1][0]
                low[parent] = min(low[parent], low[v])
                if low[v] > disc[parent]:
                    bridges.add(via)
    return frozenset(bridges)


def rule_lower_bound(t: Topology) -> int:
    """Minimum number of static rules any verification walk needs: |E| + |B|."""
    return t.num_edges + len(find_bridges(t))


def directed_arcs(t: Topology) -> list[Arc]:
    arcs = []
    for e in t.edges:
        arcs.append(Arc(e.id, e.u, e.v))
        arcs.append(Arc(e.id, e.v, e.u))
    return arcs


def summary(t: Topology) -> dict:
    bridges = find_bridges(t)
    return {
        "name": t.name,
        "num_switches": t.num_switches,
        "num_edges": t.num_edges,
        "num_bridges": len(bridges),
        "lower_bound": t.num_edges + len(bridges),
    }


def summary_json(t: Topology) -> str:
    return json.dumps(summary(t), sort_keys=True)
