"""Controller-side probing: verification, failure localization and cost bounds.

A controller attaches to the ring at a position whose switch lies in its
control domain, installs the two loopback rules for that position, and
injects probes.  A probe aimed at offset ``k`` travels ``k`` hops clockwise,
bounces, and retraces its path, so it comes back exactly when none of the
first ``k`` ring arcs (or their reverses) is broken.  Bisecting on ``k``
finds the first broken arc.

Hop totals are charged per round trip: a verification probe costs ``L`` and
a probe aimed at offset ``k`` costs ``2k`` whether or not it returns, since a
lost probe is only declared lost after that long.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from .rules import FLOW_CCW, FLOW_CW, Header, Ring, ccw_position
from .simulator import ASYMMETRIC, Fabric, ProbeOutcome, build_fabric
from .topology import ControlDomain, Topology

log = logging.getLogger(__name__)

HEALTHY = "healthy"
FAILED = "failed"
DEFAULT_CONTROLLER = "C1"


class DiagnosisError(ValueError):
    pass


@dataclass(frozen=True)
class RingView:
    ring: Ring
    domain: ControlDomain
    injection_points: tuple

    @classmethod
    def create(cls, ring: Ring, domain: ControlDomain) -> "RingView":
        points = tuple(p for p, a in enumerate(ring.walk.arcs) if a.tail in domain)
        if not points:
            raise DiagnosisError("no ring position belongs to the control domain")
        return cls(ring, domain, points)

    @property
    def walk(self):
        return self.ring.walk

    @property
    def reverse(self):
        return self.ring.ccw.walk

    @property
    def length(self) -> int:
        return self.ring.length

    @property
    def beta(self) -> int:
        """How many ring positions sit on a domain switch."""
        return len(self.injection_points)


@dataclass(frozen=True)
class ProbeRecord:
    target: Optional[int]   # ring position the probe bounces at; None for a full loop
    direction: str          # "cw" or "ccw"
    returned: bool
    hops: int               # round-trip hops charged

    def to_dict(self) -> dict:
        return {"target": self.target, "direction": self.direction,
                "returned": self.returned, "hops": self.hops}


@dataclass(frozen=True)
class DiagnosisReport:
    verdict: str
    located: frozenset
    messages: int
    total_hops: int
    latency: float
    strategy: str
    probes: tuple = ()
    directions: dict = field(default_factory=dict)
    direction_ambiguous: bool = False

    def to_dict(self, labels=None) -> dict:
        def show(x):
            return x if isinstance(x, int) else str(x)

        out = {
            "verdict": self.verdict,
            "located": sorted((show(x) for x in self.located), key=str),
            "messages": self.messages,
            "total_hops": self.total_hops,
            "latency_us": self.latency,
            "strategy": self.strategy,
            "probes": [p.to_dict() for p in self.probes],
        }
        if self.direction_ambiguous:
            out["direction_ambiguous"] = True
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def ring_fabric(t: Topology, ring: Ring, tau: float = 1.0) -> Fabric:
    """Fabric with the ring's static rules and a hop budget of ``4L + 4``."""
    return build_fabric(t, ring.static_sets(), tau, hop_budget=4 * ring.length + 4)


class _Session:
    """One controller attached at one clockwise ring position."""

    def __init__(self, fabric: Fabric, ring: Ring, position: int, controller: str):
        self.ring = ring
        self.L = ring.length
        self.position = position
        self.controller = controller
        self.fabric = fabric.with_rules([ring.loopbacks(position, controller)])
        self.records: list = []

    def _send(self, direction: str, offset: Optional[int]) -> ProbeOutcome:
        if direction == "cw":
            rules, start, flow, bounce_set = self.ring.cw, self.position, FLOW_CW, 1
        else:
            if self.ring.bounce_2 is None:
                raise DiagnosisError("counter-clockwise probing needs the second bounce set")
            rules, flow, bounce_set = self.ring.ccw, FLOW_CCW, 2
            start = ccw_position(self.position, self.L)
        ctx = rules.contexts[start]
        target = None if offset is None else (start + offset) % self.L
        header = Header(flow, target, bounce_set, ctx.vlan, self.controller)
        out = self.fabric.inject(header, rules.walk.arcs[start].tail, ctx.in_arc)
        if log.isEnabledFor(logging.DEBUG):
            log.debug("%s probe, target %s, returned=%s\n%s", direction, target,
                      out.returned, out.to_jsonl())
        return out

    def loop(self, direction: str = "cw") -> bool:
        out = self._send(direction, None)
        self.records.append(ProbeRecord(None, direction, out.returned, self.L))
        return out.returned

    def probe(self, direction: str, offset: int) -> bool:
        out = self._send(direction, offset)
        start = self.position if direction == "cw" else ccw_position(self.position, self.L)
        self.records.append(ProbeRecord((start + offset) % self.L, direction, out.returned, 2 * offset))
        return out.returned


def _split_targets(lo: int, hi: int, m: int) -> list:
    n = hi - lo + 1
    return sorted({lo + (i * n) // (m + 1) for i in range(1, m + 1)} - {lo})


def _search(session: _Session, direction: str, lo: int, hi: int, m: int = 1):
    """Narrow the first broken offset down to one value.

    Returns ``(offset, rounds)`` where each round lists the offsets probed
    together.  Splits favour the injection side: with one probe the target
    is ``lo + floor(n/2)``.
    """
    rounds = []
    while lo < hi:
        targets = _split_targets(lo, hi, m)
        rounds.append(targets)
        results = [(k, session.probe(direction, k)) for k in targets]
        for k, ok in results:
            if ok:
                lo = max(lo, k)
            else:
                hi = min(hi, k - 1)
    return lo, rounds


def arc_at(ring: Ring, direction: str, position: int, offset: int):
    """The ring arc ``offset`` steps from clockwise position ``position``."""
    L = ring.length
    if direction == "cw":
        return ring.walk.arcs[(position + offset) % L]
    return ring.ccw.walk.arcs[(ccw_position(position, L) + offset) % L]


def _located(arc, asymmetric: bool):
    return {arc, arc.reversed()} if asymmetric else {arc.edge}


def _start(fabric: Fabric, view: RingView, position: Optional[int], controller: str):
    if position is None:
        position = view.injection_points[0]
    if not 0 <= position < view.length:
        raise DiagnosisError(f"position {position} is not on the ring")
    if view.walk.arcs[position].tail not in view.domain:
        raise DiagnosisError(f"position {position} is outside the control domain")
    return _Session(fabric, view.ring, position, controller)


def _report(session_records, verdict, located, strategy, tau, latency_hops=None,
            directions=None, ambiguous=False) -> DiagnosisReport:
    total = sum(r.hops for r in session_records)
    hops_for_time = total if latency_hops is None else latency_hops
    return DiagnosisReport(verdict, frozenset(located), len(session_records), total,
                           tau * hops_for_time, strategy, tuple(session_records),
                           directions or {}, ambiguous)


def verify(fabric: Fabric, view: RingView, position: Optional[int] = None,
           controller: str = DEFAULT_CONTROLLER) -> DiagnosisReport:
    """Send one probe all the way round; healthy iff it comes back."""
    s = _start(fabric, view, position, controller)
    ok = s.loop("cw")
    return _report(s.records, HEALTHY if ok else FAILED, (), "verify", fabric.tau)


def locate_single(fabric: Fabric, view: RingView, position: Optional[int] = None,
                  controller: str = DEFAULT_CONTROLLER) -> DiagnosisReport:
    """Verify, then bisect clockwise for the first broken arc."""
    return locate_parallel(fabric, view, position, 1, controller, strategy="sequential")


def locate_parallel(fabric: Fabric, view: RingView, position: Optional[int] = None,
                    m: int = 1, controller: str = DEFAULT_CONTROLLER,
                    strategy: Optional[str] = None) -> DiagnosisReport:
    """Verify, then split the suspect segment into ``m + 1`` parts per round.

    Probes of one round travel concurrently, so a round costs the time of its
    longest probe.
    """
    if m < 1:
        raise DiagnosisError("parallel search needs m >= 1")
    strategy = strategy or f"parallel({m})"
    s = _start(fabric, view, position, controller)
    L = view.length
    if s.loop("cw"):
        return _report(s.records, HEALTHY, (), strategy, fabric.tau)
    offset, rounds = _search(s, "cw", 0, L - 1, m)
    arc = arc_at(view.ring, "cw", s.position, offset)
    asym = fabric.failures.mode == ASYMMETRIC
    located = _located(arc, asym)
    time_hops = L + sum(2 * max(r) for r in rounds) if m > 1 else None
    return _report(s.records, FAILED, located, strategy, fabric.tau, time_hops,
                   {x: "cw" for x in located}, asym)


def locate_bidirectional(fabric: Fabric, view: RingView, position: Optional[int] = None,
                         m: int = 1, controller: str = DEFAULT_CONTROLLER) -> DiagnosisReport:
    """Like ``locate_parallel`` but finishes counter-clockwise when that is shorter.

    After the first round, if every probe came back the fault lies past the
    farthest target; the rest of the search then runs counter-clockwise over
    the remaining stretch, using the second bounce set.
    """
    if view.ring.bounce_2 is None:
        raise DiagnosisError("bidirectional search needs the second bounce set")
    if m < 1:
        raise DiagnosisError("bidirectional search needs m >= 1")
    s = _start(fabric, view, position, controller)
    L = view.length
    if s.loop("cw"):
        return _report(s.records, HEALTHY, (), "bidirectional", fabric.tau)
    targets = _split_targets(0, L - 1, m)
    lo, hi = 0, L - 1
    for k in targets:
        if s.probe("cw", k):
            lo = max(lo, k)
        else:
            hi = min(hi, k - 1)
    rounds = [targets]
    if hi == L - 1 and lo > 0:
        direction = "ccw"
        offset, more = _search(s, "ccw", 0, L - 1 - lo, m)
    else:
        direction = "cw"
        offset, more = _search(s, "cw", lo, hi, m)
    rounds += more
    arc = arc_at(view.ring, direction, s.position, offset)
    asym = fabric.failures.mode == ASYMMETRIC
    located = _located(arc, asym)
    time_hops = L + sum(2 * max(r) for r in rounds) if m > 1 else None
    return _report(s.records, FAILED, located, "bidirectional", fabric.tau, time_hops,
                   {x: direction for x in located}, asym)


def locate_multi(fabric: Fabric, view: RingView, controller: str = DEFAULT_CONTROLLER) -> DiagnosisReport:
    """Search both directions from every domain position and pool the findings.

    Each search reports the first broken arc it meets, so at least one
    failure is always found and at most two per injection position.
    """
    if view.ring.bounce_2 is None:
        raise DiagnosisError("multi-point search needs the second bounce set")
    first = _start(fabric, view, view.injection_points[0], controller)
    if first.loop("cw"):
        return _report(first.records, HEALTHY, (), "multi", fabric.tau)
    records = list(first.records)
    located, directions = set(), {}
    asym = fabric.failures.mode == ASYMMETRIC
    for p in view.injection_points:
        for direction in ("cw", "ccw"):
            arc, probes = search_direction(fabric, view, p, direction, controller)
            for x in _located(arc, asym):
                located.add(x)
                directions.setdefault(x, []).append((direction, p))
            records.extend(probes)
    directions = {k: tuple(v) for k, v in directions.items()}
    return _report(records, FAILED, located, "multi", fabric.tau, None, directions, asym)


def search_direction(fabric: Fabric, view: RingView, position: int, direction: str,
                     controller: str = DEFAULT_CONTROLLER):
    """Bisect one direction from ``position`` without a verification probe.

    Returns the first broken arc met in that direction and the probe records.
    The answer is only meaningful when some ring link is broken.
    """
    s = _start(fabric, view, position, controller)
    offset, _ = _search(s, direction, 0, view.length - 1)
    return arc_at(view.ring, direction, position, offset), tuple(s.records)


# -- analytic bounds ---------------------------------------------------------

def ceil_log(n: int, base: int) -> int:
    """Smallest t with base**t >= n, in exact integer arithmetic."""
    if n < 1 or base < 2:
        raise ValueError("need n >= 1 and base >= 2")
    t, power = 0, 1
    while power < n:
        power *= base
        t += 1
    return t


@dataclass(frozen=True)
class BoundsReport:
    length: int
    kappa: int
    m: int
    tau: float
    bidirectional: bool
    static_rules: int
    messages: int
    latency_lower: float
    latency_upper_sequential: float
    latency_upper: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def cost_bounds(L: int, kappa: int = 0, m: int = 1, tau: float = 1.0,
                bidirectional: bool = False) -> BoundsReport:
    """Rule count, message count and latency bounds for a ring of length ``L``.

    ``latency_upper`` is the m-ary bound ``(L + 2L*ceil(log_{m+1} L)) tau``,
    with the inner term halved when the search may switch direction.
    """
    if L < 2:
        raise ValueError("ring length must be at least 2")
    if m < 1:
        raise ValueError("m must be at least 1")
    depth = ceil_log(L, m + 1)
    rules = (4 if bidirectional else 3) * L - 2 * kappa
    lower = (3 * L - 2) * tau
    upper_seq = (L * (2 * math.log2(L) - 1) + 2) * tau
    upper = (L + (1 if bidirectional else 2) * L * depth) * tau
    return BoundsReport(L, kappa, m, tau, bidirectional, rules, 1 + m * depth, lower, upper_seq, upper)
