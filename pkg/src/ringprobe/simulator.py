"""Deterministic forwarding-plane emulator.

Switches hold priority-ordered rule tables; a probe is matched, rewritten
and forwarded hop by hop until it reaches a controller, hits a failed link,
finds no rule, or runs out of hop budget.

Forwarding never depends on the failure state (a failed link only drops the
packet), so each fabric caches the faultless path of every probe it has seen
and answers failure scenarios by cutting that path at the first blocked arc.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .rules import DecTtl, Forward, Header, Rule, SendBack, SetFlow, SetVlan, ToController
from .topology import Arc, Topology, TopologyError

SYMMETRIC = "symmetric"
ASYMMETRIC = "asymmetric"

DROP_FAILED_LINK = "failed_link"
DROP_NO_MATCH = "no_match"
DROP_TTL = "ttl_exhausted"


class FabricError(ValueError):
    pass


@dataclass(frozen=True)
class FailureState:
    """Failed links: edge ids in symmetric mode, arcs in asymmetric mode."""

    mode: str = SYMMETRIC
    failed: frozenset = frozenset()

    def __post_init__(self):
        if self.mode not in (SYMMETRIC, ASYMMETRIC):
            raise ValueError(f"unknown failure mode {self.mode!r}")
        object.__setattr__(self, "failed", frozenset(self.failed))
        kind = int if self.mode == SYMMETRIC else Arc
        if any(not isinstance(x, kind) for x in self.failed):
            raise ValueError(f"{self.mode} failures must be given as {kind.__name__}s")

    def blocks(self, arc: Arc) -> bool:
        if self.mode == SYMMETRIC:
            return arc.edge in self.failed
        return arc in self.failed


@dataclass(frozen=True)
class TraceStep:
    switch: int
    rule: int            # index into the switch's table, -1 when nothing matched
    out: Union[Arc, str]  # arc taken, "drop" or "to_controller"

    def to_dict(self) -> dict:
        return {"switch": self.switch, "rule": self.rule,
                "out": str(self.out) if isinstance(self.out, Arc) else self.out}


@dataclass(frozen=True)
class ProbeOutcome:
    returned: bool
    hops: int
    trace: tuple
    drop_reason: Optional[str] = None
    header: Optional[Header] = None

    def arcs(self) -> list:
        return [s.out for s in self.trace if isinstance(s.out, Arc)]

    def to_jsonl(self) -> str:
        return "\n".join(json.dumps(s.to_dict()) for s in self.trace)


@dataclass
class _Path:
    """A faultless probe path plus indexes for fast truncation."""

    outcome: ProbeOutcome
    first_edge: dict
    first_arc: dict


class _Shared:
    """State shared by fabrics that differ only in their failure state."""

    def __init__(self):
        self.paths: dict = {}
        self.derived: dict = {}


def _validate(t: Topology, rule: Rule) -> None:
    if not 0 <= rule.switch < t.num_switches:
        raise FabricError(f"rule references unknown switch {rule.switch}")
    for a in rule.actions:
        if isinstance(a, Forward) and not t.has_arc(a.arc):
            raise FabricError(f"rule at {rule.switch} forwards over unknown arc {a.arc}")
    port = rule.match.in_port
    if isinstance(port, Arc):
        if not t.has_arc(port):
            raise FabricError(f"rule at {rule.switch} matches unknown port {port}")
        if port.head != rule.switch:
            raise FabricError(f"rule at {rule.switch} matches a port of another switch")


def _tables(t: Topology, sets, base=None) -> dict:
    tables = {s: list(base.get(s, ())) for s in t.switches} if base else {s: [] for s in t.switches}
    for rs in sets:
        rules = rs.rules if hasattr(rs, "rules") else rs
        for rule in rules:
            _validate(t, rule)
            if rule in tables[rule.switch]:
                raise FabricError(f"duplicate rule at switch {rule.switch}: {rule}")
            tables[rule.switch].append(rule)
    # stable: insertion order is kept within a priority level
    return {s: tuple(sorted(rules, key=lambda r: -r.priority)) for s, rules in tables.items()}


@dataclass(frozen=True)
class Fabric:
    topology: Topology
    tables: dict
    failures: FailureState = FailureState()
    tau: float = 1.0
    hop_budget: Optional[int] = None
    _shared: _Shared = field(default_factory=_Shared, repr=False, compare=False)

    @property
    def num_rules(self) -> int:
        return sum(len(v) for v in self.tables.values())

    def with_rules(self, sets) -> "Fabric":
        """Fabric with extra rules installed; derived fabrics are memoised."""
        key = tuple(r for rs in sets for r in (rs.rules if hasattr(rs, "rules") else rs))
        entry = self._shared.derived.get(key)
        if entry is None:
            entry = (_tables(self.topology, [key], self.tables), _Shared())
            self._shared.derived[key] = entry
        tables, shared = entry
        return Fabric(self.topology, tables, self.failures, self.tau, self.hop_budget, shared)

    def inject(self, header: Header, switch: int, in_port: Optional[Arc] = None,
               hop_budget: Optional[int] = None) -> ProbeOutcome:
        return inject(self, header, switch, in_port, hop_budget)


def build_fabric(t: Topology, sets=(), tau: float = 1.0, hop_budget: Optional[int] = None) -> Fabric:
    """Install rule sets on a topology.

    Rules are validated against the topology, identical duplicates are
    rejected, and each table is ordered by priority (stable within a level).
    ``hop_budget`` defaults to ``8|E| + 4``, which covers ``4L + 4`` for any
    ring of length ``L <= 2|E|``.
    """
    if hop_budget is None:
        hop_budget = 8 * t.num_edges + 4
    return Fabric(t, _tables(t, sets), FailureState(), tau, hop_budget)


def set_failures(f: Fabric, fs: FailureState) -> Fabric:
    t = f.topology
    for x in fs.failed:
        if fs.mode == SYMMETRIC and not 0 <= x < t.num_edges:
            raise TopologyError(f"unknown edge {x}")
        if fs.mode == ASYMMETRIC and not t.has_arc(x):
            raise TopologyError(f"unknown arc {x}")
    return Fabric(t, f.tables, fs, f.tau, f.hop_budget, f._shared)


def _apply(header: Header, actions):
    """Run header rewrites; return the new header and the terminal action."""
    terminal = None
    for a in actions:
        if isinstance(a, SetVlan):
            header = replace(header, vlan=a.tag)
        elif isinstance(a, SetFlow):
            header = replace(header, flow=a.flow)
        elif isinstance(a, DecTtl):
            header = replace(header, ttl=(header.ttl or 0) - 1)
        else:
            terminal = a
    return header, terminal


def _trace_faultless(f: Fabric, header: Header, switch: int, in_port, budget: int) -> _Path:
    steps = []
    hops = 0
    first = True
    current = switch
    port = in_port
    returned = False
    reason = None
    while True:
        table = f.tables.get(current, ())
        hit = -1
        for i, rule in enumerate(table):
            if first and any(isinstance(a, ToController) for a in rule.actions):
                continue
            if rule.match.matches(port, header):
                hit = i
                break
        if hit < 0:
            steps.append(TraceStep(current, -1, "drop"))
            reason = DROP_NO_MATCH
            break
        header, action = _apply(header, table[hit].actions)
        if header.ttl is not None and header.ttl <= 0:
            steps.append(TraceStep(current, hit, "drop"))
            reason = DROP_TTL
            break
        if isinstance(action, ToController):
            steps.append(TraceStep(current, hit, "to_controller"))
            returned = True
            break
        if isinstance(action, SendBack):
            if first:
                # the packet came from the controller; hand it straight back
                steps.append(TraceStep(current, hit, "to_controller"))
                returned = True
                break
            arc = port.reversed()
        elif isinstance(action, Forward):
            arc = action.arc
        else:
            steps.append(TraceStep(current, hit, "drop"))
            reason = DROP_NO_MATCH
            break
        if hops >= budget:
            steps.append(TraceStep(current, hit, "drop"))
            reason = DROP_TTL
            break
        steps.append(TraceStep(current, hit, arc))
        hops += 1
        current, port, first = arc.head, arc, False
    first_edge, first_arc = {}, {}
    for i, s in enumerate(steps):
        if isinstance(s.out, Arc):
            first_edge.setdefault(s.out.edge, i)
            first_arc.setdefault(s.out, i)
    outcome = ProbeOutcome(returned, hops, tuple(steps), reason, header)
    return _Path(outcome, first_edge, first_arc)


def inject(f: Fabric, header: Header, switch: int, in_port: Optional[Arc] = None,
           hop_budget: Optional[int] = None) -> ProbeOutcome:
    """Inject a probe at ``switch`` as if it arrived over ``in_port``.

    The first hop is taken on behalf of the controller: rules that would hand
    the packet to a controller are skipped there, and a send-back returns the
    packet to the controller without touching any link.
    """
    budget = f.hop_budget if hop_budget is None else hop_budget
    if budget is None:
        budget = 8 * f.topology.num_edges + 4
    key = (header, switch, in_port, budget)
    path = f._shared.paths.get(key)
    if path is None:
        path = _trace_faultless(f, header, switch, in_port, budget)
        f._shared.paths[key] = path
    if not f.failures.failed:
        return path.outcome
    index = path.first_edge if f.failures.mode == SYMMETRIC else path.first_arc
    cut = min((index[x] for x in f.failures.failed if x in index), default=None)
    if cut is None:
        return path.outcome
    step = path.outcome.trace[cut]
    trace = path.outcome.trace[:cut] + (TraceStep(step.switch, step.rule, "drop"),)
    return ProbeOutcome(False, cut, trace, DROP_FAILED_LINK, None)


def latency_of(outcomes, parallel: bool, tau: float = 1.0) -> float:
    """Time for a batch of probes: the longest one if parallel, else the sum."""
    hops = [o.hops if isinstance(o, ProbeOutcome) else int(o) for o in outcomes]
    if not hops:
        return 0.0
    return tau * (max(hops) if parallel else sum(hops))
