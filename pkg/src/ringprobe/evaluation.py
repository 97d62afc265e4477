"""Corpus studies: rule-cost ratios, multi-failure localization, cost tables.

Every study is deterministic.  Topologies are processed in name order and
files that cannot be studied are collected as skip records rather than
raising.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from . import diagnosis as dg
from .rules import build_ring
from .simulator import ASYMMETRIC, SYMMETRIC, FailureState, set_failures
from .topology import (ControlDomain, Topology, TopologyError, find_bridges, is_connected,
                       load_topology)
from .walks import improve_walk, solve_cpp, walk_metrics

log = logging.getLogger(__name__)

TOPOLOGY_SUFFIXES = (".graphml", ".edgelist", ".edges", ".txt")
DEFAULT_PATTERN_CAP = 200_000
REFERENCE_TABLE_M = (1, 2, 3, 4, 40, 255, 65535)


@dataclass
class ExperimentConfig:
    corpus_dir: Optional[str] = None
    mode: str = "ratio"
    failures_k: int = 4
    max_edges: int = 20
    seed: int = 0
    tau_us: float = 1.0
    m: int = 1
    output: Optional[str] = None
    asymmetric: bool = False
    pattern_cap: int = DEFAULT_PATTERN_CAP

    def __post_init__(self):
        if self.failures_k < 1:
            raise ValueError("failures_k must be at least 1")
        if self.max_edges < 1:
            raise ValueError("max_edges must be at least 1")
        if self.m < 1:
            raise ValueError("m must be at least 1")


@dataclass(frozen=True)
class Skip:
    topology: str
    reason: str
    error: bool = False   # True when the file itself was unusable


@dataclass
class Study:
    """Records of one experiment plus the topologies left out of it."""

    kind: str
    records: list
    skipped: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)

    @property
    def had_errors(self) -> bool:
        return any(s.error for s in self.skipped)

    def rows(self) -> list:
        return [asdict(r) for r in self.records]

    def to_json(self) -> str:
        body = {"kind": self.kind, "records": self.rows(), "summary": self.summary,
                "skipped": [asdict(s) for s in self.skipped]}
        return json.dumps(body, indent=2, sort_keys=True) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        rows = self.rows()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        for k, v in self.summary.items():
            buf.write(f"# {k}: {v}\n")
        for s in self.skipped:
            buf.write(f"# skipped {s.topology}: {s.reason}\n")
        return buf.getvalue()


# -- corpus ------------------------------------------------------------------

def load_corpus(directory) -> tuple:
    """Load every topology file under ``directory``.

    Returns ``(topologies, skipped)``, both sorted by name.  Unreadable files,
    disconnected graphs and graphs with fewer than two edges are skipped.
    """
    root = Path(directory)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus directory {root} not found")
    good, skipped = [], []
    for path in sorted(p for p in root.rglob("*") if p.suffix.lower() in TOPOLOGY_SUFFIXES):
        try:
            t = load_topology(path)
        except (TopologyError, OSError, ValueError) as exc:
            log.warning("skipping %s: %s", path.name, exc)
            skipped.append(Skip(path.stem, f"unreadable: {exc}", error=True))
            continue
        name = t.name or path.stem
        if t.num_edges < 2:
            skipped.append(Skip(name, "fewer than two edges"))
        elif not is_connected(t):
            skipped.append(Skip(name, "not connected"))
        else:
            good.append(t)
    good.sort(key=lambda t: t.name)
    skipped.sort(key=lambda s: s.topology)
    return good, skipped


def _corpus(cfg: ExperimentConfig):
    if cfg.corpus_dir is None:
        raise ValueError("this study needs a corpus directory")
    return load_corpus(cfg.corpus_dir)


# -- rule-cost ratio ---------------------------------------------------------

@dataclass(frozen=True)
class RatioRecord:
    topology: str
    edges: int
    bridges: int
    L_opt: int
    kappa: int
    rule_cost: int
    lower_bound: int
    ratio: float


def ratio_record(t: Topology) -> RatioRecord:
    walk = improve_walk(solve_cpp(t), t)
    met = walk_metrics(walk)
    bridges = len(find_bridges(t))
    lower = t.num_edges + bridges
    return RatioRecord(t.name, t.num_edges, bridges, met.length, met.duplicates,
                       met.rule_cost, lower, met.rule_cost / lower)


def run_ratio(cfg: ExperimentConfig, topologies=None) -> Study:
    """Static-rule cost of the improved walk relative to ``|E| + |B|``."""
    if topologies is None:
        topologies, skipped = _corpus(cfg)
    else:
        skipped = []
    records = [ratio_record(t) for t in sorted(topologies, key=lambda t: t.name)]
    summary = {}
    if records:
        ratios = [r.ratio for r in records]
        summary = {"topologies": len(records),
                   "fraction_optimal": sum(r == 1.0 for r in ratios) / len(ratios),
                   "max_ratio": max(ratios),
                   "mean_ratio": sum(ratios) / len(ratios)}
    return Study("ratio", records, skipped, summary)


# -- multi-failure study -----------------------------------------------------

@dataclass(frozen=True)
class MultifailRecord:
    topology: str
    edges: int
    switches: int
    L: int
    k: int
    patterns: int
    trials: int
    average_located: float
    min_located: int
    max_located: int
    max_two_beta: int
    over_bound: int     # trials that located more than 2*beta edges


class _DirectionalSearches:
    """Memoised single-direction searches on one ring.

    A search from one position in one direction only ever learns where the
    first broken arc is, so its result depends on that offset alone.  Each
    distinct offset is simulated once, with just the edge at that offset
    failed, and reused for every pattern that shares it.
    """

    def __init__(self, fabric, view: dg.RingView, controller: str = dg.DEFAULT_CONTROLLER):
        self.fabric = fabric
        self.view = view
        self.controller = controller
        self.L = view.length
        self._first = {}
        self._memo = {}

    def first_offsets(self, position: int, direction: str) -> dict:
        key = (position, direction)
        table = self._first.get(key)
        if table is None:
            table = {}
            for off in range(self.L):
                table.setdefault(dg.arc_at(self.view.ring, direction, position, off).edge, off)
            self._first[key] = table
        return table

    def search(self, position: int, direction: str, offset: int):
        key = (position, direction, offset)
        hit = self._memo.get(key)
        if hit is None:
            edge = dg.arc_at(self.view.ring, direction, position, offset).edge
            f = set_failures(self.fabric, FailureState(SYMMETRIC, {edge}))
            arc, probes = dg.search_direction(f, self.view, position, direction, self.controller)
            hit = (arc.edge, len(probes))
            self._memo[key] = hit
        return hit

    def locate(self, failed) -> tuple:
        """Located edges and message count that ``locate_multi`` would report."""
        located = set()
        messages = 1
        for p in self.view.injection_points:
            for d in ("cw", "ccw"):
                first = self.first_offsets(p, d)
                offset = min(first[e] for e in failed)
                edge, probes = self.search(p, d, offset)
                located.add(edge)
                messages += probes
        return located, messages


def multifail_record(t: Topology, k: int) -> MultifailRecord:
    """Average located-edge count over every k-edge failure and single-switch domain."""
    ring = build_ring(t)
    fabric = dg.ring_fabric(t, ring)
    patterns = list(itertools.combinations(range(t.num_edges), k))
    total = trials = 0
    lo, hi, two_beta, over = math.inf, 0, 0, 0
    for s in t.switches:
        view = dg.RingView.create(ring, ControlDomain({s}))
        two_beta = max(two_beta, 2 * view.beta)
        searches = _DirectionalSearches(fabric, view)
        for failed in patterns:
            located, _ = searches.locate(failed)
            n = len(located)
            total += n
            trials += 1
            lo, hi = min(lo, n), max(hi, n)
            over += n > 2 * view.beta
    return MultifailRecord(t.name, t.num_edges, t.num_switches, ring.length, k, len(patterns),
                           trials, total / trials, int(lo), hi, two_beta, over)


def run_multifail(cfg: ExperimentConfig, topologies=None) -> Study:
    """Exhaustive k-failure localization study over the small corpus graphs."""
    if topologies is None:
        topologies, skipped = _corpus(cfg)
    else:
        skipped = []
    records = []
    for t in sorted(topologies, key=lambda t: t.name):
        if t.num_edges > cfg.max_edges:
            skipped.append(Skip(t.name, f"more than {cfg.max_edges} edges"))
            continue
        if t.num_edges < cfg.failures_k:
            skipped.append(Skip(t.name, f"fewer than {cfg.failures_k} edges"))
            continue
        count = math.comb(t.num_edges, cfg.failures_k)
        if count > cfg.pattern_cap:
            skipped.append(Skip(t.name, f"{count} failure patterns exceed the cap of {cfg.pattern_cap}"))
            continue
        log.info("multifail %s (%d edges)", t.name, t.num_edges)
        records.append(multifail_record(t, cfg.failures_k))
    summary = {}
    if records:
        summary = {"topologies": len(records), "k": cfg.failures_k,
                   "min_average": min(r.average_located for r in records),
                   "max_average": max(r.average_located for r in records)}
    skipped.sort(key=lambda s: s.topology)
    return Study("multifail", records, skipped, summary)


# -- cost table --------------------------------------------------------------

@dataclass(frozen=True)
class BoundsRow:
    L: int
    m: int
    M: int
    T_UB_s: float
    T_UB_s_3sf: float
    bidirectional: bool


def round_sig(x: float, digits: int = 3) -> float:
    if x == 0:
        return 0.0
    return round(x, digits - 1 - int(math.floor(math.log10(abs(x)))))


def run_bounds(L: int = 65536, tau_us: float = 1.0, ms=REFERENCE_TABLE_M,
               bidirectional: bool = False) -> Study:
    """Message counts and latency upper bounds for a range of parallelism levels."""
    rows = []
    for m in ms:
        b = dg.cost_bounds(L, 0, m, tau_us, bidirectional)
        seconds = b.latency_upper * 1e-6
        rows.append(BoundsRow(L, m, b.messages, seconds, round_sig(seconds), bidirectional))
    seq = dg.cost_bounds(L, 0, 1, tau_us)
    summary = {"sequential_lower_s": seq.latency_lower * 1e-6,
               "sequential_upper_s": seq.latency_upper_sequential * 1e-6,
               "sequential_lower_s_3sf": round_sig(seq.latency_lower * 1e-6),
               "sequential_upper_s_4sf": round_sig(seq.latency_upper_sequential * 1e-6, 4)}
    return Study("bounds", rows, [], summary)


# -- single diagnosis --------------------------------------------------------

STRATEGIES = ("sequential", "parallel", "bidirectional", "multi")


def run_diagnose(t: Topology, failed=(), domain=(0,), strategy: str = "sequential",
                 m: int = 1, tau_us: float = 1.0, asymmetric: bool = False,
                 position: Optional[int] = None) -> dg.DiagnosisReport:
    """Build the ring for ``t``, fail the given links and run one diagnosis.

    ``failed`` holds edge ids, or ``(tail, head)`` switch pairs in asymmetric
    mode.
    """
    if strategy not in STRATEGIES:
        raise ValueError(f"unknown strategy {strategy!r}")
    ring = build_ring(t, mode="asymmetric" if asymmetric else "symmetric")
    fabric = dg.ring_fabric(t, ring, tau_us)
    if asymmetric:
        arcs = set()
        for tail, head in failed:
            arc = next((a for a in ring.walk.arcs if a.tail == tail and a.head == head), None)
            if arc is None:
                raise TopologyError(f"no arc {tail}->{head}")
            arcs.add(arc)
        fabric = set_failures(fabric, FailureState(ASYMMETRIC, arcs))
    else:
        fabric = set_failures(fabric, FailureState(SYMMETRIC, set(failed)))
    view = dg.RingView.create(ring, ControlDomain(set(domain)))
    if strategy == "sequential":
        return dg.locate_single(fabric, view, position)
    if strategy == "parallel":
        return dg.locate_parallel(fabric, view, position, m)
    if strategy == "bidirectional":
        return dg.locate_bidirectional(fabric, view, position, m)
    return dg.locate_multi(fabric, view)
