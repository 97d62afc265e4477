"""Static rule synthesis: turn a ring walk into per-switch match/action rules.

Header fields are abstract (flow tag, bounce target, vlan, controller) rather
than bit-exact packet encodings.  A packet at ring position ``p`` arrives over
``walk.arcs[p-1]`` carrying the vlan ``contexts[p].vlan``; the compiled rules
must send it out over ``walk.arcs[p]`` using one rule per distinct arc.
"""
from __future__ import annotations

import json
import logging
from collections import defaultdict
from dataclasses import dataclass, field, replace
from typing import Optional

from .topology import Arc
from .walks import Walk, reverse_walk, walk_metrics

logger = logging.getLogger(__name__)

FLOW_CW = "A"
FLOW_CCW = "B"

PRIORITY_LOOPBACK = 3
PRIORITY_BOUNCE = 2
PRIORITY_WALK = 1

DEFAULT_TAG_BUDGET = 4094


class _Any:
    """Wildcard marker for match fields."""

    def __repr__(self):
        return "*"

    def __reduce__(self):
        return "ANY"


ANY = _Any()


class RuleError(ValueError):
    pass


class TagBudgetExceeded(RuleError):
    pass


# -- headers, matches, actions -----------------------------------------------

@dataclass(frozen=True)
class Header:
    flow: str
    bounce_target: Optional[int] = None
    bounce_set: int = 1
    vlan: Optional[int] = None
    controller: Optional[str] = None
    ttl: Optional[int] = None

    def __post_init__(self):
        if self.flow not in (FLOW_CW, FLOW_CCW):
            raise ValueError(f"flow must be {FLOW_CW!r} or {FLOW_CCW!r}")
        if self.bounce_set not in (1, 2):
            raise ValueError("bounce_set must be 1 or 2")


@dataclass(frozen=True)
class Match:
    """Match predicate.  ``ANY`` fields are wildcards; ``vlan=None`` means untagged."""

    in_port: object = ANY
    flow: object = ANY
    bounce_target: object = ANY
    bounce_set: object = ANY
    vlan: object = ANY
    controller: object = ANY

    def matches(self, in_port, header: Header) -> bool:
        return ((self.in_port is ANY or self.in_port == in_port)
                and (self.flow is ANY or self.flow == header.flow)
                and (self.bounce_target is ANY or self.bounce_target == header.bounce_target)
                and (self.bounce_set is ANY or self.bounce_set == header.bounce_set)
                and (self.vlan is ANY or self.vlan == header.vlan)
                and (self.controller is ANY or self.controller == header.controller))

    def to_dict(self) -> dict:
        out = {}
        for name in ("in_port", "flow", "bounce_target", "bounce_set", "vlan", "controller"):
            value = getattr(self, name)
            if value is ANY:
                continue
            out[name] = str(value) if isinstance(value, Arc) else value
        return out


@dataclass(frozen=True)
class SetVlan:
    tag: Optional[int]


@dataclass(frozen=True)
class SetFlow:
    flow: str


@dataclass(frozen=True)
class DecTtl:
    pass


@dataclass(frozen=True)
class Forward:
    arc: Arc


@dataclass(frozen=True)
class SendBack:
    """Send the packet out of the port it arrived on."""


@dataclass(frozen=True)
class ToController:
    controller: str


TERMINAL_ACTIONS = (Forward, SendBack, ToController)


def _action_dict(action) -> dict:
    if isinstance(action, SetVlan):
        return {"set_vlan": action.tag}
    if isinstance(action, SetFlow):
        return {"set_flow": action.flow}
    if isinstance(action, DecTtl):
        return {"dec_ttl": True}
    if isinstance(action, Forward):
        return {"forward": str(action.arc)}
    if isinstance(action, SendBack):
        return {"send_back_in_port": True}
    return {"to_controller": action.controller}


@dataclass(frozen=True)
class Rule:
    switch: int
    priority: int
    match: Match
    actions: tuple

    def __post_init__(self):
        object.__setattr__(self, "actions", tuple(self.actions))
        terminal = [i for i, a in enumerate(self.actions) if isinstance(a, TERMINAL_ACTIONS)]
        if len(terminal) > 1:
            raise RuleError("a rule may carry at most one forwarding action")
        if terminal and terminal[0] != len(self.actions) - 1:
            raise RuleError("the forwarding action must come last")
        for a in self.actions:
            if isinstance(a, Forward) and a.arc.tail != self.switch:
                raise RuleError(f"rule at switch {self.switch} forwards over {a.arc}")

    def to_dict(self) -> dict:
        return {"switch": self.switch, "priority": self.priority,
                "match": self.match.to_dict(),
                "actions": [_action_dict(a) for a in self.actions]}


@dataclass(frozen=True)
class Context:
    """What a probe looks like when it reaches a ring position."""

    in_arc: Arc
    vlan: Optional[int]


@dataclass(frozen=True)
class RuleSet:
    kind: str
    rules: tuple
    walk: Optional[Walk] = None
    flow: Optional[str] = None
    contexts: tuple = ()
    extra_rules: int = 0

    def __len__(self) -> int:
        return len(self.rules)

    def to_list(self) -> list:
        return [r.to_dict() for r in self.rules]

    def to_json(self) -> str:
        return json.dumps(self.to_list())


def total_static_rules(sets) -> int:
    """Number of static rules across rule sets (loopback sets are rejected)."""
    total = 0
    for s in sets:
        if s.kind == "loopback":
            raise RuleError("loopback rules are dynamic and not counted as static")
        total += len(s.rules)
    return total


def render_table(rule_sets, labels=None) -> str:
    """Plain-text table of rules, one line per rule, grouped by switch."""
    def name(s):
        return labels[s] if labels else str(s)

    def fmt_arc(a):
        return f"{name(a.tail)}->{name(a.head)}"

    rows = []
    for rs in rule_sets:
        for r in rs.rules:
            m = []
            for key, value in vars(r.match).items():
                if value is ANY:
                    continue
                if isinstance(value, Arc):
                    value = fmt_arc(value)
                elif key == "vlan" and value is None:
                    value = "untagged"
                m.append(f"{key}={value}")
            acts = []
            for a in r.actions:
                if isinstance(a, Forward):
                    acts.append(f"forward {fmt_arc(a.arc)}")
                elif isinstance(a, SetVlan):
                    acts.append("strip vlan" if a.tag is None else f"set vlan {a.tag}")
                elif isinstance(a, SetFlow):
                    acts.append(f"set flow {a.flow}")
                elif isinstance(a, SendBack):
                    acts.append("send back in_port")
                elif isinstance(a, ToController):
                    acts.append(f"to controller {a.controller}")
                else:
                    acts.append("dec ttl")
            rows.append((r.switch, -r.priority, rs.kind, name(r.switch), r.priority,
                         ", ".join(m) or "any", "; ".join(acts)))
    rows.sort(key=lambda row: (row[0], row[1]))
    header = ("switch", "prio", "set", "match", "actions")
    body = [(row[3], str(row[4]), row[2], row[5], row[6]) for row in rows]
    widths = [max(len(x[i]) for x in [header] + body) for i in range(4)]
    lines = []
    for row in [header] + body:
        lines.append("  ".join(c.ljust(w) for c, w in zip(row[:4], widths)) + "  " + row[4])
    return "\n".join(lines)


# -- walk compilation --------------------------------------------------------

def _vlan_sequence(arcs, setters) -> list:
    """Steady-state vlan seen at every position given per-arc set actions."""
    L = len(arcs)
    current = None
    for q in range(L - 1, -1, -1):
        if arcs[q] in setters:
            current = setters[arcs[q]]
            break
    out = []
    for p in range(L):
        out.append(current)
        if arcs[p] in setters:
            current = setters[arcs[p]]
    return out


def _discriminate(positions, arcs, vlans, spill: bool = False):
    """Ordered ``(out_arc, in_port, vlan)`` patterns for one switch, or None.

    Each out-arc gets a pattern that no other out-arc's arrival context
    matches; preference is in_port alone, then vlan alone, then both.  At most
    one out-arc may lack such a pattern and becomes the wildcard default.
    With ``spill`` any further such out-arc gets one exact pattern per
    arrival context instead, which costs extra rules.
    """
    L = len(arcs)
    ctx = defaultdict(set)
    for p in positions:
        ctx[arcs[p]].add((arcs[p - 1] if p else arcs[L - 1], vlans[p]))
    outs = sorted(ctx, key=lambda a: min(p for p in positions if arcs[p] == a))
    if len(outs) == 1:
        return [(outs[0], ANY, ANY)]
    patterns, lacking = [], []
    for o in outs:
        mine = ctx[o]
        others = set().union(*(ctx[x] for x in outs if x != o))
        ins = {c[0] for c in mine}
        tags = {c[1] for c in mine}
        if len(ins) == 1 and not any(c[0] in ins for c in others):
            patterns.append((o, next(iter(ins)), ANY))
        elif len(tags) == 1 and not any(c[1] in tags for c in others):
            patterns.append((o, ANY, next(iter(tags))))
        elif len(mine) == 1 and not (mine & others):
            c = next(iter(mine))
            patterns.append((o, c[0], c[1]))
        else:
            lacking.append(o)
    if len(lacking) > 1:
        if not spill:
            return None
        # the out-arc with the most contexts stays the default
        lacking.sort(key=lambda o: -len(ctx[o]))
        for o in lacking[1:]:
            others = set().union(*(ctx[x] for x in outs if x != o))
            if ctx[o] & others:
                return None
            patterns.extend((o, c[0], c[1]) for c in sorted(ctx[o], key=str))
    if lacking:
        patterns.append((lacking[0], ANY, ANY))
    return patterns


def _in_exclusive(positions, arcs, out_arc) -> bool:
    L = len(arcs)
    mine = {arcs[p - 1] if p else arcs[L - 1] for p in positions if arcs[p] == out_arc}
    rest = {arcs[p - 1] if p else arcs[L - 1] for p in positions if arcs[p] != out_arc}
    return len(mine) == 1 and not (mine & rest)


class _TagPlanner:
    """Greedy counter-clockwise tagger placement with consistency checks."""

    def __init__(self, walk: Walk, budget: int):
        self.arcs = walk.arcs
        self.L = len(walk.arcs)
        self.budget = budget
        self.by_switch = defaultdict(list)
        for p, a in enumerate(self.arcs):
            self.by_switch[a.tail].append(p)
        self.arc_count = defaultdict(int)
        for a in self.arcs:
            self.arc_count[a] += 1
        self.setters: dict = {}
        self.decided: list = []
        self.required: list = []

    def vlans(self):
        return _vlan_sequence(self.arcs, self.setters)

    def consistent(self) -> bool:
        vl = self.vlans()
        if any(vl[r] != t for r, t in self.required):
            return False
        return all(_discriminate(self.by_switch[s], self.arcs, vl) is not None for s in self.decided)

    def eligible(self, q: int, stage: str) -> bool:
        if stage == "strict":
            return len(self.by_switch[self.arcs[q].tail]) == 1
        if stage == "relaxed":
            return self.arc_count[self.arcs[q]] == 1
        return True

    def place(self, r: int, tag: int) -> bool:
        """Make the vlan at position ``r`` equal ``tag``."""
        self.required.append((r, tag))
        for stage in ("strict", "relaxed", "any"):
            for step in range(1, self.L):
                q = (r - step) % self.L
                a = self.arcs[q]
                if a in self.setters:
                    if self.setters[a] == tag and self.consistent():
                        return True
                    break
                if self.eligible(q, stage):
                    self.setters[a] = tag
                    if self.consistent():
                        return True
                    del self.setters[a]
        self.required.pop()
        return False

    def resolve(self, s: int) -> bool:
        positions = self.by_switch[s]
        if _discriminate(positions, self.arcs, self.vlans()) is not None:
            self.decided.append(s)
            return True
        outs = []
        for p in positions:
            if self.arcs[p] not in outs:
                outs.append(self.arcs[p])
        tagged = [o for o in outs if not _in_exclusive(positions, self.arcs, o)]
        variants = [tagged] + [tagged[:i] + tagged[i + 1:] for i in range(len(tagged) - 1, -1, -1)]
        used = set(self.setters.values())
        fresh_start = max(used, default=0) + 1
        for subset in variants:
            if not subset:
                continue
            for tags in (range(1, len(subset) + 1), range(fresh_start, fresh_start + len(subset))):
                tags = list(tags)
                if max(tags) > self.budget:
                    continue
                saved = (dict(self.setters), list(self.required))
                ok = True
                for o, t in zip(subset, tags):
                    for p in positions:
                        if self.arcs[p] == o and not self.place(p, t):
                            ok = False
                            break
                    if not ok:
                        break
                if ok and _discriminate(positions, self.arcs, self.vlans()) is not None:
                    self.decided.append(s)
                    return True
                self.setters, self.required = saved
        return False


def _replays(arcs, patterns_by_switch, setters) -> bool:
    """Check the first matching pattern sends every position along the walk."""
    vl = _vlan_sequence(arcs, setters)
    L = len(arcs)
    for p in range(L):
        in_arc = arcs[p - 1] if p else arcs[L - 1]
        for out, pin, pvl in patterns_by_switch[arcs[p].tail]:
            if (pin is ANY or pin == in_arc) and (pvl is ANY or pvl == vl[p]):
                if out != arcs[p]:
                    return False
                break
        else:
            return False
    return True


def _is_periodic(arcs) -> bool:
    L = len(arcs)
    for d in range(1, L):
        if L % d == 0 and all(arcs[i] == arcs[(i + d) % L] for i in range(L)):
            return True
    return False


def _positional_rules(walk: Walk, flow: str, kind: str, budget: int) -> RuleSet:
    """One rule per ring position; the vlan carries the position number."""
    arcs = walk.arcs
    L = len(arcs)
    if L > budget:
        raise TagBudgetExceeded(f"positional tagging needs {L} tags, budget is {budget}")
    rules, contexts = [], []
    for p, a in enumerate(arcs):
        in_arc = arcs[p - 1] if p else arcs[L - 1]
        contexts.append(Context(in_arc, p + 1))
        actions = (SetVlan((p + 1) % L + 1), Forward(a))
        rules.append(Rule(a.tail, PRIORITY_WALK, Match(in_port=in_arc, flow=flow, vlan=p + 1), actions))
    extra = L - walk_metrics(walk).unique_arcs
    return RuleSet(kind, tuple(rules), walk, flow, tuple(contexts), extra)


def _all_patterns(by_switch, arcs, setters, spill=False):
    vl = _vlan_sequence(arcs, setters)
    out = {}
    for s, positions in by_switch.items():
        pats = _discriminate(positions, arcs, vl, spill)
        if pats is None:
            return None
        out[s] = pats
    return out


def _greedy_plan(walk: Walk, budget: int):
    planner = _TagPlanner(walk, budget)
    order = sorted(planner.by_switch, key=lambda s: planner.by_switch[s][0])
    if not all(planner.resolve(s) for s in order):
        return None
    return planner.setters


def _canonical_plan(walk: Walk, by_switch, spill: bool):
    """Every arc used once sets its own tag; unnecessary setters are then dropped.

    A stretch of arcs traversed twice in a row cannot carry a setter without
    making its two passes look alike at the far end, so only single-use arcs
    are candidates.
    """
    arcs = walk.arcs
    counts = defaultdict(int)
    for a in arcs:
        counts[a] += 1
    setters = {}
    for a in arcs:
        if counts[a] == 1:
            setters[a] = len(setters) + 1
    pats = _all_patterns(by_switch, arcs, setters, spill)
    if pats is None:
        return None
    size = sum(map(len, pats.values()))
    for a in list(setters):
        tag = setters.pop(a)
        trial = _all_patterns(by_switch, arcs, setters, spill)
        if trial is None or sum(map(len, trial.values())) > size:
            setters[a] = tag
    # renumber in ring order
    relabel = {}
    for a in arcs:
        if a in setters and setters[a] not in relabel:
            relabel[setters[a]] = len(relabel) + 1
    return {a: relabel[t] for a, t in setters.items()}


def compile_walk(walk: Walk, flow: str = FLOW_CW, kind: str | None = None,
                 tag_budget: int = DEFAULT_TAG_BUDGET) -> RuleSet:
    """Compile a closed walk into forwarding rules, one per distinct arc when possible.

    Switches that always leave over the same arc get a single wildcard rule.
    Elsewhere the arriving port separates the outgoing arcs when it can; the
    remaining ones are told apart by vlan tags set further back on the ring.
    Taggers are first searched counter-clockwise from each tagged position,
    among switches visited once, then arcs used once, then anywhere, with
    every placement re-checked against the switches already settled.  If that
    greedy search gets stuck, every single-use arc is made a tagger and the
    superfluous ones are pruned.

    Some walks admit no one-rule-per-arc encoding at all: when two stretches
    traversed twice both start at the same switch, each stretch needs a
    different vlan on its two passes yet a single rule must forward both.
    Those switches get one exact-context rule per pass and the surplus is
    reported in ``extra_rules``.
    """
    if not walk.arcs:
        raise RuleError("cannot compile an empty walk")
    kind = kind or ("walk_cw" if flow == FLOW_CW else "walk_ccw")
    arcs = walk.arcs
    L = len(arcs)
    if _is_periodic(arcs):
        logger.warning("walk is periodic; using positional tags")
        return _positional_rules(walk, flow, kind, tag_budget)

    by_switch = defaultdict(list)
    for p, a in enumerate(arcs):
        by_switch[a.tail].append(p)
    order = sorted(by_switch, key=lambda s: by_switch[s][0])
    plan = None
    for stage in ("greedy", "canonical", "spill"):
        if stage == "greedy":
            setters = _greedy_plan(walk, tag_budget)
        else:
            setters = _canonical_plan(walk, by_switch, stage == "spill")
        if setters is None:
            continue
        patterns = _all_patterns(by_switch, arcs, setters, stage == "spill")
        if patterns is not None and _replays(arcs, patterns, setters):
            plan = (setters, patterns)
            break
        logger.debug("stage %s failed", stage)
    if plan is None:
        logger.warning("no tagging found for a walk of length %d; using positional tags", L)
        return _positional_rules(walk, flow, kind, tag_budget)
    setters, patterns = plan
    if len(set(setters.values())) > tag_budget:
        raise TagBudgetExceeded(f"{len(set(setters.values()))} tags exceed the budget of {tag_budget}")

    rules = []
    for s in order:
        for out, pin, pvl in patterns[s]:
            actions = []
            if out in setters:
                actions.append(SetVlan(setters[out]))
            actions.append(Forward(out))
            rules.append(Rule(s, PRIORITY_WALK, Match(in_port=pin, flow=flow, vlan=pvl), tuple(actions)))
    vl = _vlan_sequence(arcs, setters)
    contexts = tuple(Context(arcs[p - 1] if p else arcs[L - 1], vl[p]) for p in range(L))
    extra = len(rules) - walk_metrics(walk).unique_arcs
    if extra:
        logger.info("walk of length %d needs %d extra rule(s)", L, extra)
    return RuleSet(kind, tuple(rules), walk, flow, contexts, extra)


# -- bounce-back and loopback ------------------------------------------------

def ccw_position(position: int, length: int) -> int:
    """Index on the reversed ring of the switch at clockwise ``position``."""
    return (length - position) % length


def compile_bounceback(cw: RuleSet, ccw: RuleSet, bounce_set: int = 1) -> RuleSet:
    """One bounce rule per ring position.

    Set 1 catches clockwise probes addressed to a position and returns them
    counter-clockwise over the arriving port; set 2 does the mirror image.
    Each rule matches the exact arrival context of its position, so the probe
    is not turned around at an earlier visit to the same switch.
    """
    L = len(cw.contexts)
    if len(ccw.contexts) != L:
        raise RuleError("clockwise and counter-clockwise rings differ in length")
    rules = []
    if bounce_set == 1:
        src, dst, flow_in, flow_out = cw, ccw, FLOW_CW, FLOW_CCW
    elif bounce_set == 2:
        src, dst, flow_in, flow_out = ccw, cw, FLOW_CCW, FLOW_CW
    else:
        raise ValueError("bounce_set must be 1 or 2")
    for i in range(L):
        ctx = src.contexts[i]
        j = ccw_position(i, L)
        after = dst.contexts[(j + 1) % L].vlan
        match = Match(in_port=ctx.in_arc, flow=flow_in, bounce_target=i,
                      bounce_set=bounce_set, vlan=ctx.vlan)
        actions = (SetFlow(flow_out), SetVlan(after), SendBack())
        rules.append(Rule(src.walk.arcs[i].tail, PRIORITY_BOUNCE, match, actions))
    return RuleSet(f"bounce_{bounce_set}", tuple(rules), src.walk, flow_in, src.contexts)


def compile_loopback(position: int, controller: str, walk_rules: RuleSet) -> Rule:
    """Rule that hands a probe back to ``controller`` when it returns to ``position``.

    ``position`` indexes the ring that ``walk_rules`` was compiled for.
    """
    ctx = walk_rules.contexts[position]
    switch = walk_rules.walk.arcs[position].tail
    match = Match(in_port=ctx.in_arc, flow=walk_rules.flow, vlan=ctx.vlan, controller=controller)
    return Rule(switch, PRIORITY_LOOPBACK, match, (ToController(controller),))


@dataclass(frozen=True)
class Ring:
    """Compiled logical ring: both walk directions plus bounce-back rules."""

    walk: Walk
    cw: RuleSet
    ccw: RuleSet
    bounce_1: RuleSet
    bounce_2: Optional[RuleSet] = None

    @property
    def length(self) -> int:
        return len(self.walk.arcs)

    def static_sets(self) -> list:
        sets = [self.cw, self.ccw, self.bounce_1]
        if self.bounce_2 is not None:
            sets.append(self.bounce_2)
        return sets

    def static_rules(self) -> list:
        return [r for s in self.static_sets() for r in s.rules]

    def loopbacks(self, position: int, controller: str) -> RuleSet:
        """Both loopback rules for a controller injecting at cw ``position``."""
        rules = (compile_loopback(position, controller, self.cw),
                 compile_loopback(ccw_position(position, self.length), controller, self.ccw))
        return RuleSet("loopback", rules)


def compile_ring(walk: Walk, bidirectional: bool = True,
                 tag_budget: int = DEFAULT_TAG_BUDGET) -> Ring:
    cw = compile_walk(walk, FLOW_CW, "walk_cw", tag_budget)
    ccw = compile_walk(reverse_walk(walk), FLOW_CCW, "walk_ccw", tag_budget)
    b1 = compile_bounceback(cw, ccw, 1)
    b2 = compile_bounceback(cw, ccw, 2) if bidirectional else None
    return Ring(walk, cw, ccw, b1, b2)


# -- choosing a ring walk ----------------------------------------------------

def encoding_obstructions(walk: Walk) -> int:
    """Surplus rules forced by the walk's shape, counted over both directions.

    A switch where ``n > 1`` twice-traversed stretches begin, each entered
    over two different arcs, needs at least ``n - 1`` rules beyond one per
    arc.  Zero means the walk can be encoded exactly.
    """
    def count(arcs):
        L = len(arcs)
        first_seen: dict = {}
        split = defaultdict(int)
        for p, a in enumerate(arcs):
            prev = arcs[p - 1] if p else arcs[L - 1]
            if a in first_seen:
                if first_seen[a] != prev:
                    split[a.tail] += 1
            else:
                first_seen[a] = prev
        return sum(n - 1 for n in split.values() if n > 1)

    return count(walk.arcs) + count(reverse_walk(walk).arcs)


def _repair_walk(walk: Walk) -> Walk | None:
    """Reverse sub-cycles until the walk has no encoding obstruction.

    Each round applies the single reversal that leaves the fewest
    obstructions, preferring more duplicate arcs.  Returns None when a round
    makes no progress.
    """
    from .walks import _kappa, _reverse_span

    arcs = walk.arcs
    L = len(arcs)
    current = encoding_obstructions(walk)
    while current:
        best = None
        for a in range(L):
            for b in range(a + 1, L):
                if arcs[a].tail != arcs[b].tail:
                    continue
                cand = _reverse_span(arcs, a, b)
                key = (encoding_obstructions(Walk(cand, walk.start, walk.cover)), -_kappa(cand))
                if best is None or key < best[0]:
                    best = (key, cand)
        if best is None or best[0][0] >= current:
            return None
        arcs, current = best[1], best[0][0]
    return Walk(arcs, walk.start, walk.cover)


def _exact(walk: Walk, tag_budget: int) -> Ring | None:
    if encoding_obstructions(walk):
        return None
    ring = compile_ring(walk, True, tag_budget)
    if ring.cw.extra_rules or ring.ccw.extra_rules:
        return None
    return ring


def build_ring(t, mode: str = "symmetric", bidirectional: bool = True,
               tag_budget: int = DEFAULT_TAG_BUDGET, exact_matching: bool | None = None) -> Ring:
    """Synthesize and compile the diagnostic ring for a topology.

    Asymmetric mode uses a directed Euler cycle.  Symmetric mode starts from
    the improved postman tour rooted at switch 0; if that tour cannot be
    encoded with one rule per arc, tours rooted at the other switches (and
    repaired variants of them) are tried, keeping the first exact one whose
    duplicate count is at least as good, or else the best exact one found.
    Only if none exists is the original tour compiled with extra rules.
    """
    from .walks import euler_cycle_directed, improve_walk, solve_cpp

    def finish(ring):
        if bidirectional:
            return ring
        return Ring(ring.walk, ring.cw, ring.ccw, ring.bounce_1, None)

    if mode == "asymmetric":
        return compile_ring(euler_cycle_directed(t, 0), bidirectional, tag_budget)
    if mode != "symmetric":
        raise ValueError(f"unknown failure mode {mode!r}")
    primary = improve_walk(solve_cpp(t, 0, exact_matching), t)
    target = walk_metrics(primary).duplicates
    ring = _exact(primary, tag_budget)
    if ring is not None:
        return finish(ring)
    best = None
    for start in range(t.num_switches):
        base = primary if start == 0 else improve_walk(solve_cpp(t, start, exact_matching), t)
        for cand in (base, _repair_walk(base)):
            if cand is None or (start == 0 and cand is primary):
                continue
            ring = _exact(cand, tag_budget)
            if ring is None:
                continue
            kappa = walk_metrics(cand).duplicates
            if kappa >= target:
                logger.info("using tour rooted at switch %d for an exact encoding", start)
                return finish(ring)
            if best is None or kappa > best[0]:
                best = (kappa, ring)
    if best is not None:
        logger.info("exact encoding costs %d duplicate arc(s)", target - best[0])
        return finish(best[1])
    return compile_ring(primary, bidirectional, tag_budget)
