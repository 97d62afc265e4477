"""Command-line entry point: ``ringprobe <subcommand> ...``.

Subcommands are ``ratio``, ``multifail``, ``bounds``, ``diagnose`` and
``rules``.  Reports go to stdout unless ``--out`` names a file.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys

from . import evaluation as ev
from .rules import build_ring, render_table
from .topology import load_topology
from .walks import walk_metrics

EXIT_SKIPPED_WITH_ERROR = 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--out", help="write the report to this file instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--tau-us", type=float, default=1.0, help="per-hop switching delay in microseconds")
    p.add_argument("--seed", type=int, default=0,
                   help="seed for sampled runs (the built-in studies are exhaustive)")
    p.add_argument("--verbose", "-v", action="store_true", help="log progress and probe traces")
    p.add_argument("--strict", action="store_true",
                   help="exit with status 2 if any corpus file could not be read")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ringprobe",
                                     description="Ring-walk failure localization toolkit.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ratio", help="static-rule cost relative to the |E|+|B| lower bound")
    p.add_argument("--corpus", required=True, help="directory of .graphml / .edgelist files")
    _common(p)

    p = sub.add_parser("multifail", help="exhaustive k-failure localization study")
    p.add_argument("--corpus", required=True)
    p.add_argument("--k", type=int, default=4, help="failures per pattern")
    p.add_argument("--max-edges", type=int, default=20)
    p.add_argument("--pattern-cap", type=int, default=ev.DEFAULT_PATTERN_CAP,
                   help="skip topologies with more failure patterns than this")
    _common(p)

    p = sub.add_parser("bounds", help="message counts and latency bounds")
    p.add_argument("--L", type=int, default=65536, dest="length", help="ring length")
    p.add_argument("--m", type=int, action="append",
                   help="parallel probes per round (repeatable; default: the reference table)")
    p.add_argument("--bidirectional", action="store_true")
    _common(p)

    p = sub.add_parser("diagnose", help="run one diagnosis on a topology file")
    p.add_argument("topology")
    p.add_argument("--fail", action="append", default=[],
                   help="failed link as A-B (switch labels) or an edge id; repeatable")
    p.add_argument("--domain", default=None,
                   help="comma-separated switch labels the controller owns (default: first switch)")
    p.add_argument("--strategy", choices=ev.STRATEGIES, default="sequential")
    p.add_argument("--m", type=int, default=1)
    p.add_argument("--position", type=int, default=None, help="injection ring position")
    p.add_argument("--asymmetric", action="store_true",
                   help="fail single directions (A-B means the arc A->B) on a directed ring")
    _common(p)

    p = sub.add_parser("rules", help="dump the compiled static rules for a topology")
    p.add_argument("topology")
    p.add_argument("--asymmetric", action="store_true")
    p.add_argument("--one-way", action="store_true", help="omit the second bounce-back set")
    p.add_argument("--table", action="store_true", help="human-readable table instead of JSON")
    _common(p)
    return parser


def _emit(text: str, out) -> None:
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_study(study: ev.Study, args) -> int:
    _emit(study.to_csv() if args.format == "csv" else study.to_json(), args.out)
    if args.strict and study.had_errors:
        return EXIT_SKIPPED_WITH_ERROR
    return 0


def _switch(t, token: str) -> int:
    token = token.strip()
    if token in t.labels:
        return t.labels.index(token)
    if token.isdigit() and int(token) < t.num_switches:
        return int(token)
    raise SystemExit(f"unknown switch {token!r}")


def _failures(t, specs, asymmetric: bool) -> list:
    out = []
    for spec in specs:
        if "-" in spec:
            a, b = spec.split("-", 1)
            a, b = _switch(t, a), _switch(t, b)
            if asymmetric:
                out.append((a, b))
            else:
                try:
                    out.append(t.find_edge(a, b))
                except KeyError as exc:
                    raise SystemExit(str(exc))
        elif spec.isdigit() and not asymmetric:
            out.append(int(spec))
        else:
            raise SystemExit(f"cannot read failure {spec!r}; use A-B")
    return out


def _diagnose(args) -> int:
    t = load_topology(args.topology)
    failed = _failures(t, args.fail, args.asymmetric)
    domain = [_switch(t, x) for x in args.domain.split(",")] if args.domain else [0]
    report = ev.run_diagnose(t, failed, domain, args.strategy, args.m, args.tau_us,
                             args.asymmetric, args.position)
    body = report.to_dict()
    body["located_labels"] = sorted(
        f"{t.label(x.tail)}->{t.label(x.head)}" if not isinstance(x, int) else t.edge_label(x)
        for x in report.located)
    if args.format == "csv":
        _emit("verdict,messages,total_hops,latency_us,strategy,located\n"
              f"{report.verdict},{report.messages},{report.total_hops},{report.latency},"
              f"{report.strategy},{' '.join(body['located_labels'])}\n", args.out)
    else:
        _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _rules(args) -> int:
    t = load_topology(args.topology)
    ring = build_ring(t, mode="asymmetric" if args.asymmetric else "symmetric",
                      bidirectional=not args.one_way)
    sets = ring.static_sets()
    if args.table:
        _emit(render_table(sets, t.labels) + "\n", args.out)
        return 0
    body = {"topology": t.name, "L": ring.length, "kappa": walk_metrics(ring.walk).duplicates,
            "static_rules": len(ring.static_rules()), "walk": ring.walk.to_dict(),
            "rule_sets": {rs.kind: rs.to_list() for rs in sets}}
    _emit(json.dumps(body, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "ratio":
        return _emit_study(ev.run_ratio(ev.ExperimentConfig(args.corpus, "ratio", tau_us=args.tau_us,
                                                            seed=args.seed)), args)
    if args.command == "multifail":
        cfg = ev.ExperimentConfig(args.corpus, "multifail", failures_k=args.k, max_edges=args.max_edges,
                                  seed=args.seed, tau_us=args.tau_us, pattern_cap=args.pattern_cap)
        return _emit_study(ev.run_multifail(cfg), args)
    if args.command == "bounds":
        ms = tuple(args.m) if args.m else ev.REFERENCE_TABLE_M
        ms = tuple(m for m in ms if m <= args.length - 1) or (1,)
        return _emit_study(ev.run_bounds(args.length, args.tau_us, ms, args.bidirectional), args)
    if args.command == "diagnose":
        return _diagnose(args)
    return _rules(args)


if __name__ == "__main__":
    sys.exit(main())
