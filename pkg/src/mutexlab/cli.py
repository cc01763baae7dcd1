"""Command-line front end.

Commands: ``check`` (exhaustive exploration plus selected properties),
``simulate`` (seeded random runs), ``graph`` (DOT export of the
reachable graph), ``props`` (property catalog).

Exit codes: 0 = all requested properties pass / simulation clean,
1 = violation found (traces written), 2 = usage or configuration error,
3 = state cap exceeded (bounded verdict).

Machine output (``--format machine``) is line-oriented ``key=value``
records, versioned by the first line ``mutexlab-report v1``; one
``property=`` record per checked property carries the verdict and the
trace file path (``-`` when none was written).  ``--no-timing`` omits
the wall-time record so identical invocations are byte-identical.
"""

from __future__ import annotations

import argparse
import os
import sys

from . import explorer, kernel, simulator
from .explorer import PROPERTIES, PROPERTY_ORDER, properties_for
from .protocols import ALL_IDS, build_protocol

EXIT_PASS = 0
EXIT_VIOLATION = 1
EXIT_USAGE = 2
EXIT_BOUNDED = 3

REPORT_MAGIC = "mutexlab-report v1"


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mutexlab",
        description="explicit-state checker for shared-variable mutual "
        "exclusion protocols",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_n=True):
        p.add_argument("--protocol", required=True, choices=ALL_IDS)
        if needs_n:
            p.add_argument("--n", type=int, required=True, help="process count")
        p.add_argument(
            "--state-cap", type=int, default=explorer.DEFAULT_STATE_CAP,
            help="maximum number of stored configurations",
        )

    p_check = sub.add_parser("check", help="exhaustive exploration + properties")
    common(p_check)
    p_check.add_argument(
        "--properties", default="all",
        help="comma-separated property ids, or 'all' (default) for every "
        "property applicable to the protocol",
    )
    p_check.add_argument(
        "--trace-out", default=".", metavar="DIR",
        help="directory for counterexample trace files (default: .)",
    )
    p_check.add_argument("--bypass", action="store_true",
                         help="also compute the worst-case bypass bound")
    p_check.add_argument("--format", choices=("text", "machine"), default="text")
    p_check.add_argument("--no-timing", action="store_true")

    p_sim = sub.add_parser("simulate", help="seeded random-scheduler runs")
    common(p_sim)
    p_sim.add_argument("--steps", type=int, default=10000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--runs", type=int, default=1,
                       help="number of runs; seeds are seed..seed+runs-1")
    p_sim.add_argument("--policy", choices=simulator.POLICIES,
                       default="uniform-enabled")
    p_sim.add_argument("--exempt-weight", type=float,
                       default=simulator.DEFAULT_EXEMPT_WEIGHT)
    p_sim.add_argument("--trace-out", default=".", metavar="DIR")
    p_sim.add_argument("--format", choices=("text", "machine"), default="text")
    p_sim.add_argument("--no-timing", action="store_true")

    p_graph = sub.add_parser("graph", help="DOT export of the reachable graph")
    common(p_graph)
    p_graph.add_argument("--dot-out", default="-", metavar="PATH",
                         help="output file, '-' for stdout (default)")

    p_props = sub.add_parser("props", help="list the property catalog")
    p_props.add_argument("--protocol", choices=ALL_IDS, default=None)
    return parser


def _parse_properties(spec: str, proto) -> list[str]:
    if spec == "all":
        return properties_for(proto)
    props = [p.strip() for p in spec.split(",") if p.strip()]
    if not props:
        raise ValueError("empty property list")
    return props


def _trace_path(out_dir, proto, prop, seed=None) -> str:
    tag = "%s-n%d" % (proto.name, proto.n)
    if seed is not None:
        tag += "-seed%d" % seed
    return os.path.join(out_dir, "%s-%s.trace" % (tag, prop))


def _cmd_check(args) -> int:
    proto = build_protocol(args.protocol, args.n)
    props = _parse_properties(args.properties, proto)
    report = explorer.explore(
        proto, props, state_cap=args.state_cap, with_bypass=args.bypass
    )
    trace_paths = {}
    for prop, verdict in report.verdicts.items():
        if verdict.trace is not None:
            path = _trace_path(args.trace_out, proto, prop)
            verdict.trace.write(path)
            trace_paths[prop] = path

    failed = [p for p, v in report.verdicts.items() if v.status == explorer.FAIL]
    bounded = report.bounded or any(
        v.status == explorer.BOUNDED for v in report.verdicts.values()
    )
    code = (
        EXIT_VIOLATION if failed else EXIT_BOUNDED if bounded else EXIT_PASS
    )

    if args.format == "machine":
        lines = [
            REPORT_MAGIC,
            "command=check",
            "protocol=%s" % report.protocol,
            "n=%d" % report.n,
            "states=%d" % report.states,
            "transitions=%d" % report.transitions,
            "bounded=%d" % (1 if report.bounded else 0),
        ]
        if not args.no_timing:
            lines.append("time-ms=%d" % round(report.wall_time * 1000))
        for prop in PROPERTY_ORDER:
            if prop in report.verdicts:
                lines.append(
                    "property=%s verdict=%s trace=%s"
                    % (prop, report.verdicts[prop].status,
                       trace_paths.get(prop, "-"))
                )
        if report.max_bypass is not None:
            lines.append("max-bypass=%s" % ",".join(map(str, report.max_bypass)))
            lines.append("bypass-cap=%d" % report.bypass_cap)
        lines.append("exit=%d" % code)
        print("\n".join(lines))
    else:
        completeness = "bounded at cap" if report.bounded else "complete"
        print(
            "protocol %s n=%d: %d states, %d transitions (%s) [kernel %s%s]"
            % (report.protocol, report.n, report.states, report.transitions,
               completeness, kernel.KERNEL,
               "" if args.no_timing else ", %.2fs" % report.wall_time)
        )
        for prop in PROPERTY_ORDER:
            if prop not in report.verdicts:
                continue
            v = report.verdicts[prop]
            extra = ""
            if prop in trace_paths:
                extra = "  (trace: %s)" % trace_paths[prop]
            print("  %-20s %s%s" % (prop, v.status, extra))
        if report.max_bypass is not None:
            shown = [
                (">%d" % report.n) if v >= report.bypass_cap else str(v)
                for v in report.max_bypass
            ]
            print("max bypass per process: %s (cap %d)"
                  % (",".join(shown), report.bypass_cap))
        verdict_word = (
            "VIOLATIONS FOUND" if failed
            else "BOUNDED (state cap hit)" if bounded
            else "all properties pass"
        )
        print("RESULT: %s" % verdict_word)
    return code


def _cmd_simulate(args) -> int:
    proto = build_protocol(args.protocol, args.n)
    records = []
    any_violation = False
    for r in range(args.runs):
        seed = args.seed + r
        stats, trace = simulator.simulate(
            proto, args.steps, seed,
            policy=args.policy, exempt_weight=args.exempt_weight,
        )
        trace_path = "-"
        if trace is not None:
            what = stats.violations[0] if stats.violations else "deadlock"
            trace_path = _trace_path(args.trace_out, proto, what, seed=seed)
            trace.write(trace_path)
        if stats.violations or stats.stop == "deadlock":
            any_violation = True
        records.append((stats, trace_path))

    if args.format == "machine":
        lines = [
            REPORT_MAGIC,
            "command=simulate",
            "protocol=%s" % proto.name,
            "n=%d" % proto.n,
            "policy=%s" % args.policy,
            "requested-steps=%d" % args.steps,
        ]
        for stats, trace_path in records:
            lines.append(
                "run seed=%d steps=%d stop=%s cs=%s max-bypass=%s "
                "violations=%s trace=%s"
                % (stats.seed, stats.steps, stats.stop,
                   ",".join(map(str, stats.cs_entries)),
                   ",".join(map(str, stats.max_bypass)),
                   ",".join(stats.violations) if stats.violations else "-",
                   trace_path)
            )
        code = EXIT_VIOLATION if any_violation else EXIT_PASS
        lines.append("exit=%d" % code)
        print("\n".join(lines))
        return code
    for stats, trace_path in records:
        line = (
            "seed %d: %d steps, stop=%s, cs entries=%s, max bypass=%s"
            % (stats.seed, stats.steps, stats.stop,
               ",".join(map(str, stats.cs_entries)),
               ",".join(map(str, stats.max_bypass)))
        )
        if stats.violations:
            line += ", VIOLATION %s (trace: %s)" % (stats.violations[0], trace_path)
        elif stats.stop == "deadlock":
            line += ", DEADLOCK (trace: %s)" % trace_path
        print(line)
    code = EXIT_VIOLATION if any_violation else EXIT_PASS
    print("RESULT: %s" % ("violations found" if any_violation else "clean"))
    return code


def _cmd_graph(args) -> int:
    proto = build_protocol(args.protocol, args.n)
    graph = explorer.build_graph(proto, state_cap=args.state_cap, transitions=True)
    text = explorer.export_dot(graph)
    if args.dot_out == "-":
        sys.stdout.write(text)
    else:
        with open(args.dot_out, "w", encoding="ascii") as fh:
            fh.write(text)
    return EXIT_BOUNDED if graph.bounded else EXIT_PASS


def _cmd_props(args) -> int:
    family = None
    if args.protocol is not None:
        family = build_protocol(args.protocol, 1).family
    for prop in PROPERTY_ORDER:
        info = PROPERTIES[prop]
        if family is not None and family not in info.families:
            continue
        print("%-20s %-9s %-10s %s"
              % (info.id, info.kind, "/".join(info.families), info.description))
    return EXIT_PASS


def run(argv) -> int:
    """Parse and execute; returns the process exit code."""
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_USAGE
    try:
        if args.command == "check":
            return _cmd_check(args)
        if args.command == "simulate":
            return _cmd_simulate(args)
        if args.command == "graph":
            return _cmd_graph(args)
        if args.command == "props":
            return _cmd_props(args)
    except (ValueError, OSError) as e:
        print("error: %s" % e, file=sys.stderr)
        return EXIT_USAGE
    return EXIT_USAGE


def main() -> None:
    sys.exit(run(sys.argv[1:]))


if __name__ == "__main__":
    main()
