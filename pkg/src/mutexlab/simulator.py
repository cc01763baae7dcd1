"""Seeded random-scheduler executor with online safety monitors.

A fast plausibility harness for process counts where exhaustive search
is infeasible: one run picks a single enabled edge per step from a
deterministic seeded generator and checks the state exclusion
invariants after every step.  Runs are strictly sequential (the
interleaving model is the point); different seeds are independent.

The generator is the standard library's Mersenne-Twister
(``random.Random``) seeded with the recorded seed; identical inputs
produce byte-identical traces.
"""

from __future__ import annotations

import random
from array import array
from dataclasses import dataclass, field

from .model import (
    Configuration,
    ProtocolDefinition,
    apply_edge,
    enabled_edges,
    initial_configuration,
)
from .tables import _location_span
from .traces import Trace, trace_from_edges

POLICIES = ("uniform-enabled", "round-robin-poll")

DEFAULT_EXEMPT_WEIGHT = 0.5


@dataclass
class RunStats:
    protocol: str
    n: int
    seed: int
    policy: str
    steps: int  # steps actually executed
    cs_entries: list[int]
    max_bypass: list[int]
    violations: list[str]
    stop: str  # "steps" | "quiescent" | "deadlock" | "violation"
    final: Configuration = field(repr=False, default=None)


class _Monitors:
    """Per-step exclusion checks; cheap location-count invariants."""

    def __init__(self, proto: ProtocolDefinition):
        self.proto = proto
        self.checks = [("mutex", {"CS"})]
        if proto.family == "sym":
            self.checks.append(("ext-mutex", set(proto.extended_cs)))
            self.checks.append(("no-two-351", {"3.5.1"}))

    def violated(self, c: Configuration) -> str | None:
        for name, locs in self.checks:
            count = 0
            for r, role in enumerate(self.proto.roles):
                if role.pid is not None and c.pcs[r] in locs:
                    count += 1
                    if count > 1:
                        return name
        return None


def simulate(
    proto: ProtocolDefinition,
    steps: int,
    seed: int,
    policy: str = "uniform-enabled",
    exempt_weight: float = DEFAULT_EXEMPT_WEIGHT,
) -> tuple[RunStats, Trace | None]:
    """Execute up to ``steps`` scheduler steps; abort with a replayable
    trace on any monitor violation or deadlock.

    ``uniform-enabled`` draws among all enabled edges, exempt edges at
    ``exempt_weight`` relative weight so that processes stochastically
    enter and leave the trying region.  ``round-robin-poll`` cycles a
    role pointer and serves the first role with an enabled edge.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    if policy not in POLICIES:
        raise ValueError("unknown policy: %r" % policy)
    rng = random.Random(seed)
    c = initial_configuration(proto)
    monitors = _Monitors(proto)
    log_role = array("i")
    log_edge = array("i")

    cs_entries = [0] * proto.n
    bypass = [0] * proto.n
    max_bypass = [0] * proto.n
    trying_span = [
        _location_span(role, role.trying) if role.trying else None
        for role in proto.roles
    ]
    pointer = 0
    executed = 0
    stop = "steps"
    violation = None

    for _ in range(steps):
        enabled = enabled_edges(proto, c)
        if not enabled:
            all_quiescent = all(
                c.pcs[r] in role.quiescent for r, role in enumerate(proto.roles)
            )
            stop = "quiescent" if all_quiescent else "deadlock"
            break
        if policy == "uniform-enabled":
            weights = [exempt_weight if e.exempt else 1.0 for _, e in enabled]
            pick = rng.choices(range(len(enabled)), weights=weights, k=1)[0]
        else:
            by_role: dict[int, list[int]] = {}
            for i, (r, _) in enumerate(enabled):
                by_role.setdefault(r, []).append(i)
            for off in range(proto.nroles):
                r = (pointer + off) % proto.nroles
                if r in by_role:
                    cand = by_role[r]
                    w = [exempt_weight if enabled[i][1].exempt else 1.0 for i in cand]
                    pick = rng.choices(cand, weights=w, k=1)[0]
                    pointer = (r + 1) % proto.nroles
                    break
        role_idx, edge = enabled[pick]
        role = proto.roles[role_idx]
        # bypass windows: count others' CS entries while a process is trying
        if edge.target == "CS" and role.pid is not None:
            for q in range(proto.n):
                if q == role_idx:
                    continue
                span = trying_span[q]
                if span is not None:
                    lo, hi = span
                    qr = proto.roles[q]
                    if lo <= qr.location_index(c.pcs[q]) <= hi:
                        bypass[q] += 1
                        max_bypass[q] = max(max_bypass[q], bypass[q])
            cs_entries[role.pid] += 1
            bypass[role.pid] = 0
        c = apply_edge(proto, c, role_idx, edge)
        log_role.append(role_idx)
        log_edge.append(
            proto.roles[role_idx].edges_from(edge.source).index(edge)
        )
        executed += 1
        bad = monitors.violated(c)
        if bad is not None:
            violation = bad
            stop = "violation"
            break

    stats = RunStats(
        protocol=proto.name,
        n=proto.n,
        seed=seed,
        policy=policy,
        steps=executed,
        cs_entries=cs_entries,
        max_bypass=max_bypass,
        violations=[violation] if violation else [],
        stop=stop,
        final=c,
    )
    trace = None
    if stop in ("violation", "deadlock"):
        trace = _trace_from_log(proto, log_role, log_edge, seed)
    return stats, trace


def _trace_from_log(proto, log_role, log_edge, seed) -> Trace:
    path = []
    c = initial_configuration(proto)
    for r, ei in zip(log_role, log_edge):
        edge = proto.roles[r].edges_from(c.pcs[r])[ei]
        path.append((r, edge.id))
        c = apply_edge(proto, c, r, edge)
    return trace_from_edges(proto, path, seed=seed)
