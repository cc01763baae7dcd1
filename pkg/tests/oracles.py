"""Independent oracles used to cross-check the explorer.

These deliberately avoid the table compiler and kernels: they walk the
reference semantics (enabled_edges / apply_edge / encode) with a DFS,
so agreement with the BFS kernels is meaningful evidence.
"""

from __future__ import annotations

from mutexlab.model import (
    Edge,
    ProtocolDefinition,
    Role,
    apply_edge,
    enabled_edges,
    encode,
    initial_configuration,
)
from mutexlab.protocols import build_asym


def reachable_dfs(proto: ProtocolDefinition) -> tuple[set[bytes], int]:
    """All reachable canonical encodings plus the transition count."""
    init = initial_configuration(proto)
    seen = {encode(proto, init)}
    stack = [init]
    ntrans = 0
    while stack:
        c = stack.pop()
        for r, e in enabled_edges(proto, c):
            ntrans += 1
            s = apply_edge(proto, c, r, e)
            b = encode(proto, s)
            if b not in seen:
                seen.add(b)
                stack.append(s)
    return seen, ntrans


def bypass_max_dfs(proto: ProtocolDefinition) -> list[int]:
    """Brute-force bypass maximum per process over the joint observer
    product: every process carries its own saturating counter."""
    cap = proto.n + 1
    init = (initial_configuration(proto), (0,) * proto.n)
    seen = {(encode(proto, init[0]), init[1])}
    stack = [init]
    best = [0] * proto.n
    while stack:
        c, counters = stack.pop()
        for r, e in enabled_edges(proto, c):
            role = proto.roles[r]
            nc = list(counters)
            if e.target == "CS" and role.pid is not None:
                for q in range(proto.n):
                    if q != r and c.pcs[q] in proto.roles[q].trying:
                        nc[q] = min(nc[q] + 1, cap)
                nc[r] = 0
            s = apply_edge(proto, c, r, e)
            key = (encode(proto, s), tuple(nc))
            if key not in seen:
                seen.add(key)
                stack.append((s, tuple(nc)))
                for q in range(proto.n):
                    best[q] = max(best[q], nc[q])
    return best


def verify_fair_lasso(proto: ProtocolDefinition, trace, starved: int) -> None:
    """Check a lockout-freedom counterexample by replay: the starved
    process stays trying and outside the CS across the whole cycle, and
    every role with a subject edge enabled at every cycle state takes a
    step in the cycle.  An empty cycle must end in a state with no
    subject edge enabled at all."""
    assert trace.cycle_start is not None
    c = initial_configuration(proto)
    entry = None
    states = []
    actors = []
    if trace.cycle_start == 0:
        entry = c
    for i, step in enumerate(trace.steps):
        r = proto.role_index(step.role)
        edge = next(e for e in proto.roles[r].edges if e.id == step.edge_id)
        c = apply_edge(proto, c, r, edge)
        if i + 1 == trace.cycle_start:
            entry = c
        if i >= trace.cycle_start:
            states.append(c)
            actors.append(r)
    if not states:  # stutter witness: replay ends at the resting state
        states = [c]
    else:
        states.append(entry)  # the cycle also dwells at its entry state
    trying = proto.roles[starved].trying
    for s in states:
        assert s.pcs[starved] in trying, "starved process left the trying region"
        assert s.pcs[starved] != "CS"
    if actors:
        assert entry == c, "cycle does not return to its entry state"
    always_enabled = set(range(proto.nroles))
    for s in states:
        enabled_subject = {r for r, e in enabled_edges(proto, s) if not e.exempt}
        always_enabled &= enabled_subject
    if not actors:
        assert not always_enabled, "resting state still has an obliged role"
    else:
        for r in always_enabled:
            assert r in actors, "role %d is obliged but never moves" % r


def broken_coordinator(n: int) -> ProtocolDefinition:
    """asym with the coordinator's loop-back edge removed: the
    coordinator wedges after one scan step, so waiting processes starve.
    Negative control for the liveness checker."""
    base = build_asym(n)
    roles = []
    for r in base.roles:
        if r.pid is None:
            roles.append(
                Role(
                    name=r.name, pid=None, locations=r.locations, initial=r.initial,
                    edges=tuple(e for e in r.edges if e.id != "3->2"),
                    locals_layout=r.locals_layout,
                    trying=r.trying, quiescent=r.quiescent,
                )
            )
        else:
            roles.append(r)
    return ProtocolDefinition(
        name="asym-broken-coord",
        n=n,
        roles=tuple(roles),
        permissions=base.permissions,
        family="asym",
        initial_turn=base.initial_turn,
        turn_values=base.turn_values,
        flag_values=base.flag_values,
    )
