"""Exhaustive exploration and property checking.

BFS (through the selected kernel) discovers the full reachable
configuration graph; safety invariants are evaluated over the state
matrix, edge-triggered assertions inside the kernel, lockout freedom by
SCC analysis of the reachable graph under weak per-process fairness,
and turn stability by a pending-grant observer product.  Every failing
verdict carries a replayable minimal-depth trace (BFS discovery order
is nondecreasing in depth).
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import kernel
from .model import ProtocolDefinition, decode, flag_to_str, turn_to_str
from .tables import (
    FREE_CLEAR_TAG,
    TURN_STABLE_TAG,
    Table,
    compile_bypass_table,
    compile_table,
    compile_turn_stable_table,
    _location_span,
)
from .traces import Trace, trace_from_edges

DEFAULT_STATE_CAP = 10_000_000

PASS, FAIL, BOUNDED = "pass", "fail", "bounded"


@dataclass(frozen=True)
class PropertyInfo:
    id: str
    kind: str  # "state", "edge", "trace", "liveness"
    families: tuple[str, ...]
    description: str


PROPERTIES = {
    p.id: p
    for p in (
        PropertyInfo(
            "mutex", "state", ("asym", "sym"),
            "at most one process occupies the critical section",
        ),
        PropertyInfo(
            "ext-mutex", "state", ("sym",),
            "at most one process occupies the extended critical section "
            "(CS plus the exit/election states before 8)",
        ),
        PropertyInfo(
            "no-two-351", "state", ("sym",),
            "at most one process sits at the self-grant state 3.5.1",
        ),
        PropertyInfo(
            "free-implies-clear", "edge", ("sym",),
            "when an exiting process marks the turn FREE, no other process "
            "is between the turn gate (3) and the entry wait (4), inclusive",
        ),
        PropertyInfo(
            "turn-stable", "trace", ("sym",),
            "once the turn is granted to a process, nothing rewrites the "
            "turn before that process enters the critical section",
        ),
        PropertyInfo(
            "no-deadlock", "state", ("asym", "sym"),
            "every reachable configuration has an enabled fairness-subject "
            "edge, unless every role rests at a quiescent location",
        ),
        PropertyInfo(
            "lockout-freedom", "liveness", ("asym", "sym"),
            "under weak per-process fairness, a process that starts waiting "
            "eventually enters the critical section",
        ),
    )
}

# Order used by reports and by the per-family defaults.
PROPERTY_ORDER = (
    "mutex", "ext-mutex", "no-two-351", "free-implies-clear",
    "turn-stable", "no-deadlock", "lockout-freedom",
)


def properties_for(proto: ProtocolDefinition) -> list[str]:
    """All properties applicable to the protocol's family, in report order."""
    return [p for p in PROPERTY_ORDER if proto.family in PROPERTIES[p].families]


@dataclass
class Verdict:
    status: str  # pass | fail | bounded
    trace: Trace | None = None


@dataclass
class ExplorationReport:
    protocol: str
    n: int
    states: int
    transitions: int
    bounded: bool
    verdicts: dict[str, Verdict]
    max_bypass: list[int] | None = None
    bypass_cap: int | None = None
    wall_time: float = 0.0


@dataclass
class StateGraph:
    """Reachable configuration graph in BFS discovery order."""

    proto: ProtocolDefinition
    table: Table
    nstates: int
    nexpanded: int
    states: np.ndarray
    parent: np.ndarray
    parent_edge: np.ndarray
    subject_mask: np.ndarray
    t_src: np.ndarray | None
    t_edge: np.ndarray | None
    t_dst: np.ndarray | None
    ntrans: int
    violations: list
    bounded: bool
    elapsed: float


def build_graph(
    proto: ProtocolDefinition,
    state_cap: int = DEFAULT_STATE_CAP,
    transitions: bool = True,
) -> StateGraph:
    table = compile_table(proto)
    t0 = time.perf_counter()
    res = kernel.run_bfs(
        table.as_dict(), state_cap, want_transitions=transitions, want_masks=True
    )
    elapsed = time.perf_counter() - t0
    return StateGraph(
        proto=proto,
        table=table,
        nstates=res["nstates"],
        nexpanded=res["nexpanded"],
        states=res["states"],
        parent=res["parent"],
        parent_edge=res["parent_edge"],
        subject_mask=res["subject_mask"],
        t_src=res["t_src"],
        t_edge=res["t_edge"],
        t_dst=res["t_dst"],
        ntrans=res["ntrans"],
        violations=res["violations"],
        bounded=res["bounded"],
        elapsed=elapsed,
    )


def _parent_path(parents, parent_edge, edge_refs, idx) -> list:
    path = []
    while idx != 0:
        path.append(edge_refs[parent_edge[idx]])
        idx = parents[idx]
    path.reverse()
    return path


def path_to_state(graph: StateGraph, idx: int) -> list:
    """(role index, edge id) path from the initial state to ``idx``."""
    return _parent_path(graph.parent, graph.parent_edge, graph.table.edge_refs, idx)


def _state_trace(proto, table, res, idx, extra_edge=None) -> Trace:
    path = _parent_path(res["parent"], res["parent_edge"], table.edge_refs, idx)
    if extra_edge is not None:
        path.append(table.edge_refs[extra_edge])
    return trace_from_edges(proto, path)


def _graph_trace(graph: StateGraph, idx, extra_edge=None) -> Trace:
    path = path_to_state(graph, idx)
    if extra_edge is not None:
        path.append(graph.table.edge_refs[extra_edge])
    return trace_from_edges(graph.proto, path)


# ---------------------------------------------------------------------------
# Safety invariants over the state matrix


def _process_pc_columns(graph: StateGraph):
    for r, role in enumerate(graph.proto.roles):
        if role.pid is not None:
            yield r, role, graph.states[:, r]


def _first_true(mask: np.ndarray) -> int | None:
    hits = np.nonzero(mask)[0]
    return int(hits[0]) if hits.size else None


def _count_in_span(graph, names) -> np.ndarray:
    counts = np.zeros(graph.nstates, dtype=np.int16)
    for r, role, col in _process_pc_columns(graph):
        lo, hi = _location_span(role, names)
        counts += ((col >= lo) & (col <= hi)).astype(np.int16)
    return counts


def _check_mutex(graph: StateGraph) -> int | None:
    return _first_true(_count_in_span(graph, {"CS"}) >= 2)


def _check_ext_mutex(graph: StateGraph) -> int | None:
    return _first_true(_count_in_span(graph, graph.proto.extended_cs) >= 2)


def _check_no_two_351(graph: StateGraph) -> int | None:
    return _first_true(_count_in_span(graph, {"3.5.1"}) >= 2)


def _check_no_deadlock(graph: StateGraph) -> int | None:
    # Only expanded states have meaningful masks.
    nexp = graph.nexpanded
    stuck = graph.subject_mask[:nexp] == 0
    all_quiescent = np.ones(nexp, dtype=bool)
    for r, role in enumerate(graph.proto.roles):
        qidx = [role.location_index(loc) for loc in sorted(role.quiescent)]
        col = graph.states[:nexp, r]
        all_quiescent &= np.isin(col, qidx) if qidx else np.zeros(nexp, dtype=bool)
    return _first_true(stuck & ~all_quiescent)


_STATE_CHECKS = {
    "mutex": _check_mutex,
    "ext-mutex": _check_ext_mutex,
    "no-two-351": _check_no_two_351,
    "no-deadlock": _check_no_deadlock,
}


# ---------------------------------------------------------------------------
# Liveness: weak per-process fairness, SCC-based fair cycle search


@dataclass
class LivenessResult:
    status: str
    starved: list[int] = field(default_factory=list)
    trace: Trace | None = None


def _bfs_path(adj, start, goal):
    """Edge path start -> goal inside an adjacency dict {u: [(edge, v)]}."""
    if start == goal:
        return []
    seen = {start: None}
    frontier = [start]
    while frontier:
        nxt = []
        for u in frontier:
            for eidx, v in adj.get(u, ()):
                if v not in seen:
                    seen[v] = (u, eidx)
                    if v == goal:
                        path = []
                        node = v
                        while seen[node] is not None:
                            pu, pe = seen[node]
                            path.append((pe, node))
                            node = pu
                        path.reverse()
                        return path
                    nxt.append(v)
        frontier = nxt
    raise RuntimeError("no path inside SCC; graph is not strongly connected")


def _fair_cycle_trace(graph: StateGraph, members, internal, obligated) -> Trace:
    """Lasso visiting every state of the fair SCC and one edge of every
    obligated role, so the reported cycle discharges exactly the
    obligations computed for the SCC."""
    adj = {}
    roles_edge = {}
    for src, eidx, dst in internal:
        adj.setdefault(src, []).append((eidx, dst))
        r = graph.table.e_role[eidx]
        if r not in roles_edge:
            roles_edge[r] = (src, eidx, dst)
    for lst in adj.values():
        lst.sort()
    s0 = int(members[0])
    cycle = []
    cur = s0
    for target in list(members[1:]) + [s0]:
        seg = _bfs_path(adj, cur, int(target))
        cycle.extend(seg)
        cur = int(target)
    for r in obligated:
        src, eidx, dst = roles_edge[int(r)]
        seg = _bfs_path(adj, cur, src)
        cycle.extend(seg)
        cycle.append((eidx, dst))
        cur = dst
    cycle.extend(_bfs_path(adj, cur, s0))
    stem_path = path_to_state(graph, s0)
    cycle_path = [graph.table.edge_refs[e] for e, _ in cycle]
    return trace_from_edges(
        graph.proto, stem_path + cycle_path, cycle_start=len(stem_path)
    )


def _liveness_for_process(graph: StateGraph, p: int) -> tuple[bool, Trace | None]:
    role = graph.proto.roles[p]
    t_lo, t_hi = _location_span(role, role.trying)
    col = graph.states[:, p]
    trying = (col >= t_lo) & (col <= t_hi)

    # A trying state where no role has a subject edge enabled supports a
    # weakly fair execution in which nobody ever moves again.
    resting = _first_true(trying & (graph.subject_mask == 0))
    if resting is not None:
        stem = path_to_state(graph, resting)
        return False, trace_from_edges(graph.proto, stem, cycle_start=len(stem))

    keep = trying[graph.t_src] & trying[graph.t_dst]
    if not keep.any():
        return True, None
    src = graph.t_src[keep]
    dst = graph.t_dst[keep]
    eidx = graph.t_edge[keep]
    m = csr_matrix(
        (np.ones(len(src), dtype=np.int8), (src, dst)),
        shape=(graph.nstates, graph.nstates),
    )
    ncomp, labels = connected_components(m, directed=True, connection="strong")
    sizes = np.bincount(labels, minlength=ncomp)
    lab_src = labels[src]
    internal_sel = lab_src == labels[dst]
    nroles = graph.proto.nroles
    for comp in np.nonzero(sizes >= 2)[0]:
        members = np.nonzero(labels == comp)[0]
        always_enabled = int(np.bitwise_and.reduce(graph.subject_mask[members]))
        obligated = [r for r in range(nroles) if (always_enabled >> r) & 1]
        in_comp = internal_sel & (lab_src == comp)
        internal_roles = set(graph.table.e_role[eidx[in_comp]].tolist())
        if all(r in internal_roles for r in obligated):
            internal = sorted(
                zip(src[in_comp].tolist(), eidx[in_comp].tolist(), dst[in_comp].tolist())
            )
            trace = _fair_cycle_trace(graph, members.tolist(), internal, obligated)
            return False, trace
    return True, None


def check_liveness(
    graph: StateGraph | ProtocolDefinition, state_cap: int = DEFAULT_STATE_CAP
) -> LivenessResult:
    """Lockout freedom under weak per-process fairness.

    For each process, searches the reachable graph for a weakly fair
    cycle (or fair resting state) along which the process stays in its
    trying region without ever entering the CS.  Fairness obliges every
    role that has a subject edge enabled at every state of the cycle to
    take at least one step in it; exempt edges carry no obligation.
    """
    if isinstance(graph, ProtocolDefinition):
        graph = build_graph(graph, state_cap=state_cap, transitions=True)
    if graph.bounded:
        return LivenessResult(status=BOUNDED)
    if graph.t_src is None:
        raise ValueError("liveness needs a graph built with transitions")
    starved = []
    first_trace = None
    for p in range(graph.proto.n):
        ok, trace = _liveness_for_process(graph, p)
        if not ok:
            starved.append(p)
            if first_trace is None:
                first_trace = trace
    if starved:
        return LivenessResult(status=FAIL, starved=starved, trace=first_trace)
    return LivenessResult(status=PASS)


# ---------------------------------------------------------------------------
# Turn stability (pending-grant observer product)


def check_turn_stability(
    proto: ProtocolDefinition, state_cap: int = DEFAULT_STATE_CAP
) -> Verdict:
    """No write of the turn cell may land between a grant and the
    grantee's CS entry; checked over the observer-product graph."""
    table = compile_turn_stable_table(proto)
    res = kernel.run_bfs(
        table.as_dict(), state_cap, want_transitions=False, want_masks=False
    )
    for tag, src, edge in res["violations"]:
        if table.assert_tags[tag] == TURN_STABLE_TAG:
            return Verdict(FAIL, _state_trace(proto, table, res, src, edge))
    return Verdict(BOUNDED if res["bounded"] else PASS)


# ---------------------------------------------------------------------------
# Bypass bound


@dataclass
class BypassResult:
    values: list[int]  # per process; cap value means "more than n"
    cap: int
    bounded: bool

    @property
    def finite(self) -> bool:
        return not self.bounded and all(v < self.cap for v in self.values)


def max_bypass(
    proto: ProtocolDefinition, state_cap: int = DEFAULT_STATE_CAP
) -> BypassResult:
    """Worst-case overtaking per process: the maximum number of CS
    entries by others between a process's request and its own entry,
    over all interleavings (counter saturates at n + 1)."""
    values = []
    bounded = False
    for p in range(proto.n):
        table = compile_bypass_table(proto, p)
        res = kernel.run_bfs(
            table.as_dict(), state_cap, want_transitions=False, want_masks=False
        )
        bounded = bounded or res["bounded"]
        c_cell = table.observer_cells["bypass"]
        values.append(int(res["states"][:, c_cell].max()))
    return BypassResult(values=values, cap=proto.n + 1, bounded=bounded)


# ---------------------------------------------------------------------------
# Orchestration


def explore(
    proto: ProtocolDefinition,
    properties: list[str] | None = None,
    state_cap: int = DEFAULT_STATE_CAP,
    graph: StateGraph | None = None,
    with_bypass: bool = False,
) -> ExplorationReport:
    """Run the requested property checks exhaustively and report
    per-property verdicts with minimal-depth counterexample traces.

    ``properties`` defaults to every property applicable to the
    protocol's family.  A state-cap overrun downgrades undecided
    verdicts to ``bounded`` (never to ``pass``).
    """
    t0 = time.perf_counter()
    if properties is None:
        properties = properties_for(proto)
    applicable = set(properties_for(proto))
    for p in properties:
        if p not in PROPERTIES:
            raise ValueError("unknown property: %r" % p)
        if p not in applicable:
            raise ValueError(
                "property %r is not applicable to protocol %s" % (p, proto.name)
            )
    need_transitions = "lockout-freedom" in properties
    if graph is None:
        graph = build_graph(proto, state_cap=state_cap, transitions=need_transitions)

    verdicts: dict[str, Verdict] = {}
    for p in properties:
        if p in _STATE_CHECKS:
            bad = _STATE_CHECKS[p](graph)
            if bad is not None:
                verdicts[p] = Verdict(FAIL, _graph_trace(graph, bad))
            else:
                verdicts[p] = Verdict(BOUNDED if graph.bounded else PASS)
        elif p == "free-implies-clear":
            hit = None
            for tag, src, edge in graph.violations:
                if graph.table.assert_tags[tag] == FREE_CLEAR_TAG:
                    hit = (src, edge)
                    break
            if hit is not None:
                verdicts[p] = Verdict(FAIL, _graph_trace(graph, hit[0], hit[1]))
            else:
                verdicts[p] = Verdict(BOUNDED if graph.bounded else PASS)
        elif p == "turn-stable":
            verdicts[p] = check_turn_stability(proto, state_cap)
        elif p == "lockout-freedom":
            if graph.bounded:
                verdicts[p] = Verdict(BOUNDED)
            else:
                live = check_liveness(graph)
                verdicts[p] = Verdict(live.status, live.trace)

    report = ExplorationReport(
        protocol=proto.name,
        n=proto.n,
        states=graph.nstates,
        transitions=graph.ntrans,
        bounded=graph.bounded,
        verdicts={p: verdicts[p] for p in PROPERTY_ORDER if p in verdicts},
        wall_time=time.perf_counter() - t0,
    )
    if with_bypass:
        bp = max_bypass(proto, state_cap)
        report.max_bypass = bp.values
        report.bypass_cap = bp.cap
    return report


# ---------------------------------------------------------------------------
# DOT export


def export_dot(graph: StateGraph) -> str:
    """Reachable configuration graph in DOT syntax, nodes in BFS
    discovery order."""
    if graph.t_src is None:
        raise ValueError("DOT export needs a graph built with transitions")
    proto = graph.proto
    base = graph.table.base_cells
    lines = [
        'digraph "%s n=%d" {' % (proto.name, proto.n),
        "  node [shape=box];",
    ]
    for i in range(graph.nstates):
        c = decode(proto, graph.states[i, :base].tobytes())
        label = "turn=%s|flags=%s|pcs=%s" % (
            turn_to_str(c.turn),
            ",".join(flag_to_str(f) for f in c.flags),
            ",".join(c.pcs),
        )
        lines.append('  %d [label="%s"];' % (i, label))
    for t in range(graph.ntrans):
        role_idx, edge_id = graph.table.edge_refs[graph.t_edge[t]]
        lines.append(
            '  %d -> %d [label="%s:%s"];'
            % (graph.t_src[t], graph.t_dst[t], proto.roles[role_idx].name, edge_id)
        )
    lines.append("}")
    return "\n".join(lines) + "\n"
