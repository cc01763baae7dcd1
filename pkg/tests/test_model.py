"""Semantics-level tests: initial configurations, enabled edges, edge
application, the canonical encoding, and the reachable-set invariants
(guard exclusivity at decision locations, local variable bounds)."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mutexlab.model import (
    FREE,
    REMAINDER,
    THINKING,
    WAITING,
    Configuration,
    EdgeNotEnabled,
    apply_edge,
    decode,
    enabled_edges,
    encode,
    initial_configuration,
)
from mutexlab.protocols import build_asym, build_protocol, build_sym

# Recorded at first implementation and cross-checked by tests/oracles.py:
# pc bytes for p0..p2 and the coordinator, the coordinator's p local,
# the turn byte (0xfe = THINKING), then three REMAINDER flags.
GOLDEN_ASYM3_INITIAL = bytes.fromhex("0000000000fe000000")


def test_initial_asym_n2():
    p = build_asym(2)
    c = initial_configuration(p)
    assert c.turn == THINKING
    assert c.flags == (REMAINDER, REMAINDER)
    assert c.pcs == ("1", "1", "1")
    assert [r.name for r in p.roles] == ["p0", "p1", "coord"]


def test_initial_sym_n1():
    p = build_sym(1)
    c = initial_configuration(p)
    assert c.turn == FREE
    assert c.pcs == ("1",)


def test_initial_rejects_empty_system():
    with pytest.raises(ValueError):
        build_asym(0)
    with pytest.raises(ValueError):
        build_sym(0)


def test_enabled_initial_asym_n2():
    p = build_asym(2)
    en = enabled_edges(p, initial_configuration(p))
    assert [(p.roles[r].name, e.id) for r, e in en] == [
        ("p0", "1->2"),
        ("p1", "1->2"),
        ("coord", "1->2"),
    ]


def test_enabled_coordinator_skips_quiet_process():
    p = build_asym(2)
    c = initial_configuration(p)
    coord = p.nroles - 1
    c = apply_edge(p, c, coord, p.roles[coord].edges_from("1")[0])
    en = [(r, e.id) for r, e in enabled_edges(p, c) if r == coord]
    assert en == [(coord, "2->3")]  # flag[p] is REMAINDER, not WAITING


def test_enabled_sym_blocked_at_2():
    # With turn=THINKING the waiting process has no enabled edge at all:
    # busy waits are modeled as blocked transitions.
    p = build_sym(2)
    c = initial_configuration(p)
    c = apply_edge(p, c, 0, p.roles[0].edges_from("1")[0])  # p0: 1->2
    c = apply_edge(p, c, 0, p.roles[0].edges_from("2")[0])  # p0: 2->3 (turn=FREE)
    c = apply_edge(p, c, 0, p.roles[0].edges_from("3")[0])  # 3->3.1
    c = apply_edge(p, c, 0, p.roles[0].edges_from("3.1")[0])
    c = apply_edge(p, c, 0, next(e for e in p.roles[0].edges_from("3.2") if e.target == "3.3"))
    c = apply_edge(p, c, 0, p.roles[0].edges_from("3.3")[0])
    # fast-forward p0 through its solo election up to the CS
    while c.pcs[0] != "CS":
        moves = [(r, e) for r, e in enabled_edges(p, c) if r == 0]
        c = apply_edge(p, c, 0, moves[0][1])
    c = apply_edge(p, c, 0, p.roles[0].edges_from("CS")[0])  # turn <- THINKING
    assert c.turn == THINKING
    c = apply_edge(p, c, 1, p.roles[1].edges_from("1")[0])  # p1 requests
    assert [(r, e.id) for r, e in enabled_edges(p, c) if r == 1] == []


def test_apply_edge_examples():
    p = build_asym(2)
    c0 = initial_configuration(p)
    c1 = apply_edge(p, c0, 0, p.roles[0].edges_from("1")[0])
    assert c1.flags == (WAITING, REMAINDER)
    assert c1.pcs[0] == "2"
    assert c0.flags == (REMAINDER, REMAINDER)  # value semantics

    coord = p.nroles - 1
    # place the coordinator at 2.1 with p=1
    c = Configuration(turn=THINKING, flags=(REMAINDER, WAITING),
                      pcs=("1", "2", "2.1"), locals=((), (), (1,)))
    c2 = apply_edge(p, c, coord, p.roles[coord].edges_from("2.1")[0])
    assert c2.turn == 1
    assert c2.pcs[coord] == "2.2"


def test_apply_edge_frame_condition():
    p = build_sym(3)
    c = initial_configuration(p)
    c1 = apply_edge(p, c, 1, p.roles[1].edges_from("1")[0])
    assert c1.pcs[0] == c.pcs[0] and c1.pcs[2] == c.pcs[2]
    assert c1.locals[0] == c.locals[0] and c1.locals[2] == c.locals[2]
    assert c1.flags[0] == c.flags[0] and c1.flags[2] == c.flags[2]


def test_apply_disabled_edge_is_contract_violation():
    p = build_asym(1)
    c = initial_configuration(p)
    enter = p.roles[0].edges_from("2")[0]
    with pytest.raises(EdgeNotEnabled):
        apply_edge(p, c, 0, enter)


def test_enabled_edges_deterministic():
    p = build_sym(2)
    c = initial_configuration(p)
    first = [(r, e.id) for r, e in enabled_edges(p, c)]
    for _ in range(5):
        assert [(r, e.id) for r, e in enabled_edges(p, c)] == first


def test_encode_golden_asym3():
    p = build_asym(3)
    assert encode(p, initial_configuration(p)) == GOLDEN_ASYM3_INITIAL


def _random_walk(proto, choices):
    c = initial_configuration(proto)
    out = [c]
    for pick in choices:
        en = enabled_edges(proto, c)
        if not en:
            break
        r, e = en[pick % len(en)]
        c = apply_edge(proto, c, r, e)
        out.append(c)
    return out


@settings(max_examples=60, deadline=None)
@given(st.lists(st.integers(min_value=0, max_value=10 ** 6), max_size=60))
def test_encode_roundtrip_on_walks(choices):
    for proto in (build_asym(2), build_sym(2)):
        for c in _random_walk(proto, choices):
            data = encode(proto, c)
            assert decode(proto, data) == c


@settings(max_examples=40, deadline=None)
@given(
    st.lists(st.integers(min_value=0, max_value=10 ** 6), max_size=40),
    st.lists(st.integers(min_value=0, max_value=10 ** 6), max_size=40),
)
def test_encode_injective_on_walk_pairs(choices_a, choices_b):
    proto = build_sym(2)
    for a in _random_walk(proto, choices_a):
        for b in _random_walk(proto, choices_b):
            if a != b:
                assert encode(proto, a) != encode(proto, b)


# ---------------------------------------------------------------------------
# Reachable-set invariants

DECISION_LOCATIONS = {
    "asym": {"coord": ["2"]},
    "sym": {"process": ["3", "3.2", "3.5", "3.5.2", "6", "6.3"]},
}


@pytest.mark.parametrize("pid,n", [("asym", 2), ("asym", 3), ("sym", 2), ("sym", 3)])
def test_guard_exclusivity_at_decision_locations(graphs, protos, pid, n):
    """At every branching location the outgoing guards partition the
    reachable predicate space: exactly one edge is enabled."""
    proto = protos(pid, n)
    g = graphs(pid, n)
    role_of_edge = np.array([ref[0] for ref in g.table.edge_refs], dtype=np.int64)
    t_role = role_of_edge[g.t_edge]
    # outgoing transitions per (state, role)
    key = g.t_src.astype(np.int64) * proto.nroles + t_role
    counts = np.bincount(key, minlength=g.nstates * proto.nroles).reshape(
        g.nstates, proto.nroles
    )
    spots = DECISION_LOCATIONS[proto.family]
    for r, role in enumerate(proto.roles):
        names = spots.get("coord" if role.pid is None else "process", [])
        for loc in names:
            at = g.states[:, r] == role.location_index(loc)
            assert at.any()
            assert (counts[at, r] == 1).all(), (
                "role %s location %s is not a strict branch" % (role.name, loc)
            )


@pytest.mark.parametrize("pid,n", [("asym", 3), ("asym-sw", 3), ("sym", 2), ("sym", 3)])
def test_locals_stay_in_declared_bounds(graphs, protos, pid, n):
    proto = protos(pid, n)
    g = graphs(pid, n, False)
    cell = proto.nroles
    for role in proto.roles:
        for spec in role.locals_layout:
            col = g.states[:, cell].astype(np.int64)
            cell += 1
            if spec.kind == "turn":
                ok = ((col >= 0) & (col <= proto.n - 1)) | (col == THINKING)
            else:
                signed = np.where(col >= 128, col - 256, col)
                ok = (signed >= spec.lo) & (signed <= spec.hi)
            assert ok.all(), "local %s of %s out of bounds" % (spec.name, role.name)


def test_at_most_one_subject_edge_per_role(graphs, protos):
    """In every reachable configuration of the shipped protocols each
    role has at most one enabled subject edge (so per-process and
    per-edge weak fairness coincide)."""
    for pid, n in [("asym", 2), ("asym-sw", 2), ("sym", 2)]:
        proto = protos(pid, n)
        g = graphs(pid, n)
        role_of_edge = np.array([ref[0] for ref in g.table.edge_refs], dtype=np.int64)
        subject = g.table.e_exempt[g.t_edge] == 0
        key = (
            g.t_src[subject].astype(np.int64) * proto.nroles
            + role_of_edge[g.t_edge[subject]]
        )
        counts = np.bincount(key, minlength=g.nstates * proto.nroles)
        assert counts.max() <= 1
