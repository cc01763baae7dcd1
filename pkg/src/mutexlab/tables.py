"""Flattening of protocol definitions into the exploration kernel's table form.

A table is a set of integer arrays describing the state-vector layout
and every edge's guard (DNF over atoms), effect (assignment list) and
optional edge-triggered assertion (CNF over atoms).  The state vector
layout coincides with the canonical configuration encoding, so kernel
state rows are directly comparable with :func:`mutexlab.model.encode`
output; property observers append extra cells after the canonical ones.

Atom encoding (int32 rows ``kind, a, b, op, rhs``):

* kind 0: direct cell ``a``
* kind 1: indirect flag read, cell ``flag_base + (state[a] + b) mod n``
* op 0..5 = ``== != < <= > >=``; order comparisons interpret the cell
  as a signed byte, equality compares raw bytes.

Assignment encoding (int32 rows ``target, kind, a, b``):

* kind 0: constant ``a``
* kind 1: copy of cell ``a``
* kind 2: ``state[a] + b`` (wraps mod 256, i.e. two's complement)
* kind 3: ``(state[a] + b) mod n``
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import (
    EQ,
    GE,
    GT,
    LE,
    LT,
    NE,
    REMAINDER,
    Assign,
    Atom,
    Edge,
    ProtocolDefinition,
)

OP_CODES = {EQ: 0, NE: 1, LT: 2, LE: 3, GT: 4, GE: 5}

A_CONST, A_COPY, A_ADD, A_ADD_MOD = 0, 1, 2, 3


@dataclass
class Table:
    proto: ProtocolDefinition
    n: int
    nroles: int
    ncells: int
    base_cells: int  # canonical encoding prefix; observer cells follow
    pc_cells: np.ndarray
    turn_cell: int
    flag_base: int
    initial: np.ndarray
    # edges (possibly several table rows per protocol edge)
    e_role: np.ndarray
    e_from: np.ndarray
    e_to: np.ndarray
    e_exempt: np.ndarray
    e_guard_lo: np.ndarray
    e_guard_hi: np.ndarray
    e_assert_lo: np.ndarray
    e_assert_hi: np.ndarray
    e_assert_tag: np.ndarray
    e_assign_lo: np.ndarray
    e_assign_hi: np.ndarray
    cl_lo: np.ndarray
    cl_hi: np.ndarray
    atoms: np.ndarray
    assigns: np.ndarray
    edge_refs: list = field(default_factory=list)  # (role_idx, edge_id) per row
    assert_tags: list = field(default_factory=list)
    observer_cells: dict = field(default_factory=dict)

    @property
    def nedges(self) -> int:
        return len(self.e_role)

    def as_dict(self) -> dict:
        """Plain-array view consumed by the kernels."""
        return {
            "n": self.n,
            "nroles": self.nroles,
            "ncells": self.ncells,
            "pc_cells": self.pc_cells,
            "flag_base": self.flag_base,
            "initial": self.initial,
            "e_role": self.e_role,
            "e_from": self.e_from,
            "e_to": self.e_to,
            "e_exempt": self.e_exempt,
            "e_guard_lo": self.e_guard_lo,
            "e_guard_hi": self.e_guard_hi,
            "e_assert_lo": self.e_assert_lo,
            "e_assert_hi": self.e_assert_hi,
            "e_assert_tag": self.e_assert_tag,
            "e_assign_lo": self.e_assign_lo,
            "e_assign_hi": self.e_assign_hi,
            "cl_lo": self.cl_lo,
            "cl_hi": self.cl_hi,
            "atoms": self.atoms,
            "assigns": self.assigns,
        }


class _Builder:
    def __init__(self, proto: ProtocolDefinition, extra_cells=()):
        self.proto = proto
        self.n = proto.n
        self.nroles = proto.nroles
        self.pc_cells = list(range(self.nroles))
        self.locals_base = []
        pos = self.nroles
        for role in proto.roles:
            self.locals_base.append(pos)
            pos += len(role.locals_layout)
        self.turn_cell = pos
        self.flag_base = pos + 1
        self.base_cells = self.flag_base + proto.n
        self.observer_cells = {}
        self.extra_init = []
        for name, init in extra_cells:
            self.observer_cells[name] = self.base_cells + len(self.extra_init)
            self.extra_init.append(init)
        self.ncells = self.base_cells + len(self.extra_init)

        self.e_role, self.e_from, self.e_to, self.e_exempt = [], [], [], []
        self.e_guard_lo, self.e_guard_hi = [], []
        self.e_assert_lo, self.e_assert_hi, self.e_assert_tag = [], [], []
        self.e_assign_lo, self.e_assign_hi = [], []
        self.cl_lo, self.cl_hi = [], []
        self.atoms, self.assigns = [], []
        self.edge_refs = []
        self.assert_tags = []

    def local_cell(self, role_idx: int, name: str) -> int:
        return self.locals_base[role_idx] + self.proto.roles[role_idx].local_slot(name)

    def tag_index(self, tag: str) -> int:
        if tag not in self.assert_tags:
            self.assert_tags.append(tag)
        return self.assert_tags.index(tag)

    # -- atom translation ---------------------------------------------------

    def atom(self, role_idx: int, a: Atom) -> tuple:
        r = a.read
        op = OP_CODES[a.op]
        if r.kind == "turn":
            return (0, self.turn_cell, 0, op, a.value)
        if r.kind == "flag":
            return (0, self.flag_base + r.arg, 0, op, a.value)
        if r.kind == "flag-via":
            return (1, self.local_cell(role_idx, r.arg), 0, op, a.value)
        if r.kind == "flag-circ":
            pid = self.proto.roles[role_idx].pid
            return (1, self.local_cell(role_idx, r.arg), pid, op, a.value)
        if r.kind == "local":
            return (0, self.local_cell(role_idx, r.arg), 0, op, a.value)
        raise ValueError("unknown read kind %r" % r.kind)

    def cell_atom(self, cell: int, op: str, rhs: int) -> tuple:
        return (0, cell, 0, OP_CODES[op], rhs)

    def assign(self, role_idx: int, a: Assign) -> tuple:
        if a.target == "turn":
            target = self.turn_cell
        elif a.target == "flag":
            target = self.flag_base + a.index
        elif a.target == "local":
            target = self.local_cell(role_idx, a.index)
        else:
            raise ValueError("unknown assign target %r" % a.target)
        return (target,) + self.expr(role_idx, a.expr)

    def expr(self, role_idx: int, expr: tuple) -> tuple:
        op = expr[0]
        if op == "const":
            return (A_CONST, expr[1], 0)
        if op == "local":
            return (A_COPY, self.local_cell(role_idx, expr[1]), 0)
        if op == "add":
            return (A_ADD, self.local_cell(role_idx, expr[1]), expr[2])
        if op == "add-mod":
            return (A_ADD_MOD, self.local_cell(role_idx, expr[1]), expr[2])
        raise ValueError("unknown expr %r" % (expr,))

    # -- edge emission ------------------------------------------------------

    def _clauses(self, clause_list) -> tuple[int, int]:
        lo = len(self.cl_lo)
        for clause in clause_list:
            alo = len(self.atoms)
            self.atoms.extend(clause)
            self.cl_lo.append(alo)
            self.cl_hi.append(len(self.atoms))
        return lo, len(self.cl_lo)

    def add_edge(
        self,
        role_idx: int,
        edge: Edge,
        extra_conj=(),
        extra_assigns=(),
        assert_clauses=None,
        assert_tag=None,
    ) -> None:
        """Emit one table row for ``edge``.

        ``extra_conj`` (table atoms) is ANDed into every guard clause;
        observer splits call this several times with exclusive extras.
        ``assert_clauses`` is a CNF that must hold whenever the row
        fires, reported under ``assert_tag``.
        """
        guard = edge.guard
        base_clauses = (
            [[self.atom(role_idx, a) for a in clause] for clause in guard]
            if guard is not None
            else [[]]
        )
        clauses = [c + list(extra_conj) for c in base_clauses]
        glo, ghi = self._clauses(clauses)
        if assert_clauses:
            alo, ahi = self._clauses(assert_clauses)
            tag = self.tag_index(assert_tag)
        else:
            alo = ahi = len(self.cl_lo)
            tag = -1
        slo = len(self.assigns)
        for a in edge.effect:
            self.assigns.append(self.assign(role_idx, a))
        self.assigns.extend(extra_assigns)
        role = self.proto.roles[role_idx]
        self.e_role.append(role_idx)
        self.e_from.append(role.location_index(edge.source))
        self.e_to.append(role.location_index(edge.target))
        self.e_exempt.append(1 if edge.exempt else 0)
        self.e_guard_lo.append(glo)
        self.e_guard_hi.append(ghi)
        self.e_assert_lo.append(alo)
        self.e_assert_hi.append(ahi)
        self.e_assert_tag.append(tag)
        self.e_assign_lo.append(slo)
        self.e_assign_hi.append(len(self.assigns))
        self.edge_refs.append((role_idx, edge.id))

    def finish(self) -> Table:
        from .model import encode, initial_configuration

        init = bytearray(encode(self.proto, initial_configuration(self.proto)))
        init.extend(v & 0xFF for v in self.extra_init)
        i32 = lambda xs: np.asarray(xs, dtype=np.int32)
        atoms = np.asarray(self.atoms, dtype=np.int32).reshape(-1, 5)
        assigns = np.asarray(self.assigns, dtype=np.int32).reshape(-1, 4)
        return Table(
            proto=self.proto,
            n=self.n,
            nroles=self.nroles,
            ncells=self.ncells,
            base_cells=self.base_cells,
            pc_cells=i32(self.pc_cells),
            turn_cell=self.turn_cell,
            flag_base=self.flag_base,
            initial=np.frombuffer(bytes(init), dtype=np.uint8).copy(),
            e_role=i32(self.e_role),
            e_from=i32(self.e_from),
            e_to=i32(self.e_to),
            e_exempt=i32(self.e_exempt),
            e_guard_lo=i32(self.e_guard_lo),
            e_guard_hi=i32(self.e_guard_hi),
            e_assert_lo=i32(self.e_assert_lo),
            e_assert_hi=i32(self.e_assert_hi),
            e_assert_tag=i32(self.e_assert_tag),
            e_assign_lo=i32(self.e_assign_lo),
            e_assign_hi=i32(self.e_assign_hi),
            cl_lo=i32(self.cl_lo),
            cl_hi=i32(self.cl_hi),
            atoms=atoms,
            assigns=assigns,
            edge_refs=self.edge_refs,
            assert_tags=self.assert_tags,
            observer_cells=self.observer_cells,
        )


def _sorted_role_edges(proto: ProtocolDefinition):
    """Global deterministic edge order: role index, then edge id."""
    for role_idx, role in enumerate(proto.roles):
        for edge in sorted(role.edges, key=lambda e: e.id):
            yield role_idx, edge


def _location_span(role, names) -> tuple[int, int]:
    idx = sorted(role.location_index(loc) for loc in names)
    lo, hi = idx[0], idx[-1]
    if idx != list(range(lo, hi + 1)):
        raise ValueError("location set %r is not contiguous" % (sorted(names),))
    return lo, hi


FREE_CLEAR_TAG = "free-implies-clear"
TURN_STABLE_TAG = "turn-stable"

PENDING_NONE = 255


def compile_table(table_proto: ProtocolDefinition) -> Table:
    """Base table.  For sym-family protocols the FREE-writing exit edge
    carries the clear-range assertion (no other process between the
    turn gate and the CS entry wait, endpoints included)."""
    b = _Builder(table_proto)
    instrument = table_proto.family == "sym" and table_proto.clear_range
    for role_idx, edge in _sorted_role_edges(table_proto):
        assert_clauses = None
        tag = None
        if instrument and edge.id == "6.3->8/free":
            lo, hi = _location_span(table_proto.roles[role_idx], table_proto.clear_range)
            assert_clauses = [
                [b.cell_atom(b.pc_cells[q], LT, lo), b.cell_atom(b.pc_cells[q], GT, hi)]
                for q in range(table_proto.n)
                if q != role_idx
            ]
            tag = FREE_CLEAR_TAG
            if not assert_clauses:  # n == 1: nothing to assert
                assert_clauses = None
                tag = None
        b.add_edge(role_idx, edge, assert_clauses=assert_clauses, assert_tag=tag)
    if instrument:
        b.tag_index(FREE_CLEAR_TAG)  # tag exists even when n == 1
    return b.finish()


def compile_turn_stable_table(proto: ProtocolDefinition) -> Table:
    """Augment the protocol with a pending-grant observer cell.

    Whenever a grant edge writes a process id into the turn cell the
    observer records the grantee; any further write of the turn cell
    before the grantee's pc reaches CS trips the assertion.  Entry to
    the CS clears a matching pending grant.
    """
    if not proto.grant_edges:
        raise ValueError("protocol %s declares no grant edges" % proto.name)
    b = _Builder(proto, extra_cells=(("pending", PENDING_NONE),))
    p_cell = b.observer_cells["pending"]
    clean = [[b.cell_atom(p_cell, EQ, PENDING_NONE)]]
    for role_idx, edge in _sorted_role_edges(proto):
        writes_turn = any(a.target == "turn" for a in edge.effect)
        if edge.id in proto.grant_edges:
            grant = next(a for a in edge.effect if a.target == "turn")
            b.add_edge(
                role_idx,
                edge,
                extra_assigns=[(p_cell,) + b.expr(role_idx, grant.expr)],
                assert_clauses=clean,
                assert_tag=TURN_STABLE_TAG,
            )
        elif writes_turn:
            b.add_edge(role_idx, edge, assert_clauses=clean, assert_tag=TURN_STABLE_TAG)
        elif edge.target == "CS" and proto.roles[role_idx].pid is not None:
            pid = proto.roles[role_idx].pid
            b.add_edge(
                role_idx,
                edge,
                extra_conj=[b.cell_atom(p_cell, EQ, pid)],
                extra_assigns=[(p_cell, A_CONST, PENDING_NONE, 0)],
            )
            b.add_edge(role_idx, edge, extra_conj=[b.cell_atom(p_cell, NE, pid)])
        else:
            b.add_edge(role_idx, edge)
    return b.finish()


def compile_bypass_table(proto: ProtocolDefinition, watch: int) -> Table:
    """Augment the protocol with a bypass counter for process ``watch``:
    CS entries by other processes while ``watch`` is in its trying
    region, saturating at ``n + 1`` (i.e. "more than n")."""
    cap = proto.n + 1
    b = _Builder(proto, extra_cells=(("bypass", 0),))
    c_cell = b.observer_cells["bypass"]
    watch_role = proto.roles[watch]
    t_lo, t_hi = _location_span(watch_role, watch_role.trying)
    watch_pc = b.pc_cells[watch]
    for role_idx, edge in _sorted_role_edges(proto):
        role = proto.roles[role_idx]
        is_entry = edge.target == "CS" and role.pid is not None
        if not is_entry:
            b.add_edge(role_idx, edge)
        elif role_idx == watch:
            # Window ends: record happens via the explored states; reset.
            b.add_edge(role_idx, edge, extra_assigns=[(c_cell, A_CONST, 0, 0)])
        else:
            trying = [
                b.cell_atom(watch_pc, GE, t_lo),
                b.cell_atom(watch_pc, LE, t_hi),
            ]
            b.add_edge(
                role_idx, edge,
                extra_conj=trying + [b.cell_atom(c_cell, LT, cap)],
                extra_assigns=[(c_cell, A_ADD, c_cell, 1)],
            )
            b.add_edge(role_idx, edge, extra_conj=trying + [b.cell_atom(c_cell, GE, cap)])
            b.add_edge(role_idx, edge, extra_conj=[b.cell_atom(watch_pc, LT, t_lo)])
            b.add_edge(role_idx, edge, extra_conj=[b.cell_atom(watch_pc, GT, t_hi)])
    return b.finish()
