"""Core semantic objects shared by every protocol.

A protocol is a set of per-role finite automata over one shared `turn`
cell and one single-writer `flag` slot per process.  Control states are
named locations; transitions are guarded edges whose guards and effects
are small *data* terms (not closures), so that variable accesses can be
validated statically and the whole edge system can be flattened into the
exploration kernel's table form.

Value conventions (these also fix the canonical byte encoding):

* ``turn``: process ids ``0..n-1``, ``THINKING`` = 254, ``FREE`` = 255.
* ``flag[i]``: ``REMAINDER`` = 0, ``WAITING`` = 1, ``CANDIDATE`` = 2.
* integer locals may be negative (e.g. -1 loop sentinels); they are
  packed as two's-complement signed bytes.
* turn-valued locals (``nextTurn``) store the turn convention directly;
  their byte is the raw value (0xFE == THINKING).
"""

from __future__ import annotations

from dataclasses import dataclass, field

THINKING = 254
FREE = 255

REMAINDER = 0
WAITING = 1
CANDIDATE = 2

# Comparison operators usable in guard atoms.  Order comparisons are
# evaluated over the signed interpretation of a cell.
EQ, NE, LT, LE, GT, GE = "==", "!=", "<", "<=", ">", ">="

_OPS = {
    EQ: lambda a, b: a == b,
    NE: lambda a, b: a != b,
    LT: lambda a, b: a < b,
    LE: lambda a, b: a <= b,
    GT: lambda a, b: a > b,
    GE: lambda a, b: a >= b,
}


class ModelError(Exception):
    """Base error for semantic-level misuse."""


class EdgeNotEnabled(ModelError):
    """Raised when apply_edge is called on a disabled edge (internal contract)."""


def turn_to_str(v: int) -> str:
    if v == THINKING:
        return "T"
    if v == FREE:
        return "F"
    return str(v)


def turn_from_str(s: str) -> int:
    if s == "T":
        return THINKING
    if s == "F":
        return FREE
    return int(s)


_FLAG_CHARS = "RWC"


def flag_to_str(v: int) -> str:
    return _FLAG_CHARS[v]


def flag_from_str(s: str) -> int:
    return _FLAG_CHARS.index(s)


# ---------------------------------------------------------------------------
# Guard and effect terms


@dataclass(frozen=True)
class Read:
    """A readable operand of a guard atom.

    kind:
      * ``"turn"``      -- the shared turn cell
      * ``"flag"``      -- a fixed flag slot, index in ``arg``
      * ``"flag-via"``  -- flag slot indexed by the acting role's local ``arg``
      * ``"flag-circ"`` -- flag slot ``(self + local arg) mod n``
      * ``"local"``     -- the acting role's local named ``arg``
    """

    kind: str
    arg: int | str = 0


@dataclass(frozen=True)
class Atom:
    read: Read
    op: str
    value: int


# A guard is a disjunction of conjunctions of atoms (DNF); None means
# unconditionally enabled.  All guards that occur in the shipped
# protocols are either one conjunction or a disjunction of single atoms.
Guard = tuple[tuple[Atom, ...], ...]


def conj(*atoms: Atom) -> Guard:
    return (tuple(atoms),)


def disj(*atoms: Atom) -> Guard:
    return tuple((a,) for a in atoms)


@dataclass(frozen=True)
class Assign:
    """One assignment of an edge effect.

    target: ``"turn"``, ``"flag"`` (index in ``index``) or ``"local"``
    (name in ``index``).  expr forms:

      * ``("const", v)``
      * ``("local", name)``          -- copy a local of the acting role
      * ``("add", name, delta)``     -- local + delta (wraps mod 256)
      * ``("add-mod", name, delta)`` -- (local + delta) mod n
    """

    target: str
    index: int | str
    expr: tuple


@dataclass(frozen=True)
class Edge:
    """Atomic guarded transition of one role's automaton.

    ``exempt`` edges model voluntary moves (entering/leaving the
    remainder region); weak fairness never forces them.
    """

    id: str
    source: str
    target: str
    guard: Guard | None = None
    effect: tuple[Assign, ...] = ()
    exempt: bool = False

    @property
    def fairness(self) -> str:
        return "exempt" if self.exempt else "subject"


@dataclass(frozen=True)
class LocalSpec:
    """Declaration of one local variable of a role.

    ``kind`` is ``"int"`` (signed small integer) or ``"turn"``
    (turn-valued: pid or THINKING).  ``lo``/``hi`` bound the values the
    local may take in any reachable configuration; they keep the state
    space finite and are checked by tests over explored state sets.
    """

    name: str
    initial: int
    lo: int
    hi: int
    kind: str = "int"


@dataclass(frozen=True)
class Role:
    """One automaton instance: a process (pid 0..n-1) or the coordinator."""

    name: str
    pid: int | None  # None for the coordinator
    locations: tuple[str, ...]
    initial: str
    edges: tuple[Edge, ...]
    locals_layout: tuple[LocalSpec, ...] = ()
    trying: frozenset[str] = frozenset()
    quiescent: frozenset[str] = frozenset()
    _by_source: dict = field(default_factory=dict, compare=False, repr=False)
    _local_index: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        by_source: dict[str, list[Edge]] = {}
        for e in self.edges:
            by_source.setdefault(e.source, []).append(e)
        for lst in by_source.values():
            lst.sort(key=lambda e: e.id)
        object.__setattr__(self, "_by_source", by_source)
        object.__setattr__(
            self, "_local_index", {s.name: i for i, s in enumerate(self.locals_layout)}
        )

    def edges_from(self, loc: str) -> list[Edge]:
        return self._by_source.get(loc, [])

    def local_slot(self, name: str) -> int:
        return self._local_index[name]

    def location_index(self, loc: str) -> int:
        return self.locations.index(loc)


@dataclass(frozen=True)
class ProtocolDefinition:
    """A fully instantiated protocol for a fixed process count ``n``.

    ``permissions`` maps each shared variable name (``"turn"``,
    ``"flag[0]"``, ...) to ``(readers, writers)`` role-name sets.
    ``family`` is ``"asym"`` or ``"sym"`` and selects which properties
    are meaningful.  ``extended_cs``/``clear_range``/``grant_edges`` are
    only populated for the sym family.
    """

    name: str
    n: int
    roles: tuple[Role, ...]
    permissions: dict
    family: str
    initial_turn: int
    turn_values: frozenset[int]
    flag_values: frozenset[int]
    extended_cs: frozenset[str] = frozenset()
    clear_range: frozenset[str] = frozenset()
    grant_edges: frozenset[str] = frozenset()

    @property
    def nroles(self) -> int:
        return len(self.roles)

    @property
    def process_indices(self) -> range:
        return range(self.n)

    def role_index(self, name: str) -> int:
        for i, r in enumerate(self.roles):
            if r.name == name:
                return i
        raise KeyError(name)


# ---------------------------------------------------------------------------
# Configurations


@dataclass(frozen=True)
class Configuration:
    """One global state: every role's control location and locals, plus
    the shared turn cell and flag array.  Value semantics throughout."""

    turn: int
    flags: tuple[int, ...]
    pcs: tuple[str, ...]
    locals: tuple[tuple[int, ...], ...]

    def shared_str(self) -> str:
        return "turn=%s flags=%s" % (
            turn_to_str(self.turn),
            ",".join(flag_to_str(f) for f in self.flags),
        )


def initial_configuration(proto: ProtocolDefinition) -> Configuration:
    """Shared variables at their declared initial values, every role at
    its initial location, locals at their declared sentinels."""
    if proto.n < 1:
        raise ValueError("protocol must have at least one process")
    return Configuration(
        turn=proto.initial_turn,
        flags=tuple(REMAINDER for _ in range(proto.n)),
        pcs=tuple(r.initial for r in proto.roles),
        locals=tuple(tuple(s.initial for s in r.locals_layout) for r in proto.roles),
    )


def _read_value(proto: ProtocolDefinition, c: Configuration, role_idx: int, read: Read) -> int:
    role = proto.roles[role_idx]
    if read.kind == "turn":
        return c.turn
    if read.kind == "flag":
        return c.flags[read.arg]
    if read.kind == "flag-via":
        return c.flags[c.locals[role_idx][role.local_slot(read.arg)] % proto.n]
    if read.kind == "flag-circ":
        k = c.locals[role_idx][role.local_slot(read.arg)]
        return c.flags[(role.pid + k) % proto.n]
    if read.kind == "local":
        return c.locals[role_idx][role.local_slot(read.arg)]
    raise ModelError("unknown read kind %r" % read.kind)


def guard_holds(
    proto: ProtocolDefinition, c: Configuration, role_idx: int, guard: Guard | None
) -> bool:
    if guard is None:
        return True
    for clause in guard:
        ok = True
        for atom in clause:
            v = _read_value(proto, c, role_idx, atom.read)
            if not _OPS[atom.op](v, atom.value):
                ok = False
                break
        if ok:
            return True
    return False


def enabled_edges(
    proto: ProtocolDefinition, c: Configuration
) -> list[tuple[int, Edge]]:
    """All edges enabled in ``c``, ordered by role index then edge id.

    The order is fixed so that exploration and simulation are
    reproducible; properties must not depend on it.
    """
    out = []
    for r_idx, role in enumerate(proto.roles):
        for e in role.edges_from(c.pcs[r_idx]):
            if guard_holds(proto, c, r_idx, e.guard):
                out.append((r_idx, e))
    return out


def _eval_expr(
    proto: ProtocolDefinition, c: Configuration, role_idx: int, expr: tuple
) -> int:
    role = proto.roles[role_idx]
    op = expr[0]
    if op == "const":
        return expr[1]
    if op == "local":
        return c.locals[role_idx][role.local_slot(expr[1])]
    if op == "add":
        return c.locals[role_idx][role.local_slot(expr[1])] + expr[2]
    if op == "add-mod":
        return (c.locals[role_idx][role.local_slot(expr[1])] + expr[2]) % proto.n
    raise ModelError("unknown expr %r" % (expr,))


def apply_edge(
    proto: ProtocolDefinition, c: Configuration, role_idx: int, edge: Edge
) -> Configuration:
    """Fire one enabled edge; returns a new configuration, never mutates.

    Only the acting role's pc/locals and at most one shared variable
    change (the frame condition); firing a disabled edge raises
    :class:`EdgeNotEnabled`.
    """
    role = proto.roles[role_idx]
    if c.pcs[role_idx] != edge.source or not guard_holds(proto, c, role_idx, edge.guard):
        raise EdgeNotEnabled(
            "edge %s:%s is not enabled in %s" % (role.name, edge.id, c)
        )
    turn = c.turn
    flags = list(c.flags)
    locs = list(c.locals[role_idx])
    for a in edge.effect:
        v = _eval_expr(proto, c, role_idx, a.expr)
        if a.target == "turn":
            turn = v & 0xFF
        elif a.target == "flag":
            flags[a.index] = v
        elif a.target == "local":
            locs[role.local_slot(a.index)] = v
        else:
            raise ModelError("unknown assignment target %r" % a.target)
    pcs = list(c.pcs)
    pcs[role_idx] = edge.target
    new_locals = list(c.locals)
    new_locals[role_idx] = tuple(locs)
    return Configuration(
        turn=turn, flags=tuple(flags), pcs=tuple(pcs), locals=tuple(new_locals)
    )


# ---------------------------------------------------------------------------
# Canonical byte encoding
#
# Frozen layout (one byte per item):
#   [pc of role 0] ... [pc of role R-1]          -- location index, role order
#   [locals of role 0] ... [locals of role R-1]  -- declared field order;
#        int locals as signed bytes (two's complement), turn-valued
#        locals as their raw turn byte
#   [turn]                                        -- 0..n-1, 254=THINKING, 255=FREE
#   [flag 0] ... [flag n-1]                       -- 0=REMAINDER 1=WAITING 2=CANDIDATE


def encoded_size(proto: ProtocolDefinition) -> int:
    return (
        proto.nroles
        + sum(len(r.locals_layout) for r in proto.roles)
        + 1
        + proto.n
    )


def encode(proto: ProtocolDefinition, c: Configuration) -> bytes:
    """Canonical, injective, stable byte encoding of a configuration."""
    out = bytearray()
    for r_idx, role in enumerate(proto.roles):
        out.append(role.location_index(c.pcs[r_idx]))
    for r_idx, role in enumerate(proto.roles):
        for v in c.locals[r_idx]:
            out.append(v & 0xFF)
    out.append(c.turn)
    out.extend(c.flags)
    return bytes(out)


def decode(proto: ProtocolDefinition, data: bytes) -> Configuration:
    if len(data) != encoded_size(proto):
        raise ValueError(
            "expected %d bytes, got %d" % (encoded_size(proto), len(data))
        )
    pos = 0
    pcs = []
    for role in proto.roles:
        pcs.append(role.locations[data[pos]])
        pos += 1
    locs = []
    for role in proto.roles:
        vals = []
        for spec in role.locals_layout:
            b = data[pos]
            pos += 1
            if spec.kind == "turn":
                vals.append(b)
            else:
                vals.append(b - 256 if b >= 128 else b)
        locs.append(tuple(vals))
    turn = data[pos]
    pos += 1
    flags = tuple(data[pos : pos + proto.n])
    return Configuration(turn=turn, flags=flags, pcs=tuple(pcs), locals=tuple(locs))
