"""Construction of the shipped protocols and their known-bad mutants.

Protocols are code-defined; there is no external protocol file format.
Each builder instantiates per-role automata for a concrete process
count ``n``, baking the acting process id into guards and effects, and
declares the shared-variable access permissions that
:func:`validate_access_discipline` checks statically.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    CANDIDATE,
    EQ,
    FREE,
    GE,
    GT,
    LE,
    LT,
    NE,
    REMAINDER,
    THINKING,
    WAITING,
    Assign,
    Atom,
    Edge,
    LocalSpec,
    ProtocolDefinition,
    Read,
    Role,
    conj,
    disj,
)

PROTOCOL_IDS = ("asym", "asym-sw", "sym")
MUTANT_IDS = ("asym-sw-noexitwait", "sym-nocandidate")
ALL_IDS = PROTOCOL_IDS + MUTANT_IDS

COORD = "coord"


def _turn(op, v):
    return Atom(Read("turn"), op, v)


def _flag(i, op, v):
    return Atom(Read("flag", i), op, v)


def _flag_via(local, op, v):
    return Atom(Read("flag-via", local), op, v)


def _flag_circ(local, op, v):
    return Atom(Read("flag-circ", local), op, v)


def _local(name, op, v):
    return Atom(Read("local", name), op, v)


def _set_turn(expr):
    return Assign("turn", "", expr)


def _set_flag(i, v):
    return Assign("flag", i, ("const", v))


def _set_local(name, expr):
    return Assign("local", name, expr)


def _check_n(n: int) -> None:
    if n < 1:
        raise ValueError("process count must be >= 1, got %d" % n)


# ---------------------------------------------------------------------------
# Coordinator-based protocol


def _asym_process(i: int) -> Role:
    edges = (
        Edge("1->2", "1", "2", effect=(_set_flag(i, WAITING),), exempt=True),
        Edge("2->CS", "2", "CS", guard=conj(_turn(EQ, i))),
        Edge("CS->3", "CS", "3", effect=(_set_flag(i, REMAINDER),)),
        Edge("3->4", "3", "4", effect=(_set_turn(("const", THINKING)),)),
        Edge("4->1", "4", "1", exempt=True),
    )
    return Role(
        name="p%d" % i,
        pid=i,
        locations=("1", "2", "CS", "3", "4"),
        initial="1",
        edges=edges,
        trying=frozenset({"2"}),
        quiescent=frozenset({"1", "4"}),
    )


def _asym_coordinator(n: int, single_writer: bool) -> Role:
    if single_writer:
        locations = ("1", "2", "2.1", "2.2", "2.3", "3")
        wait_edges = (
            Edge("2.2->2.3", "2.2", "2.3", guard=conj(_flag_via("p", EQ, REMAINDER))),
            Edge("2.3->3", "2.3", "3", effect=(_set_turn(("const", THINKING)),)),
        )
    else:
        locations = ("1", "2", "2.1", "2.2", "3")
        wait_edges = (
            Edge("2.2->3", "2.2", "3", guard=conj(_turn(EQ, THINKING))),
        )
    edges = (
        Edge("1->2", "1", "2", effect=(_set_local("p", ("const", 0)),)),
        Edge("2->2.1", "2", "2.1", guard=conj(_flag_via("p", EQ, WAITING))),
        Edge("2->3", "2", "3", guard=conj(_flag_via("p", NE, WAITING))),
        Edge("2.1->2.2", "2.1", "2.2", effect=(_set_turn(("local", "p")),)),
        Edge("3->2", "3", "2", effect=(_set_local("p", ("add-mod", "p", 1)),)),
    ) + wait_edges
    return Role(
        name=COORD,
        pid=None,
        locations=locations,
        initial="1",
        edges=edges,
        locals_layout=(LocalSpec("p", 0, 0, n - 1),),
    )


def _asym_permissions(n: int, single_writer: bool) -> dict:
    everyone = frozenset(["p%d" % i for i in range(n)] + [COORD])
    turn_writers = frozenset({COORD}) if single_writer else everyone
    perms = {"turn": (everyone, turn_writers)}
    for i in range(n):
        perms["flag[%d]" % i] = (everyone, frozenset({"p%d" % i}))
    return perms


def build_asym(n: int) -> ProtocolDefinition:
    """Coordinator grants turns round-robin; turn writable by all."""
    _check_n(n)
    proto = ProtocolDefinition(
        name="asym",
        n=n,
        roles=tuple(_asym_process(i) for i in range(n)) + (_asym_coordinator(n, False),),
        permissions=_asym_permissions(n, False),
        family="asym",
        initial_turn=THINKING,
        turn_values=frozenset(range(n)) | {THINKING},
        flag_values=frozenset({REMAINDER, WAITING}),
    )
    _validate_structure(proto)
    return proto


def build_asym_sw(n: int) -> ProtocolDefinition:
    """Single-writer variant: turn writable only by the coordinator.

    The exiting process waits until the coordinator moves the turn away
    from it; the coordinator waits for the flag to drop back to
    REMAINDER before resetting the turn.
    """
    _check_n(n)
    roles = []
    for i in range(n):
        base = _asym_process(i)
        edges = tuple(
            Edge("3->4", "3", "4", guard=conj(_turn(NE, i))) if e.id == "3->4" else e
            for e in base.edges
        )
        roles.append(
            Role(
                name=base.name,
                pid=i,
                locations=base.locations,
                initial=base.initial,
                edges=edges,
                trying=base.trying,
                quiescent=base.quiescent,
            )
        )
    roles.append(_asym_coordinator(n, True))
    proto = ProtocolDefinition(
        name="asym-sw",
        n=n,
        roles=tuple(roles),
        permissions=_asym_permissions(n, True),
        family="asym",
        initial_turn=THINKING,
        turn_values=frozenset(range(n)) | {THINKING},
        flag_values=frozenset({REMAINDER, WAITING}),
    )
    _validate_structure(proto)
    return proto


# ---------------------------------------------------------------------------
# Symmetric protocol

SYM_LOCATIONS = (
    "1", "2", "3", "3.1", "3.2", "3.3", "3.4", "3.4.1", "3.4.2",
    "3.5", "3.5.1", "3.5.2", "3.6", "3.7", "4", "CS",
    "5", "5.1", "6", "6.1", "6.2", "6.3", "8",
)

SYM_EXTENDED_CS = frozenset({"CS", "5", "5.1", "6", "6.1", "6.2", "6.3"})

# Locations 3 through 4, both endpoints included: the region a process
# occupies between passing the turn!=THINKING gate and entering the CS,
# excluding the initial wait at 2.
SYM_CLEAR_RANGE = frozenset(
    {"3", "3.1", "3.2", "3.3", "3.4", "3.4.1", "3.4.2",
     "3.5", "3.5.1", "3.5.2", "3.6", "3.7", "4"}
)

SYM_TRYING = frozenset({"2"}) | SYM_CLEAR_RANGE


def _sym_process(i: int, n: int) -> Role:
    edges = (
        Edge("1->2", "1", "2", effect=(_set_flag(i, WAITING),), exempt=True),
        Edge("2->3", "2", "3", guard=conj(_turn(NE, THINKING))),
        Edge("3->3.1", "3", "3.1", guard=conj(_turn(EQ, FREE))),
        Edge("3->4", "3", "4", guard=conj(_turn(NE, FREE))),
        Edge("3.1->3.2", "3.1", "3.2", effect=(_set_flag(i, CANDIDATE),)),
        Edge("3.2->3.3", "3.2", "3.3",
             guard=conj(_turn(EQ, FREE), _flag(i, EQ, CANDIDATE))),
        Edge("3.2->3.7", "3.2", "3.7",
             guard=disj(_turn(NE, FREE), _flag(i, NE, CANDIDATE))),
        Edge("3.3->3.4", "3.3", "3.4",
             effect=(_set_local("nCandidates", ("const", 0)),
                     _set_local("minCandidate", ("const", -1)),
                     _set_local("j", ("const", n - 1)))),
        Edge("3.4->3.4.1", "3.4", "3.4.1",
             guard=conj(_local("j", GE, 0), _flag_via("j", EQ, CANDIDATE))),
        Edge("3.4->3.4.2", "3.4", "3.4.2",
             guard=conj(_local("j", GE, 0), _flag_via("j", NE, CANDIDATE))),
        Edge("3.4->3.5", "3.4", "3.5", guard=conj(_local("j", LT, 0))),
        Edge("3.4.1->3.4.2", "3.4.1", "3.4.2",
             effect=(_set_local("nCandidates", ("add", "nCandidates", 1)),
                     _set_local("minCandidate", ("local", "j")))),
        Edge("3.4.2->3.4", "3.4.2", "3.4",
             effect=(_set_local("j", ("add", "j", -1)),)),
        # Guards read the pre-state, so a local may be reset to its
        # sentinel on the very edge that reads it for the last time.
        # The resets keep dead private locals from distinguishing
        # otherwise identical configurations; no guard ever reads a
        # local between its reset and its next initialization.
        Edge("3.5->3.5.1", "3.5", "3.5.1",
             guard=conj(_turn(EQ, FREE), _local("nCandidates", EQ, 1)),
             effect=(_set_local("nCandidates", ("const", 0)),)),
        Edge("3.5->3.5.2", "3.5", "3.5.2",
             guard=disj(_turn(NE, FREE), _local("nCandidates", NE, 1)),
             effect=(_set_local("nCandidates", ("const", 0)),)),
        Edge("3.5.1->3.5.2", "3.5.1", "3.5.2", effect=(_set_turn(("const", i)),)),
        Edge("3.5.2->3.6", "3.5.2", "3.6",
             guard=disj(_turn(NE, FREE), _local("minCandidate", LT, i)),
             effect=(_set_local("minCandidate", ("const", -1)),)),
        Edge("3.5.2->3.2", "3.5.2", "3.2",
             guard=conj(_turn(EQ, FREE), _local("minCandidate", GE, i)),
             effect=(_set_local("minCandidate", ("const", -1)),)),
        Edge("3.6->3.2", "3.6", "3.2", effect=(_set_flag(i, WAITING),)),
        Edge("3.7->4", "3.7", "4", effect=(_set_flag(i, WAITING),)),
        Edge("4->CS", "4", "CS", guard=conj(_turn(EQ, i))),
        Edge("CS->5", "CS", "5", effect=(_set_turn(("const", THINKING)),)),
        Edge("5->5.1", "5", "5.1", effect=(_set_flag(i, REMAINDER),)),
        Edge("5.1->6", "5.1", "6",
             effect=(_set_local("nextTurn", ("const", THINKING)),
                     _set_local("k", ("const", 1)))),
        Edge("6->6.1", "6", "6.1",
             guard=conj(_local("nextTurn", EQ, THINKING), _local("k", LE, n - 1),
                        _flag_circ("k", NE, REMAINDER))),
        Edge("6->6.2", "6", "6.2",
             guard=conj(_local("nextTurn", EQ, THINKING), _local("k", LE, n - 1),
                        _flag_circ("k", EQ, REMAINDER))),
        Edge("6->6.3", "6", "6.3",
             guard=disj(_local("nextTurn", NE, THINKING), _local("k", GT, n - 1)),
             effect=(_set_local("k", ("const", 1)),)),
        Edge("6.1->6.2", "6.1", "6.2",
             effect=(_set_local("nextTurn", ("add-mod", "k", i)),)),
        Edge("6.2->6", "6.2", "6", effect=(_set_local("k", ("add", "k", 1)),)),
        Edge("6.3->8/free", "6.3", "8",
             guard=conj(_local("nextTurn", EQ, THINKING)),
             effect=(_set_turn(("const", FREE)),)),
        Edge("6.3->8/grant", "6.3", "8",
             guard=conj(_local("nextTurn", NE, THINKING)),
             effect=(_set_turn(("local", "nextTurn")),
                     _set_local("nextTurn", ("const", THINKING)))),
        Edge("8->1", "8", "1", exempt=True),
    )
    return Role(
        name="p%d" % i,
        pid=i,
        locations=SYM_LOCATIONS,
        initial="1",
        edges=edges,
        locals_layout=(
            LocalSpec("nCandidates", 0, 0, n),
            LocalSpec("minCandidate", -1, -1, n - 1),
            LocalSpec("j", -1, -1, n - 1),
            LocalSpec("k", 1, 1, n),
            LocalSpec("nextTurn", THINKING, 0, n - 1, kind="turn"),
        ),
        trying=SYM_TRYING,
        quiescent=frozenset({"1", "8"}),
    )


def _sym_permissions(n: int) -> dict:
    everyone = frozenset("p%d" % i for i in range(n))
    perms = {"turn": (everyone, everyone)}
    for i in range(n):
        perms["flag[%d]" % i] = (everyone, frozenset({"p%d" % i}))
    return perms


def build_sym(n: int) -> ProtocolDefinition:
    """Coordinator-free protocol: the exiting process elects the next
    entrant circularly, or marks the turn FREE so that future waiters
    elect the minimum candidate among themselves."""
    _check_n(n)
    proto = ProtocolDefinition(
        name="sym",
        n=n,
        roles=tuple(_sym_process(i, n) for i in range(n)),
        permissions=_sym_permissions(n),
        family="sym",
        initial_turn=FREE,
        turn_values=frozenset(range(n)) | {THINKING, FREE},
        flag_values=frozenset({REMAINDER, WAITING, CANDIDATE}),
        extended_cs=SYM_EXTENDED_CS,
        clear_range=SYM_CLEAR_RANGE,
        grant_edges=frozenset({"3.5.1->3.5.2", "6.3->8/grant"}),
    )
    _validate_structure(proto)
    return proto


# ---------------------------------------------------------------------------
# Known-bad mutants


def build_mutant(mutant_id: str, n: int) -> ProtocolDefinition:
    """Deliberately broken variants used as checker sensitivity controls."""
    if mutant_id == "asym-sw-noexitwait":
        return _build_asym_sw_noexitwait(n)
    if mutant_id == "sym-nocandidate":
        return _build_sym_nocandidate(n)
    raise ValueError("not a mutant id: %r" % mutant_id)


def _build_asym_sw_noexitwait(n: int) -> ProtocolDefinition:
    # Drop the exit wait: the process leaves 3 without checking that the
    # coordinator has moved the turn away, so it can re-enter on a stale
    # grant while the coordinator hands the turn to someone else.
    base = build_asym_sw(n)
    roles = []
    for r in base.roles:
        if r.pid is None:
            roles.append(r)
            continue
        edges = tuple(
            Edge("3->4", "3", "4") if e.id == "3->4" else e for e in r.edges
        )
        roles.append(
            Role(
                name=r.name, pid=r.pid, locations=r.locations, initial=r.initial,
                edges=edges, locals_layout=r.locals_layout,
                trying=r.trying, quiescent=r.quiescent,
            )
        )
    return ProtocolDefinition(
        name="asym-sw-noexitwait",
        n=n,
        roles=tuple(roles),
        permissions=base.permissions,
        family="asym",
        initial_turn=base.initial_turn,
        turn_values=base.turn_values,
        flag_values=base.flag_values,
    )


def _build_sym_nocandidate(n: int) -> ProtocolDefinition:
    # Remove the candidate election entirely: any process seeing a FREE
    # turn claims it directly, so two arrivals can both self-grant.
    base = build_sym(n)
    removed = {"3.1", "3.2", "3.3", "3.4", "3.4.1", "3.4.2", "3.5", "3.6", "3.7"}
    locations = tuple(loc for loc in SYM_LOCATIONS if loc not in removed)
    roles = []
    for r in base.roles:
        kept = [
            e for e in r.edges
            if e.source not in removed and e.target not in removed
        ]
        kept = [e for e in kept if e.id not in ("3->3.1", "3->4")]
        kept.extend([
            Edge("3->3.5.1", "3", "3.5.1", guard=conj(_turn(EQ, FREE))),
            Edge("3->4", "3", "4", guard=conj(_turn(NE, FREE))),
            Edge("3.5.2->4", "3.5.2", "4"),
        ])
        roles.append(
            Role(
                name=r.name, pid=r.pid, locations=locations, initial=r.initial,
                edges=tuple(kept), locals_layout=r.locals_layout,
                trying=frozenset(loc for loc in r.trying if loc not in removed),
                quiescent=r.quiescent,
            )
        )
    return ProtocolDefinition(
        name="sym-nocandidate",
        n=n,
        roles=tuple(roles),
        permissions=base.permissions,
        family="sym",
        initial_turn=base.initial_turn,
        turn_values=base.turn_values,
        flag_values=base.flag_values,
        extended_cs=base.extended_cs,
        clear_range=frozenset(loc for loc in base.clear_range if loc not in removed),
        grant_edges=base.grant_edges,
    )


# ---------------------------------------------------------------------------
# Registry


def build_protocol(protocol_id: str, n: int) -> ProtocolDefinition:
    """Build any registered protocol or mutant by id."""
    if protocol_id == "asym":
        return build_asym(n)
    if protocol_id == "asym-sw":
        return build_asym_sw(n)
    if protocol_id == "sym":
        return build_sym(n)
    if protocol_id in MUTANT_IDS:
        return build_mutant(protocol_id, n)
    raise ValueError("unknown protocol id: %r" % protocol_id)


# ---------------------------------------------------------------------------
# Static validation


@dataclass(frozen=True)
class AccessViolation:
    edge: str      # qualified "role:edge-id"
    variable: str  # "turn", "flag[2]", or "flag[*]" for indirect reads
    access: str    # "read" | "write"

    def __str__(self) -> str:
        return "%s %ss %s without permission" % (self.edge, self.access, self.variable)


def _edge_shared_reads(edge: Edge) -> list[str]:
    reads = []
    if edge.guard is None:
        return reads
    for clause in edge.guard:
        for atom in clause:
            k = atom.read.kind
            if k == "turn":
                reads.append("turn")
            elif k == "flag":
                reads.append("flag[%d]" % atom.read.arg)
            elif k in ("flag-via", "flag-circ"):
                reads.append("flag[*]")
    return reads


def _edge_shared_writes(edge: Edge) -> list[str]:
    writes = []
    for a in edge.effect:
        if a.target == "turn":
            writes.append("turn")
        elif a.target == "flag":
            writes.append("flag[%d]" % a.index)
    return writes


def validate_access_discipline(proto: ProtocolDefinition) -> list[AccessViolation]:
    """Check every edge's shared reads/writes against the declared
    permissions.  Empty result means the protocol is clean.

    An indirect flag read (index computed from a local) requires read
    permission on every flag slot.
    """
    violations = []
    flag_vars = ["flag[%d]" % i for i in range(proto.n)]
    for role in proto.roles:
        for edge in role.edges:
            ref = "%s:%s" % (role.name, edge.id)
            for var in _edge_shared_reads(edge):
                targets = flag_vars if var == "flag[*]" else [var]
                for t in targets:
                    readers, _ = proto.permissions[t]
                    if role.name not in readers:
                        violations.append(AccessViolation(ref, var, "read"))
                        break
            for var in _edge_shared_writes(edge):
                _, writers = proto.permissions[var]
                if role.name not in writers:
                    violations.append(AccessViolation(ref, var, "write"))
    return violations


def validate_single_access(proto: ProtocolDefinition) -> list[str]:
    """Check the one-event-one-access granularity: a guard reads at most
    one shared variable not owned by the acting role, an effect writes
    at most one shared variable, and no edge both reads a foreign shared
    variable and writes a different shared one."""
    problems = []
    for role in proto.roles:
        own_flag = "flag[%d]" % role.pid if role.pid is not None else None
        for edge in role.edges:
            ref = "%s:%s" % (role.name, edge.id)
            foreign = {v for v in _edge_shared_reads(edge) if v != own_flag}
            writes = _edge_shared_writes(edge)
            if len(foreign) > 1:
                problems.append("%s reads %d foreign shared variables" % (ref, len(foreign)))
            if len(writes) > 1:
                problems.append("%s writes %d shared variables" % (ref, len(writes)))
            if foreign and writes and set(writes) != foreign:
                problems.append("%s reads %s and writes %s" % (ref, sorted(foreign), writes))
    return problems


def _validate_structure(proto: ProtocolDefinition) -> None:
    """Build-time sanity: locations well formed, every location has an
    outgoing edge, constants stay inside the declared value domains."""
    for role in proto.roles:
        sources = {e.source for e in role.edges}
        for e in role.edges:
            if e.source not in role.locations or e.target not in role.locations:
                raise ValueError("%s:%s uses an undeclared location" % (role.name, e.id))
        for loc in role.locations:
            if loc not in sources:
                raise ValueError("%s location %s has no outgoing edge" % (role.name, loc))
        for e in role.edges:
            for a in e.effect:
                if a.target == "turn":
                    if a.expr[0] == "const" and a.expr[1] not in proto.turn_values:
                        raise ValueError(
                            "%s:%s writes turn value outside the declared domain"
                            % (role.name, e.id)
                        )
                elif a.target == "flag":
                    if a.expr[1] not in proto.flag_values:
                        raise ValueError(
                            "%s:%s writes flag value outside the declared domain"
                            % (role.name, e.id)
                        )
    bad = validate_access_discipline(proto)
    if bad:
        raise ValueError("access discipline violated: %s" % "; ".join(map(str, bad)))
    narrow = validate_single_access(proto)
    if narrow:
        raise ValueError("access granularity violated: %s" % "; ".join(narrow))
