"""Counterexample and simulation traces: object form, frozen text
format, and replay.

Format (one line per step after the header):

    mutexlab-trace v1 protocol=<id> n=<int> seed=<int|none> [cycle=<int>]
    <step> <role> <edge-id> turn=<val> flags=<csv> pc=<location>

``turn`` renders THINKING as ``T``, FREE as ``F`` and a granted process
id as the bare integer; flags render as ``R``/``W``/``C``.  ``pc`` is
the acting role's location after the step.  The optional ``cycle``
header key marks the step index where a liveness lasso's cycle begins;
a value equal to the step count denotes an empty cycle (a fair resting
state where the starved process never advances).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .model import (
    Configuration,
    ProtocolDefinition,
    apply_edge,
    flag_from_str,
    flag_to_str,
    initial_configuration,
    turn_from_str,
    turn_to_str,
)

HEADER_MAGIC = "mutexlab-trace"
FORMAT_VERSION = "v1"


class TraceError(Exception):
    """Malformed trace text or replay divergence."""


@dataclass(frozen=True)
class TraceStep:
    index: int
    role: str
    edge_id: str
    turn: int
    flags: tuple[int, ...]
    pc: str

    def render(self) -> str:
        return "%d %s %s turn=%s flags=%s pc=%s" % (
            self.index,
            self.role,
            self.edge_id,
            turn_to_str(self.turn),
            ",".join(flag_to_str(f) for f in self.flags),
            self.pc,
        )


@dataclass
class Trace:
    protocol: str
    n: int
    steps: list[TraceStep] = field(default_factory=list)
    seed: int | None = None
    cycle_start: int | None = None
    initial: Configuration | None = None

    def render(self) -> str:
        head = "%s %s protocol=%s n=%d seed=%s" % (
            HEADER_MAGIC,
            FORMAT_VERSION,
            self.protocol,
            self.n,
            "none" if self.seed is None else self.seed,
        )
        if self.cycle_start is not None:
            head += " cycle=%d" % self.cycle_start
        return "\n".join([head] + [s.render() for s in self.steps]) + "\n"

    def write(self, path) -> None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(self.render())


def trace_from_edges(
    proto: ProtocolDefinition,
    path: list[tuple[int, str]],
    seed: int | None = None,
    cycle_start: int | None = None,
) -> Trace:
    """Replay a (role index, edge id) path through the semantics and
    record the post-step snapshots."""
    c = initial_configuration(proto)
    steps = []
    for i, (role_idx, edge_id) in enumerate(path):
        role = proto.roles[role_idx]
        edge = next(e for e in role.edges if e.id == edge_id)
        c = apply_edge(proto, c, role_idx, edge)
        steps.append(
            TraceStep(
                index=i,
                role=role.name,
                edge_id=edge_id,
                turn=c.turn,
                flags=c.flags,
                pc=c.pcs[role_idx],
            )
        )
    return Trace(
        protocol=proto.name,
        n=proto.n,
        steps=steps,
        seed=seed,
        cycle_start=cycle_start,
        initial=initial_configuration(proto),
    )


def parse_trace(text: str) -> Trace:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TraceError("empty trace")
    head = lines[0].split()
    if len(head) < 5 or head[0] != HEADER_MAGIC or head[1] != FORMAT_VERSION:
        raise TraceError("bad trace header: %r" % lines[0])
    kv = {}
    for tok in head[2:]:
        if "=" not in tok:
            raise TraceError("bad header token: %r" % tok)
        k, v = tok.split("=", 1)
        kv[k] = v
    trace = Trace(
        protocol=kv["protocol"],
        n=int(kv["n"]),
        seed=None if kv.get("seed", "none") == "none" else int(kv["seed"]),
        cycle_start=int(kv["cycle"]) if "cycle" in kv else None,
    )
    for ln in lines[1:]:
        toks = ln.split()
        if len(toks) != 6:
            raise TraceError("bad step line: %r" % ln)
        fields = {}
        for tok in toks[3:]:
            k, v = tok.split("=", 1)
            fields[k] = v
        trace.steps.append(
            TraceStep(
                index=int(toks[0]),
                role=toks[1],
                edge_id=toks[2],
                turn=turn_from_str(fields["turn"]),
                flags=tuple(flag_from_str(f) for f in fields["flags"].split(",")),
                pc=fields["pc"],
            )
        )
    return trace


def replay(proto: ProtocolDefinition, trace: Trace) -> Configuration:
    """Re-execute a trace against the semantics, checking every recorded
    snapshot; returns the final configuration."""
    if trace.protocol != proto.name or trace.n != proto.n:
        raise TraceError(
            "trace is for %s/n=%d, protocol is %s/n=%d"
            % (trace.protocol, trace.n, proto.name, proto.n)
        )
    c = initial_configuration(proto)
    for step in trace.steps:
        role_idx = proto.role_index(step.role)
        role = proto.roles[role_idx]
        edge = next((e for e in role.edges if e.id == step.edge_id), None)
        if edge is None:
            raise TraceError("unknown edge %s:%s" % (step.role, step.edge_id))
        c = apply_edge(proto, c, role_idx, edge)
        got = (c.turn, c.flags, c.pcs[role_idx])
        want = (step.turn, step.flags, step.pc)
        if got != want:
            raise TraceError(
                "replay diverged at step %d: got %r, trace says %r"
                % (step.index, got, want)
            )
    return c
