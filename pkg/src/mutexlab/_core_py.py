"""Pure-Python exploration kernel.

Same contract as the compiled extension ``mutexlab._core``: exhaustive
BFS over a table-compiled protocol, producing the reachable state
matrix in discovery order, BFS parent pointers, the transition list,
per-state subject-enabled role masks and first-per-tag edge-assertion
violations.  Both kernels expand edges in identical order (role index,
then edge id), so their outputs are byte-identical.

Expression operands of an effect are evaluated against the pre-state;
assignments never observe each other within one edge.
"""

from __future__ import annotations

import numpy as np


def run_bfs(table, state_cap, want_transitions=True, want_masks=True):
    n = table["n"]
    ncells = table["ncells"]
    flag_base = table["flag_base"]
    pc_cells = [int(x) for x in table["pc_cells"]]
    nroles = table["nroles"]

    e_role = table["e_role"]
    e_from = table["e_from"]
    e_to = table["e_to"]
    e_exempt = table["e_exempt"]
    e_guard_lo = table["e_guard_lo"]
    e_guard_hi = table["e_guard_hi"]
    e_assert_lo = table["e_assert_lo"]
    e_assert_hi = table["e_assert_hi"]
    e_assert_tag = table["e_assert_tag"]
    e_assign_lo = table["e_assign_lo"]
    e_assign_hi = table["e_assign_hi"]
    cl_lo = table["cl_lo"]
    cl_hi = table["cl_hi"]
    atoms = [tuple(int(v) for v in row) for row in table["atoms"]]
    assigns = [tuple(int(v) for v in row) for row in table["assigns"]]
    nedges = len(e_role)

    # Edge rows grouped by (role, source pc); row indices stay ascending,
    # which preserves the global role-major, id-sorted expansion order.
    groups: dict[tuple[int, int], list[int]] = {}
    for k in range(nedges):
        groups.setdefault((int(e_role[k]), int(e_from[k])), []).append(k)

    def clause_true(s, ci) -> bool:
        for ai in range(cl_lo[ci], cl_hi[ci]):
            kind, a, b, op, rhs = atoms[ai]
            if kind == 0:
                v = s[a]
            else:
                v = s[flag_base + (s[a] + b) % n]
            if op == 0:
                ok = v == (rhs & 0xFF)
            elif op == 1:
                ok = v != (rhs & 0xFF)
            else:
                sv = v - 256 if v >= 128 else v
                if op == 2:
                    ok = sv < rhs
                elif op == 3:
                    ok = sv <= rhs
                elif op == 4:
                    ok = sv > rhs
                else:
                    ok = sv >= rhs
            if not ok:
                return False
        return True

    def guard_true(s, k) -> bool:
        lo, hi = e_guard_lo[k], e_guard_hi[k]
        for ci in range(lo, hi):
            if clause_true(s, ci):
                return True
        return False

    def assertion_holds(s, k) -> bool:
        # CNF: every clause needs at least one true atom.
        for ci in range(e_assert_lo[k], e_assert_hi[k]):
            sat = False
            for ai in range(cl_lo[ci], cl_hi[ci]):
                kind, a, b, op, rhs = atoms[ai]
                v = s[a] if kind == 0 else s[flag_base + (s[a] + b) % n]
                if op == 0:
                    ok = v == (rhs & 0xFF)
                elif op == 1:
                    ok = v != (rhs & 0xFF)
                else:
                    sv = v - 256 if v >= 128 else v
                    ok = (
                        sv < rhs if op == 2 else
                        sv <= rhs if op == 3 else
                        sv > rhs if op == 4 else
                        sv >= rhs
                    )
                if ok:
                    sat = True
                    break
            if not sat:
                return False
        return True

    initial = bytes(table["initial"])
    states = [initial]
    visited = {initial: 0}
    parent = [-1]
    parent_edge = [-1]
    masks = []
    t_src, t_edge, t_dst = [], [], []
    ntrans = 0
    violations = []
    seen_tags = set()
    bounded = False

    head = 0
    while head < len(states):
        s = states[head]
        mask = 0
        for r in range(nroles):
            for k in groups.get((r, s[pc_cells[r]]), ()):
                if not guard_true(s, k):
                    continue
                if not e_exempt[k]:
                    mask |= 1 << r
                tag = e_assert_tag[k]
                if tag >= 0 and tag not in seen_tags and not assertion_holds(s, k):
                    seen_tags.add(tag)
                    violations.append((int(tag), head, k))
                succ = bytearray(s)
                for si in range(e_assign_lo[k], e_assign_hi[k]):
                    target, kind, a, b = assigns[si]
                    if kind == 0:
                        succ[target] = a & 0xFF
                    elif kind == 1:
                        succ[target] = s[a]
                    elif kind == 2:
                        succ[target] = (s[a] + b) & 0xFF
                    else:
                        succ[target] = (s[a] + b) % n
                succ[pc_cells[r]] = e_to[k]
                key = bytes(succ)
                idx = visited.get(key)
                if idx is None:
                    if len(states) >= state_cap:
                        bounded = True
                        break
                    idx = len(states)
                    visited[key] = idx
                    states.append(key)
                    parent.append(head)
                    parent_edge.append(k)
                ntrans += 1
                if want_transitions:
                    t_src.append(head)
                    t_edge.append(k)
                    t_dst.append(idx)
            if bounded:
                break
        if bounded:
            break
        masks.append(mask)
        head += 1

    nstates = len(states)
    state_matrix = np.frombuffer(b"".join(states), dtype=np.uint8).reshape(
        nstates, ncells
    ).copy()
    mask_arr = None
    if want_masks:
        mask_arr = np.zeros(nstates, dtype=np.uint16)
        mask_arr[: len(masks)] = masks
    return {
        "nstates": nstates,
        "nexpanded": head,
        "states": state_matrix,
        "parent": np.asarray(parent, dtype=np.int64),
        "parent_edge": np.asarray(parent_edge, dtype=np.int32),
        "subject_mask": mask_arr,
        "t_src": np.asarray(t_src, dtype=np.int32) if want_transitions else None,
        "t_edge": np.asarray(t_edge, dtype=np.int32) if want_transitions else None,
        "t_dst": np.asarray(t_dst, dtype=np.int32) if want_transitions else None,
        "ntrans": ntrans,
        "violations": violations,
        "bounded": bounded,
    }
