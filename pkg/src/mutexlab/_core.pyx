# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled exploration kernel.

Contract and expansion order are identical to ``mutexlab._core_py``;
see that module for the semantics.  This version keeps the visited set
in an open-addressing hash table over the raw state rows and runs the
guard/effect interpreter in C.
"""

import numpy as np

ctypedef unsigned char u8
ctypedef unsigned long long u64


cdef inline u64 _fnv1a(const u8* p, Py_ssize_t nbytes) noexcept nogil:
    cdef u64 h = 1469598103934665603ULL
    cdef Py_ssize_t i
    for i in range(nbytes):
        h = (h ^ p[i]) * 1099511628211ULL
    return h


cdef inline bint _rows_equal(const u8* a, const u8* b, int ncells) noexcept nogil:
    cdef int i
    for i in range(ncells):
        if a[i] != b[i]:
            return 0
    return 1


cdef inline bint _eval_atom(const u8* s, const int* at, int flag_base, int n) noexcept nogil:
    cdef int v, sv, op, rhs
    if at[0] == 0:
        v = s[at[1]]
    else:
        v = s[flag_base + ((s[at[1]] + at[2]) % n)]
    op = at[3]
    rhs = at[4]
    if op == 0:
        return v == (rhs & 0xFF)
    if op == 1:
        return v != (rhs & 0xFF)
    sv = v - 256 if v >= 128 else v
    if op == 2:
        return sv < rhs
    if op == 3:
        return sv <= rhs
    if op == 4:
        return sv > rhs
    return sv >= rhs


def run_bfs(table, long state_cap, bint want_transitions=True, bint want_masks=True):
    cdef int n = table["n"]
    cdef int ncells = table["ncells"]
    cdef int nroles = table["nroles"]
    cdef int flag_base = table["flag_base"]

    cdef int[::1] pc_cells = np.ascontiguousarray(table["pc_cells"], dtype=np.int32)
    cdef int[::1] e_role = np.ascontiguousarray(table["e_role"], dtype=np.int32)
    cdef int[::1] e_from = np.ascontiguousarray(table["e_from"], dtype=np.int32)
    cdef int[::1] e_to = np.ascontiguousarray(table["e_to"], dtype=np.int32)
    cdef int[::1] e_exempt = np.ascontiguousarray(table["e_exempt"], dtype=np.int32)
    cdef int[::1] e_guard_lo = np.ascontiguousarray(table["e_guard_lo"], dtype=np.int32)
    cdef int[::1] e_guard_hi = np.ascontiguousarray(table["e_guard_hi"], dtype=np.int32)
    cdef int[::1] e_assert_lo = np.ascontiguousarray(table["e_assert_lo"], dtype=np.int32)
    cdef int[::1] e_assert_hi = np.ascontiguousarray(table["e_assert_hi"], dtype=np.int32)
    cdef int[::1] e_assert_tag = np.ascontiguousarray(table["e_assert_tag"], dtype=np.int32)
    cdef int[::1] e_assign_lo = np.ascontiguousarray(table["e_assign_lo"], dtype=np.int32)
    cdef int[::1] e_assign_hi = np.ascontiguousarray(table["e_assign_hi"], dtype=np.int32)
    cdef int[::1] cl_lo = np.ascontiguousarray(table["cl_lo"], dtype=np.int32)
    cdef int[::1] cl_hi = np.ascontiguousarray(table["cl_hi"], dtype=np.int32)
    cdef int[:, ::1] atoms = np.ascontiguousarray(
        table["atoms"].reshape(-1, 5), dtype=np.int32)
    cdef int[:, ::1] assigns = np.ascontiguousarray(
        table["assigns"].reshape(-1, 4), dtype=np.int32)
    cdef int nedges = e_role.shape[0]

    # candidate edge rows indexed by (role, source pc); rows stay in
    # ascending order, preserving the role-major, id-sorted expansion
    groups = {}
    for _k in range(nedges):
        groups.setdefault((int(e_role[_k]), int(e_from[_k])), []).append(_k)
    gl_np = np.zeros(nroles * 256, dtype=np.int32)
    gh_np = np.zeros(nroles * 256, dtype=np.int32)
    cand_list = []
    for _r in range(nroles):
        for _pc in range(256):
            g = groups.get((_r, _pc))
            if g:
                gl_np[_r * 256 + _pc] = len(cand_list)
                cand_list.extend(g)
                gh_np[_r * 256 + _pc] = len(cand_list)
    cand_np = np.asarray(cand_list, dtype=np.int32)
    cdef int[::1] group_lo = gl_np
    cdef int[::1] group_hi = gh_np
    cdef int[::1] cand = cand_np

    # growable state matrix, parents, masks
    cdef long rows_cap = 4096
    if rows_cap > state_cap:
        rows_cap = state_cap if state_cap > 1 else 1
    states_np = np.zeros((rows_cap, ncells), dtype=np.uint8)
    parent_np = np.empty(rows_cap, dtype=np.int64)
    pedge_np = np.empty(rows_cap, dtype=np.int32)
    masks_np = np.zeros(rows_cap, dtype=np.uint16)
    cdef u8[:, ::1] states = states_np
    cdef long[::1] parent = parent_np
    cdef int[::1] pedge = pedge_np
    cdef unsigned short[::1] masks = masks_np

    # growable transition arrays
    cdef long tcap = 8192 if want_transitions else 1
    tsrc_np = np.empty(tcap, dtype=np.int32)
    tedge_np = np.empty(tcap, dtype=np.int32)
    tdst_np = np.empty(tcap, dtype=np.int32)
    cdef int[::1] tsrc = tsrc_np
    cdef int[::1] tedge = tedge_np
    cdef int[::1] tdst = tdst_np

    # open-addressing visited table
    cdef long slots_cap = 1 << 14
    while slots_cap < rows_cap * 2:
        slots_cap <<= 1
    slots_np = np.full(slots_cap, -1, dtype=np.int64)
    cdef long[::1] slots = slots_np
    cdef u64 slot_mask = slots_cap - 1

    cur_np = np.empty(ncells, dtype=np.uint8)
    cdef u8[::1] cur = cur_np

    cdef const u8[::1] initial = np.ascontiguousarray(table["initial"], dtype=np.uint8)
    cdef long nstates = 1, head = 0, ntrans = 0
    cdef long i, idx, slot_i
    cdef int k, r, c, ci, ai, si, tag, ok, sat
    cdef int target, akind, aa, ab
    cdef u64 h
    cdef unsigned short mask
    cdef bint bounded = 0, enabled, is_new
    cdef u8 seen_tag[64]
    for k in range(64):
        seen_tag[k] = 0
    violations = []

    for c in range(ncells):
        states[0, c] = initial[c]
    parent[0] = -1
    pedge[0] = -1
    h = _fnv1a(&states[0, 0], ncells)
    slots[<long>(h & slot_mask)] = 0

    cdef int gbase, t
    while head < nstates:
        for c in range(ncells):
            cur[c] = states[head, c]
        mask = 0
        for r in range(nroles):
            # edges of role r at the current pc, ascending row order
            gbase = r * 256 + cur[pc_cells[r]]
            for t in range(group_lo[gbase], group_hi[gbase]):
                k = cand[t]
                # guard: DNF, any clause with all atoms true
                enabled = 0
                for ci in range(e_guard_lo[k], e_guard_hi[k]):
                    ok = 1
                    for ai in range(cl_lo[ci], cl_hi[ci]):
                        if not _eval_atom(&cur[0], &atoms[ai, 0], flag_base, n):
                            ok = 0
                            break
                    if ok:
                        enabled = 1
                        break
                if not enabled:
                    continue
                if not e_exempt[k]:
                    mask |= (<unsigned short>1) << r
                tag = e_assert_tag[k]
                if tag >= 0 and not seen_tag[tag]:
                    # assertion: CNF, every clause needs one true atom
                    ok = 1
                    for ci in range(e_assert_lo[k], e_assert_hi[k]):
                        sat = 0
                        for ai in range(cl_lo[ci], cl_hi[ci]):
                            if _eval_atom(&cur[0], &atoms[ai, 0], flag_base, n):
                                sat = 1
                                break
                        if not sat:
                            ok = 0
                            break
                    if not ok:
                        seen_tag[tag] = 1
                        violations.append((tag, int(head), int(k)))

                # build the successor in the next free row
                if nstates >= rows_cap:
                    rows_cap = rows_cap * 2
                    states_np = _grow2d(states_np, nstates, rows_cap)
                    parent_np = _grow1d(parent_np, nstates, rows_cap)
                    pedge_np = _grow1d(pedge_np, nstates, rows_cap)
                    masks_np = _grow1d(masks_np, nstates, rows_cap)
                    states = states_np
                    parent = parent_np
                    pedge = pedge_np
                    masks = masks_np
                for c in range(ncells):
                    states[nstates, c] = cur[c]
                for si in range(e_assign_lo[k], e_assign_hi[k]):
                    target = assigns[si, 0]
                    akind = assigns[si, 1]
                    aa = assigns[si, 2]
                    ab = assigns[si, 3]
                    if akind == 0:
                        states[nstates, target] = <u8>(aa & 0xFF)
                    elif akind == 1:
                        states[nstates, target] = cur[aa]
                    elif akind == 2:
                        states[nstates, target] = <u8>((cur[aa] + ab) & 0xFF)
                    else:
                        states[nstates, target] = <u8>((cur[aa] + ab) % n)
                states[nstates, pc_cells[r]] = <u8>e_to[k]

                # probe the visited table
                h = _fnv1a(&states[nstates, 0], ncells)
                slot_i = <long>(h & slot_mask)
                is_new = 0
                while True:
                    idx = slots[slot_i]
                    if idx < 0:
                        is_new = 1
                        break
                    if _rows_equal(&states[idx, 0], &states[nstates, 0], ncells):
                        break
                    slot_i = <long>((slot_i + 1) & slot_mask)
                if is_new:
                    if nstates >= state_cap:
                        bounded = 1
                        break
                    idx = nstates
                    slots[slot_i] = idx
                    parent[idx] = head
                    pedge[idx] = k
                    nstates += 1
                    # keep load factor below 0.6
                    if nstates * 5 > slots_cap * 3:
                        slots_cap <<= 1
                        slot_mask = slots_cap - 1
                        slots_np = np.full(slots_cap, -1, dtype=np.int64)
                        slots = slots_np
                        for i in range(nstates):
                            h = _fnv1a(&states[i, 0], ncells)
                            slot_i = <long>(h & slot_mask)
                            while slots[slot_i] >= 0:
                                slot_i = <long>((slot_i + 1) & slot_mask)
                            slots[slot_i] = i
                ntrans += 1
                if want_transitions:
                    if ntrans > tcap:
                        tcap <<= 1
                        tsrc_np = _grow1d(tsrc_np, ntrans - 1, tcap)
                        tedge_np = _grow1d(tedge_np, ntrans - 1, tcap)
                        tdst_np = _grow1d(tdst_np, ntrans - 1, tcap)
                        tsrc = tsrc_np
                        tedge = tedge_np
                        tdst = tdst_np
                    tsrc[ntrans - 1] = <int>head
                    tedge[ntrans - 1] = k
                    tdst[ntrans - 1] = <int>idx
            if bounded:
                break
        if bounded:
            break
        masks[head] = mask
        head += 1

    result_states = states_np[:nstates].copy()
    out = {
        "nstates": int(nstates),
        "nexpanded": int(head),
        "states": result_states,
        "parent": parent_np[:nstates].copy(),
        "parent_edge": pedge_np[:nstates].copy(),
        "subject_mask": masks_np[:nstates].copy() if want_masks else None,
        "t_src": tsrc_np[:ntrans].copy() if want_transitions else None,
        "t_edge": tedge_np[:ntrans].copy() if want_transitions else None,
        "t_dst": tdst_np[:ntrans].copy() if want_transitions else None,
        "ntrans": int(ntrans),
        "violations": violations,
        "bounded": bool(bounded),
    }
    return out


def _grow2d(arr, long used, long newcap):
    out = np.zeros((newcap, arr.shape[1]), dtype=arr.dtype)
    out[:used] = arr[:used]
    return out


def _grow1d(arr, long used, long newcap):
    out = np.zeros(newcap, dtype=arr.dtype)
    out[:used] = arr[:used]
    return out
