"""The compiled and pure-Python kernels must be interchangeable:
identical state order, parents, transitions, masks and violations."""

import numpy as np
import pytest

from mutexlab import kernel
from mutexlab.protocols import build_protocol
from mutexlab.tables import (
    compile_bypass_table,
    compile_table,
    compile_turn_stable_table,
)

HAS_COMPILED = kernel.KERNEL == "compiled"


def _tables_for(proto):
    yield compile_table(proto)
    if proto.family == "sym":
        yield compile_turn_stable_table(proto)
    yield compile_bypass_table(proto, 0)


def _run_both(table, cap=10 ** 7):
    import mutexlab._core as compiled

    a = compiled.run_bfs(table.as_dict(), cap, True, True)
    b = kernel.run_bfs_pure(table.as_dict(), cap, True, True)
    return a, b


def _assert_same(a, b):
    assert a["nstates"] == b["nstates"]
    assert a["nexpanded"] == b["nexpanded"]
    assert a["ntrans"] == b["ntrans"]
    assert a["bounded"] == b["bounded"]
    assert np.array_equal(a["states"], b["states"])
    assert np.array_equal(a["parent"], b["parent"])
    assert np.array_equal(a["parent_edge"], b["parent_edge"])
    assert np.array_equal(a["subject_mask"], b["subject_mask"])
    assert np.array_equal(a["t_src"], b["t_src"])
    assert np.array_equal(a["t_edge"], b["t_edge"])
    assert np.array_equal(a["t_dst"], b["t_dst"])
    assert a["violations"] == b["violations"]


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled kernel not built")
@pytest.mark.parametrize(
    "pid,n",
    [
        ("asym", 1), ("asym", 2), ("asym", 3),
        ("asym-sw", 2), ("sym", 1), ("sym", 2),
        ("asym-sw-noexitwait", 2), ("sym-nocandidate", 2),
    ],
)
def test_kernels_agree(pid, n):
    proto = build_protocol(pid, n)
    for table in _tables_for(proto):
        a, b = _run_both(table)
        _assert_same(a, b)


@pytest.mark.skipif(not HAS_COMPILED, reason="compiled kernel not built")
def test_kernels_agree_when_bounded():
    proto = build_protocol("sym", 2)
    table = compile_table(proto)
    for cap in (1, 17, 100, 1000):
        a, b = _run_both(table, cap=cap)
        assert a["bounded"] and b["bounded"]
        assert a["nstates"] == cap
        _assert_same(a, b)


def test_pure_kernel_reports_bounded_never_silently_truncates():
    proto = build_protocol("asym", 2)
    table = compile_table(proto)
    full = kernel.run_bfs_pure(table.as_dict(), 10 ** 7)
    capped = kernel.run_bfs_pure(table.as_dict(), full["nstates"] - 1)
    assert capped["bounded"]
    assert capped["nstates"] == full["nstates"] - 1
    exact = kernel.run_bfs_pure(table.as_dict(), full["nstates"])
    assert not exact["bounded"]
