#!/usr/bin/env python3
"""Benchmark the compiled exploration kernel against the pure-Python
fallback on the shipped protocols.

Usage: python benchmarks/bench_kernels.py [--quick]

Both kernels produce byte-identical results (asserted here on the
smaller workloads); the interesting number is the transition rate.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from mutexlab import kernel
from mutexlab.protocols import build_protocol
from mutexlab.tables import compile_bypass_table, compile_table

WORKLOADS = [
    # (label, protocol, n, table builder, verify-parity, pure-feasible)
    ("asym n=4", "asym", 4, lambda p: compile_table(p), True, True),
    ("asym-sw n=4", "asym-sw", 4, lambda p: compile_table(p), True, True),
    ("sym n=2", "sym", 2, lambda p: compile_table(p), True, True),
    ("sym n=3", "sym", 3, lambda p: compile_table(p), False, True),
    ("sym n=3 bypass(0)", "sym", 3, lambda p: compile_bypass_table(p, 0), False, True),
    # 14M states / 55M transitions: compiled kernel only
    ("sym n=4", "sym", 4, lambda p: compile_table(p), False, False),
]


def run(impl, table, cap):
    t0 = time.perf_counter()
    res = impl.run_bfs(table.as_dict(), cap, True, True)
    return time.perf_counter() - t0, res


def main():
    parser = argparse.ArgumentParser()
    parser.add_argument("--quick", action="store_true",
                        help="skip the n=4 symmetric workload")
    parser.add_argument("--state-cap", type=int, default=20_000_000)
    args = parser.parse_args()

    try:
        from mutexlab import _core as compiled
    except ImportError:
        compiled = None
        print("compiled kernel not built; showing pure-Python numbers only")
    import mutexlab._core_py as pure

    print("%-20s %12s %12s %10s %10s %8s"
          % ("workload", "states", "transitions", "pure", "compiled", "speedup"))
    for label, pid, n, make, verify, pure_ok in WORKLOADS:
        if args.quick and label == "sym n=4":
            continue
        if compiled is None and not pure_ok:
            continue
        table = make(build_protocol(pid, n))
        t_pure = res_pure = None
        if pure_ok:
            t_pure, res_pure = run(pure, table, args.state_cap)
        if compiled is None:
            print("%-20s %12d %12d %9.2fs %10s %8s"
                  % (label, res_pure["nstates"], res_pure["ntrans"],
                     t_pure, "-", "-"))
            continue
        t_comp, res_comp = run(compiled, table, args.state_cap)
        if res_pure is not None:
            assert res_pure["nstates"] == res_comp["nstates"]
            assert res_pure["ntrans"] == res_comp["ntrans"]
            if verify:
                assert np.array_equal(res_pure["states"], res_comp["states"])
                assert np.array_equal(res_pure["t_dst"], res_comp["t_dst"])
        bounded = " (bounded)" if res_comp["bounded"] else ""
        pure_col = "%9.2fs" % t_pure if t_pure is not None else "%10s" % "-"
        speedup = (
            "%7.1fx" % (t_pure / max(t_comp, 1e-9)) if t_pure is not None
            else "%8s" % "-"
        )
        print("%-20s %12d %12d %s %9.2fs %s%s"
              % (label, res_comp["nstates"], res_comp["ntrans"],
                 pure_col, t_comp, speedup, bounded))
    print("\nkernel selected at import: %s" % kernel.KERNEL)


if __name__ == "__main__":
    main()
