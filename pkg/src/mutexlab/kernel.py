"""Selection of the exploration kernel at import time.

The compiled extension is preferred when present; the pure-Python
kernel is a drop-in replacement producing byte-identical results.
Set ``MUTEXLAB_PURE=1`` to force the pure kernel (used by the parity
tests and the benchmark).
"""

from __future__ import annotations

import os

from . import _core_py

if os.environ.get("MUTEXLAB_PURE"):
    _impl = _core_py
    KERNEL = "pure"
else:
    try:
        from . import _core as _impl  # type: ignore[attr-defined]

        KERNEL = "compiled"
    except ImportError:
        _impl = _core_py
        KERNEL = "pure"


def run_bfs(table, state_cap, want_transitions=True, want_masks=True):
    return _impl.run_bfs(
        table, state_cap, want_transitions=want_transitions, want_masks=want_masks
    )


def run_bfs_pure(table, state_cap, want_transitions=True, want_masks=True):
    """Always the pure-Python kernel, regardless of selection."""
    return _core_py.run_bfs(
        table, state_cap, want_transitions=want_transitions, want_masks=want_masks
    )
