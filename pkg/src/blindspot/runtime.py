"""Worker-count control for the compiled kernels.

One knob drives both the numba ray-casting threads and the scipy query
workers. Changing it never changes results -- every parallel kernel writes
disjoint output slots and all reductions happen in fixed order on the main
thread -- it only changes how fast they arrive.
"""

from __future__ import annotations

import os

import numba

_workers = 0  # 0 = not yet configured; fall back to all cores


def set_thread_count(n: int | None) -> int:
    """Pin the worker count (None = all available cores). Returns the value used."""
    global _workers
    available = numba.config.NUMBA_NUM_THREADS
    if n is None:
        n = os.cpu_count() or 1
    n = max(1, min(int(n), available))
    numba.set_num_threads(n)
    _workers = n
    return n


def query_workers() -> int:
    return _workers if _workers > 0 else (os.cpu_count() or 1)
