"""Thread pool helper for the nogil compiled kernels."""

import os
from concurrent.futures import ThreadPoolExecutor


def max_threads() -> int:
    """Worker cap from ``NEVMAT_THREADS`` (defaults to the CPU count)."""
    env = os.environ.get("NEVMAT_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def ordered_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, possibly threaded; the result order is preserved."""
    items = list(items)
    n = min(threads or max_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
