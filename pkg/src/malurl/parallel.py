"""Thread-count control shared by the CLI and the model code.

Work is always split into independently seeded tasks whose results are
collected in submission order, so the thread count never changes outputs.
"""
import threading
from concurrent.futures import ThreadPoolExecutor

import numba

_threads = 1
_local = threading.local()


def set_threads(n):
    global _threads
    _threads = max(1, int(n))
    numba.set_num_threads(min(_threads, numba.config.NUMBA_NUM_THREADS))


def get_threads():
    return _threads


def ordered_map(fn, items, threads=None):
    """``[fn(x) for x in items]``, possibly on a thread pool.

    Calls made from inside a pool worker run serially.
    """
    items = list(items)
    n = get_threads() if threads is None else threads
    if n <= 1 or len(items) <= 1 or getattr(_local, "in_pool", False):
        return [fn(it) for it in items]

    def run(it):
        _local.in_pool = True
        try:
            return fn(it)
        finally:
            _local.in_pool = False

    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(run, items))
