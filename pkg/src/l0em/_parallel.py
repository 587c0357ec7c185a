"""Worker-pool map used by cross-validation, nodewise fits, and replicates.

Work items must be pure; results are merged by index, so serial and threaded
runs produce identical output. BLAS releases the GIL inside the kernel
factorizations, which is where the time goes.
"""

import os
from concurrent.futures import ThreadPoolExecutor

THREADS_ENV = "L0EM_THREADS"


def resolve_threads(threads: int | None) -> int:
    """Explicit argument wins; otherwise the L0EM_THREADS env var; else 1."""
    if threads is None:
        raw = os.environ.get(THREADS_ENV, "").strip()
        threads = int(raw) if raw else 1
    threads = int(threads)
    if threads < 1:
        raise ValueError(f"threads must be >= 1, got {threads}")
    return threads


def pmap(fn, items, threads: int | None = None) -> list:
    """Map preserving item order; runs serially unless threads > 1."""
    items = list(items)
    threads = resolve_threads(threads)
    if threads == 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
