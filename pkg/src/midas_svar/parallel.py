"""Deterministic fan-out of independent replications over worker processes."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def default_workers() -> int:
    return max(1, os.cpu_count() or 1)


def _run_chunk(args):
    fn, ctx, reps = args
    return [(r, fn(ctx, r)) for r in reps]


def indexed_map(fn, ctx, n: int, workers: int = 1) -> list:
    """``[fn(ctx, r) for r in range(n)]``, optionally spread over processes.

    ``fn`` must be a module-level function and ``ctx`` picklable. Results are
    placed by index, so the output does not depend on ``workers``.
    """
    if workers <= 1 or n < 2:
        return [fn(ctx, r) for r in range(n)]
    n_chunks = min(n, workers * 4)
    chunks = [list(range(i, n, n_chunks)) for i in range(n_chunks)]
    out: list = [None] * n
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for res in pool.map(_run_chunk, [(fn, ctx, c) for c in chunks]):
            for r, val in res:
                out[r] = val
    return out
