"""Deterministic work splitting for per-cell loops.

Workers get contiguous index ranges and write to disjoint slots of
preallocated arrays, so results are byte-identical for any thread count.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from .errors import ValidationError


def run_chunked(worker, total: int, threads: int) -> None:
    """Call ``worker(lo, hi)`` over a partition of range(total)."""
    threads = int(threads)
    if threads < 1:
        raise ValidationError(f"threads must be at least 1, got {threads}")
    if threads == 1 or total <= 1:
        worker(0, total)
        return
    nchunks = min(threads, total)
    step = (total + nchunks - 1) // nchunks
    spans = [(lo, min(lo + step, total)) for lo in range(0, total, step)]
    with ThreadPoolExecutor(max_workers=len(spans)) as pool:
        for fut in [pool.submit(worker, lo, hi) for lo, hi in spans]:
            fut.result()
