"""Block-parallel execution with worker-count-independent results.

Work units are self-describing argument tuples whose randomness comes from
(seed, purpose, block) substreams; results are combined in block order, so
the reduction is identical for any worker count.
"""

from __future__ import annotations

import multiprocessing


def map_blocks(fn, tasks, workers: int = 1):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    ctx = multiprocessing.get_context("fork")
    chunksize = max(1, len(tasks) // (8 * workers))
    with ctx.Pool(workers) as pool:
        return pool.map(fn, tasks, chunksize=chunksize)
