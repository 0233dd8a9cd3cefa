"""Process-pool helper for embarrassingly parallel Monte Carlo loops.

Draw ``i`` depends only on ``(seed, i)``, so splitting the index range into
contiguous chunks and concatenating in order gives results identical to a
serial run for any worker count.
"""

from concurrent.futures import ProcessPoolExecutor


def _call(args):
    fn, fixed, seed, start, count = args
    return fn(*fixed, count, seed=seed, start=start)


def chunked_map(fn, fixed, total, seed, workers):
    """Run ``fn(*fixed, count, seed=seed, start=start)`` over chunks; concatenate."""
    size = -(-total // workers)
    jobs = [(fn, fixed, seed, s, min(size, total - s)) for s in range(0, total, size)]
    out = []
    with ProcessPoolExecutor(max_workers=workers) as pool:
        for part in pool.map(_call, jobs):
            out.extend(part)
    return out
