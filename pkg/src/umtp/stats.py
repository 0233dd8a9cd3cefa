"""Permutation tests used by the Monte Carlo checks.

Both tests draw their permutation distribution exactly: a random sign flip
of ``c`` equal values is a Binomial(c, 1/2) count, and a random orientation
swap of ``c`` pairs over the same unordered class is too.  Grouping equal
values therefore gives the permutation law at a cost independent of the
sample size.
"""

import math

import numpy as np

_CHUNK_CELLS = 4_000_000


def _group(values):
    uniq, counts = np.unique(np.asarray(values, dtype=float), return_counts=True)
    keep = uniq != 0.0
    return uniq[keep], counts[keep]


def sign_flip_pvalue(diffs, permutations, gen):
    """Two-sided paired permutation p-value for ``mean(diffs) == 0``."""
    vals, counts = _group(diffs)
    if len(vals) == 0:
        return 1.0
    observed = abs(float(np.dot(vals, counts)))
    tol = 1e-9 * max(1.0, observed)
    hits = 0
    done = 0
    chunk = max(1, _CHUNK_CELLS // len(vals))
    while done < permutations:
        b = min(chunk, permutations - done)
        heads = gen.binomial(counts, 0.5, size=(b, len(vals)))
        stat = np.abs((2 * heads - counts) @ vals)
        hits += int(np.count_nonzero(stat >= observed - tol))
        done += b
    return (1 + hits) / (1 + permutations)


def swap_test(pairs, statistic, permutations, gen):
    """Permutation test of exchangeability for ordered categorical pairs.

    ``pairs`` maps ``(a, b)`` to a count.  Under the null each draw is
    equally likely to be seen as ``(a, b)`` or ``(b, a)``.  ``statistic``
    receives ``(classes, forward)``: the list of unordered classes
    ``(a, b)`` with ``a < b`` and an array of forward counts (one column per
    class, possibly batched along the first axis).  Returns
    ``(observed, p_value)``.
    """
    classes = sorted({tuple(sorted(k)) for k in pairs if k[0] != k[1]})
    if not classes:
        return 0.0, 1.0
    fwd = np.array([pairs.get(c, 0) for c in classes], dtype=float)
    tot = np.array([pairs.get(c, 0) + pairs.get((c[1], c[0]), 0) for c in classes], dtype=float)
    observed = float(statistic(classes, fwd[None, :], tot)[0])
    tol = 1e-9 * max(1.0, abs(observed))
    hits = 0
    done = 0
    chunk = max(1, _CHUNK_CELLS // len(classes))
    itot = tot.astype(np.int64)
    while done < permutations:
        b = min(chunk, permutations - done)
        sim = gen.binomial(itot, 0.5, size=(b, len(classes))).astype(float)
        hits += int(np.count_nonzero(statistic(classes, sim, tot) >= observed - tol))
        done += b
    return observed, (1 + hits) / (1 + permutations)


def asymmetry_chi2(classes, fwd, tot):
    """Sum over classes of ``(n_ab - n_ba)^2 / (n_ab + n_ba)``."""
    return ((2 * fwd - tot) ** 2 / np.maximum(tot, 1)).sum(axis=1)


def marginal_tv(classes, fwd, tot, n):
    """TV distance between first and second marginals, given forward counts."""
    keys = sorted({k for c in classes for k in c})
    index = {k: i for i, k in enumerate(keys)}
    # net flow out of key a: forward(a,b) - backward(a,b)
    inc = np.zeros((len(classes), len(keys)))
    for j, (a, b) in enumerate(classes):
        inc[j, index[a]] = 1.0
        inc[j, index[b]] = -1.0
    net = (2 * fwd - tot) @ inc
    return 0.5 * np.abs(net).sum(axis=1) / n


def mean_and_se(values):
    x = np.asarray(values, dtype=float)
    if len(x) < 2:
        return float(x.mean()) if len(x) else math.nan, math.nan
    return float(x.mean()), float(x.std(ddof=1) / math.sqrt(len(x)))


def binomial_se(p, n):
    return math.sqrt(max(p * (1 - p), 0.0) / n)
