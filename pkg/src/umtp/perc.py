"""Bernoulli bond percolation through the standard monotone coupling.

Every edge carries an independent uniform label; the edges open at ``p`` are
those with label below ``p``.  Clusters, monotonicity, survival-to-radius
curves and the cluster sampler all read the same labels.
"""

import csv
import heapq
import io
from collections import deque
from dataclasses import dataclass

import numpy as np

from . import rng
from .core import Network, RootedNetwork, TruncationError
from .gen import RootedSampler
from .labels import LABEL_SCALE, LazyLabels, draw_labels, open_threshold, threshold_value
from .stats import binomial_se


class MonotonicityViolation(AssertionError):
    pass


@dataclass(frozen=True)
class CoupledPercolation:
    network: Network
    labels: tuple
    root: int = 0
    validity_radius: int = None

    def is_open(self, e, p):
        return self.labels[e] < open_threshold(p)

    def open_edges(self, p):
        t = open_threshold(p)
        return [e for e, x in enumerate(self.labels) if x < t]


def couple(g, seed, index=0):
    """Attach labels drawn from ``(seed, index)``; accepts networks or rooted networks."""
    if isinstance(g, RootedNetwork):
        net, root, radius = g.network, g.root, g.validity_radius
    else:
        net, root, radius = g, 0, None
    gen = rng.stream(seed, index, rng.LABELS)
    return CoupledPercolation(net, tuple(draw_labels(gen, net.m)), root, radius)


@dataclass
class ClusterReport:
    p: float
    vertices: frozenset
    reach: int
    touches_boundary: bool

    def survives(self, R):
        return self.reach >= R


def cluster_of_root(c, root=None, p=1.0):
    """Open cluster of ``root`` at ``p`` by breadth-first search.

    ``reach`` is the largest graph distance from the root within the
    cluster.  Touching the truncation boundary is reported, not raised.
    """
    net = c.network
    root = c.root if root is None else root
    t = open_threshold(p)
    dist = net.distances_from(root)
    seen = {root}
    queue = deque([root])
    while queue:
        x = queue.popleft()
        for (y, _, _, e) in net.adjacency[x]:
            if y not in seen and c.labels[e] < t:
                seen.add(y)
                queue.append(y)
    reach = max(dist[v] for v in seen)
    touches = c.validity_radius is not None and reach >= c.validity_radius
    return ClusterReport(float(p), frozenset(seen), reach, touches)


def monotonicity_check(c, root=None, p_list=(0.0, 1.0)):
    """Assert ``cluster(p1) <= cluster(p2)`` for consecutive ``p1 <= p2``."""
    p_list = list(p_list)
    if p_list != sorted(p_list):
        raise ValueError("p_list must be sorted")
    clusters = [cluster_of_root(c, root, p) for p in p_list]
    violations = [(a.p, b.p) for a, b in zip(clusters, clusters[1:])
                  if not a.vertices <= b.vertices]
    if violations:
        raise MonotonicityViolation(f"clusters not nested at {violations}")
    return {"ok": True, "p": p_list, "sizes": [len(k.vertices) for k in clusters]}


# -- survival to radius R ---------------------------------------------------

def _distance_fn(ex):
    if hasattr(ex, "distance_from_root"):
        return ex.distance_from_root
    return None


def bottleneck_profile(ex, labels, R):
    """``out[r]`` = smallest label bound at which the root cluster reaches distance ``r``.

    Invades vertices in order of their minimax path label, which is exact
    for the reach of the cluster at every ``p`` at once.  Unreachable
    radii get ``LABEL_SCALE``.
    """
    dfn = _distance_fn(ex)
    out = [LABEL_SCALE] * (R + 1)
    out[0] = -1
    best = 0
    reached = 0
    seen = {ex.root}
    heap = []

    def push(v):
        for (w, _, _, e) in ex.half_edges(v):
            if w not in seen:
                heapq.heappush(heap, (labels(e), w))

    push(ex.root)
    while heap and reached < R:
        lab, w = heapq.heappop(heap)
        if w in seen:
            continue
        seen.add(w)
        best = max(best, lab)
        d = dfn(w) if dfn else None
        if d is None:
            raise ValueError("explorer needs distance_from_root")
        while reached < min(d, R):
            reached += 1
            out[reached] = best
        if d < R:
            push(w)
    return out


class _FiniteDistance:
    """Wrap a finite explorer with BFS distances from its root."""

    def __init__(self, ex):
        self._ex = ex
        self.root = ex.root
        self.validity_radius = ex.validity_radius
        self._dist = ex.network.distances_from(ex.root)

    def half_edges(self, v):
        return self._ex.half_edges(v)

    def distance_from_root(self, v):
        return self._dist[v]


def survival_profiles(s, R, m, seed=0, start=0):
    """Bottleneck profiles for draws ``start .. start + m - 1``."""
    rows = []
    for i in range(start, start + m):
        ex = s.explore(seed, i)
        if not hasattr(ex, "distance_from_root"):
            ex = _FiniteDistance(ex)
        labels = LazyLabels(rng.stream(seed, i, rng.LABELS))
        rows.append(bottleneck_profile(ex, labels, R))
    return rows


@dataclass
class SurvivalCurve:
    p_grid: list
    radii: list
    survival: np.ndarray
    draws: int
    threshold: float
    level: float
    profiles: list

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["p", "R", "survivals", "draws"])
        for i, p in enumerate(self.p_grid):
            for j, r in enumerate(self.radii):
                w.writerow([repr(float(p)), r, int(round(self.survival[i, j] * self.draws)),
                            self.draws])
        return buf.getvalue()

    def as_dict(self):
        return {"p_grid": [float(p) for p in self.p_grid], "radii": list(self.radii),
                "survival": self.survival.tolist(), "draws": self.draws,
                "threshold": self.threshold, "level": self.level,
                "threshold_se": self.threshold_se()}

    def threshold_se(self):
        """Rough standard error of the crossing from the local slope of the curve."""
        last = self.survival[:, -1]
        i = int(np.searchsorted(last, self.level * last[-1]))
        if 0 < i < len(self.p_grid):
            slope = (last[i] - last[i - 1]) / (self.p_grid[i] - self.p_grid[i - 1])
            if slope > 0:
                return binomial_se(self.level, self.draws) / slope
        return float("nan")


def pc_estimate(s, R, p_grid=None, m=10_000, seed=0, level=0.5, workers=1):
    """Empirical ``P[root cluster reaches distance r]`` for ``r <= R`` and ``p`` in the grid.

    All ``p`` share the same labels, so each draw's survival is monotone in
    ``p`` and in ``r``.  ``threshold`` is the smallest ``p`` where the
    radius-``R`` survival reaches ``level`` times its value at ``p = 1``.
    """
    s.require_radius(R)
    if p_grid is None:
        p_grid = np.linspace(0, 1, 101)
    p_grid = np.asarray(sorted(p_grid), float)
    if workers > 1 and m > 1:
        from .parallel import chunked_map
        rows = chunked_map(survival_profiles, (s, R), m, seed, workers)
    else:
        rows = survival_profiles(s, R, m, seed)
    thresholds = [open_threshold(p) for p in p_grid]
    surv = np.array([[sum(1 for row in rows if row[r] < t) / m for r in range(R + 1)]
                     for t in thresholds])
    final = sorted(row[R] for row in rows)
    alive = sum(1 for x in final if x < LABEL_SCALE)
    k = int(np.ceil(level * alive - 1e-12))
    threshold = threshold_value(final[k - 1]) if k >= 1 else 0.0
    return SurvivalCurve(list(p_grid), list(range(R + 1)), surv, m, threshold, level, rows)


def branching_survival(p, R, root_children=3, children=2):
    """Probability the root cluster of a regular tree reaches depth ``R``."""
    q = 1.0
    for _ in range(R - 1):
        q = 1 - (1 - p * q) ** children
    return 1 - (1 - p * q) ** root_children if R > 0 else 1.0


def line_survival(p, R):
    """Reach-to-``R`` probability on the two-sided line."""
    return 1 - (1 - p ** R) ** 2 if R > 0 else 1.0


# -- cluster sampler --------------------------------------------------------

class ClusterExplorer:
    """The open cluster of the root, explored lazily with lazily drawn labels."""

    def __init__(self, base, labels, threshold):
        self.base = base
        self.labels = labels
        self.threshold = threshold
        self.root = base.root
        self.validity_radius = base.validity_radius
        self.is_tree = getattr(base, "is_tree", False)
        self.max_degree = getattr(base, "max_degree", None)
        if self.is_tree and hasattr(base, "distance"):
            self.distance = base.distance
        if self.is_tree and hasattr(base, "distance_from_root"):
            self.distance_from_root = base.distance_from_root

    def half_edges(self, v):
        t = self.threshold
        return [h for h in self.base.half_edges(v) if self.labels(h[3]) < t]

    def neighbors(self, v):
        return [h[0] for h in self.half_edges(v)]

    def degree(self, v):
        return len(self.half_edges(v))

    def vertex_mark(self, v):
        return self.base.vertex_mark(v)


class ClusterSampler(RootedSampler):
    def __init__(self, base, p):
        self.base = base
        self.p = float(p)
        self.threshold = open_threshold(p)
        self.truncation_radius = base.truncation_radius
        self.max_degree = base.max_degree
        self.infinite = base.infinite

    def descriptor(self):
        return {"sampler": "cluster", "p": self.p, "base": self.base.descriptor()}

    def explore(self, seed, index):
        base = self.base.explore(seed, index)
        labels = LazyLabels(rng.stream(seed, index, rng.LABELS))
        return ClusterExplorer(base, labels, self.threshold)


def cluster_sampler(s, p):
    return ClusterSampler(s, p)


__all__ = ["CoupledPercolation", "ClusterReport", "MonotonicityViolation", "couple",
           "cluster_of_root", "monotonicity_check", "bottleneck_profile", "survival_profiles",
           "SurvivalCurve", "pc_estimate", "branching_survival", "line_survival",
           "ClusterExplorer", "ClusterSampler", "cluster_sampler", "TruncationError"]
