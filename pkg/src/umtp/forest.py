"""Uniform and minimal spanning trees and forests.

Wilson's algorithm with the Kirchhoff inclusion oracle, the free and wired
minimal-spanning-forest label rules, Kruskal's algorithm and invasion from a
vertex.
"""

import csv
import heapq
import io
import json
from collections import deque
from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.special

from . import rng
from .canon import canonical_key
from .core import Network, RootedNetwork, TruncationError, explore_ball
from .gen import FiniteRootSampler
from .labels import draw_labels, label_value
from .stats import mean_and_se
from .walk import edge_weights


class DisconnectedError(ValueError):
    pass


class DuplicateLabelError(ValueError):
    pass


@dataclass(frozen=True)
class SpanningSubgraph:
    network: Network
    edges: frozenset

    def __post_init__(self):
        object.__setattr__(self, "edges", frozenset(int(e) for e in self.edges))

    def degree(self, v):
        d = 0
        for e in self.edges:
            u, w, _, _ = self.network.edges[e]
            d += (u == v) + (w == v)
        return d

    def degrees(self):
        out = [0] * self.network.n
        for e in self.edges:
            u, w, _, _ = self.network.edges[e]
            out[u] += 1
            out[w] += 1
        return out

    def subnetwork(self):
        net = self.network
        return Network(net.vertex_marks, tuple(net.edges[e] for e in sorted(self.edges)))

    def is_forest(self):
        uf = _UnionFind(self.network.n)
        for e in self.edges:
            u, w, _, _ = self.network.edges[e]
            if not uf.union(u, w):
                return False
        return True

    def is_spanning_tree(self):
        return len(self.edges) == self.network.n - 1 and self.is_forest()

    def to_json(self):
        return json.dumps({"edges": sorted(self.edges)})


@dataclass(frozen=True)
class LabeledNetwork:
    """A network with one distinct 63-bit integer label per edge."""

    network: Network
    labels: tuple

    def __post_init__(self):
        if len(self.labels) != self.network.m:
            raise ValueError("one label per edge required")
        if len(set(self.labels)) != len(self.labels):
            raise DuplicateLabelError("edge labels must be pairwise distinct")

    @classmethod
    def random(cls, network, seed, index=0):
        gen = rng.stream(seed, index, rng.LABELS)
        return cls(network, tuple(draw_labels(gen, network.m)))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["edge", "label"])
        for e, x in enumerate(self.labels):
            w.writerow([e, x])
        return buf.getvalue()


class _UnionFind:
    def __init__(self, n):
        self.parent = list(range(n))

    def find(self, x):
        p = self.parent
        while p[x] != x:
            p[x] = p[p[x]]
            x = p[x]
        return x

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a == b:
            return False
        self.parent[a] = b
        return True


# -- uniform spanning trees -------------------------------------------------

def _weighted_adjacency(net, weights):
    """Per vertex: (targets, edge ids, cumulative weights), loops dropped."""
    out = []
    for v in range(net.n):
        ts, es, ws = [], [], []
        for (w, _, _, e) in net.adjacency[v]:
            if w != v:
                ts.append(w)
                es.append(e)
                ws.append(weights[e])
        out.append((ts, es, np.cumsum(ws).tolist()))
    return out


def _check_connected(net):
    if not net.is_connected():
        raise DisconnectedError("network is not connected")


def wilson_ust(g, root=0, seed=0, index=0, weights=None, _prep=None):
    """Spanning tree with probability proportional to the product of edge weights."""
    net = g.network if isinstance(g, RootedNetwork) else g
    if _prep is None:
        _check_connected(net)
        w = edge_weights(net) if weights is None else np.asarray(weights, float)
        if np.any(w <= 0):
            raise ValueError("weights must be positive")
        _prep = _prepare(net, w)
    adj, uniform = _prep
    ubuf = rng.UniformBuffer(rng.stream(seed, index, rng.STRUCTURE))
    n = net.n
    in_tree = [False] * n
    in_tree[root] = True
    nxt = [-1] * n
    nxt_edge = [-1] * n
    for start in range(n):
        u = start
        while not in_tree[u]:
            ts, es, cum = adj[u]
            if uniform:
                k = int(ubuf.next() * len(ts))
            else:
                x = ubuf.next() * cum[-1]
                k = 0
                while cum[k] <= x and k < len(cum) - 1:
                    k += 1
            nxt[u] = ts[k]
            nxt_edge[u] = es[k]
            u = ts[k]
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = nxt[u]
    return SpanningSubgraph(net, frozenset(nxt_edge[v] for v in range(n) if v != root))


def _prepare(net, w):
    return _weighted_adjacency(net, w), bool(np.all(w == w[0])) if len(w) else True


def wilson_sampler(g, weights=None):
    """Return ``draw(seed, index)`` sharing the adjacency preprocessing."""
    net = g.network if isinstance(g, RootedNetwork) else g
    _check_connected(net)
    w = edge_weights(net) if weights is None else np.asarray(weights, float)
    if np.any(w <= 0):
        raise ValueError("weights must be positive")
    prep = _prepare(net, w)
    return lambda seed, index: wilson_ust(net, 0, seed, index, _prep=prep)


def edge_inclusion_oracle(g, weights=None):
    """Exact ``P[e in UST] = c(e) R_eff(e)`` from the Laplacian pseudoinverse."""
    net = g.network if isinstance(g, RootedNetwork) else g
    if not net.is_connected():
        raise DisconnectedError("Laplacian is singular beyond its constant kernel")
    w = edge_weights(net) if weights is None else np.asarray(weights, float)
    L = np.zeros((net.n, net.n))
    for (u, v, _, _), c in zip(net.edges, w):
        if u != v:
            L[u, u] += c
            L[v, v] += c
            L[u, v] -= c
            L[v, u] -= c
    Lp = scipy.linalg.pinvh(L)
    out = np.zeros(net.m)
    for e, ((u, v, _, _), c) in enumerate(zip(net.edges, w)):
        if u != v:
            out[e] = c * (Lp[u, u] + Lp[v, v] - 2 * Lp[u, v])
    return out


def _frequency_report(exact, counts, draws, z):
    freq = counts / draws
    se = np.sqrt(np.maximum(exact * (1 - exact), 0) / draws)
    zs = np.where(se > 0, (freq - exact) / np.where(se > 0, se, 1), 0.0)
    degenerate = (se == 0) & (np.abs(freq - exact) > 1e-8)
    tail = float(scipy.special.erfc(z / np.sqrt(2)))
    k = int(np.count_nonzero(se > 0))
    allowed = k * tail + 3 * np.sqrt(k * tail * (1 - tail))
    exceed = int(np.count_nonzero(np.abs(zs) > z))
    return {"edges": len(exact), "exceedances": exceed, "allowed": float(allowed),
            "max_abs_z": float(np.abs(zs).max()) if len(exact) else 0.0,
            "ok": bool(exceed <= allowed and not degenerate.any()),
            "frequencies": freq.tolist(), "oracle": exact.tolist()}


def edge_frequency_check(g, draws, seed=0, weights=None, z=3.0):
    """Compare Wilson edge frequencies with the Kirchhoff oracle.

    Each edge gives a z-score; with many edges some exceed ``z`` by chance,
    so the check passes when the count of exceedances is at most its
    binomial mean plus three standard deviations.
    """
    net = g.network if isinstance(g, RootedNetwork) else g
    exact = edge_inclusion_oracle(net, weights)
    draw = wilson_sampler(net, weights)
    counts = np.zeros(net.m)
    for i in range(draws):
        for e in draw(seed, i).edges:
            counts[e] += 1
    return _frequency_report(exact, counts, draws, z)


def _root_ball_key(sub, root, r):
    from .core import NetworkExplorer
    g, _ = explore_ball(NetworkExplorer(sub, root), r)
    return canonical_key(g).bytes


def ust_degree_stats(graphs, m, seed=0, ball_radius=None, edge_check=False):
    """Mean uniform-root degree in Wilson trees against the exact ``2 - 2/n``.

    With ``ball_radius`` the report also holds the histogram of the root's
    ball inside the tree; with ``edge_check`` the same draws are compared
    with the Kirchhoff oracle as in :func:`edge_frequency_check`.
    """
    reports = []
    for gi, g in enumerate(graphs):
        net = g.network if isinstance(g, RootedNetwork) else g
        draw = wilson_sampler(net)
        sub_seed = rng.derive_seed(seed, gi)
        roots = rng.stream(sub_seed, 0, rng.ROOT).integers(0, net.n, size=m)
        degs = []
        hist = {}
        counts = np.zeros(net.m)
        for i in range(m):
            t = draw(sub_seed, i)
            if edge_check:
                counts[list(t.edges)] += 1
            v = int(roots[i])
            degs.append(t.degree(v))
            if ball_radius is not None:
                k = _root_ball_key(t.subnetwork(), v, ball_radius)
                hist[k] = hist.get(k, 0) + 1
        mean, se = mean_and_se(degs)
        exact = 2 - 2 / net.n
        rep = {"n": net.n, "draws": m, "mean": mean, "se": se, "exact": exact,
               "z": (mean - exact) / se if se and se > 0 else 0.0}
        if ball_radius is not None:
            rep["ball_radius"] = ball_radius
            rep["histogram"] = {k.hex(): c for k, c in sorted(hist.items())}
        if edge_check:
            rep["edge_check"] = _frequency_report(edge_inclusion_oracle(net), counts, m, 3.0)
        reports.append(rep)
    return reports


# -- minimal spanning forests -----------------------------------------------

def _lower_reach(net, labels, source, bound, skip):
    """Vertices reachable from ``source`` through edges labeled below ``bound``."""
    seen = {source}
    queue = deque([source])
    while queue:
        x = queue.popleft()
        for (y, _, _, e) in net.adjacency[x]:
            if e != skip and labels[e] < bound and y not in seen:
                seen.add(y)
                queue.append(y)
    return seen


def fmsf_rule(l):
    """Delete every edge whose label is the largest on some cycle through it.

    Applied edge by edge: ``e = uv`` goes when ``u`` and ``v`` are joined by
    a path of edges with smaller labels (a loop always goes).
    """
    net, labels = l.network, l.labels
    keep = []
    for e, (u, v, _, _) in enumerate(net.edges):
        if u == v:
            continue
        if v not in _lower_reach(net, labels, u, labels[e], e):
            keep.append(e)
    return SpanningSubgraph(net, frozenset(keep))


def wmsf_rule(l, boundary, method="union-find"):
    """Wired rule on a truncation: a path reaching ``boundary`` counts as infinite.

    Removes, in addition to the free rule, every edge both of whose
    endpoints reach the boundary through edges labeled below it.
    ``method="literal"`` applies the rule edge by edge with searches.
    """
    net, labels = l.network, l.labels
    boundary = frozenset(boundary)
    if method == "literal":
        keep = []
        for e, (u, v, _, _) in enumerate(net.edges):
            if u == v:
                continue
            ru = _lower_reach(net, labels, u, labels[e], e)
            if v in ru:
                continue
            if boundary and not ru.isdisjoint(boundary) and \
                    not _lower_reach(net, labels, v, labels[e], e).isdisjoint(boundary):
                continue
            keep.append(e)
        return SpanningSubgraph(net, frozenset(keep))
    if method != "union-find":
        raise ValueError(f"unknown method {method!r}")
    uf = _UnionFind(net.n)
    wired = [v in boundary for v in range(net.n)]
    keep = []
    for e in sorted(range(net.m), key=labels.__getitem__):
        u, v, _, _ = net.edges[e]
        a, b = uf.find(u), uf.find(v)
        if a == b:
            continue
        if not (wired[a] and wired[b]):
            keep.append(e)
        uf.parent[a] = b
        wired[b] = wired[a] or wired[b]
    return SpanningSubgraph(net, frozenset(keep))


def kruskal_mst(l):
    net, labels = l.network, l.labels
    uf = _UnionFind(net.n)
    keep = [e for e in sorted(range(net.m), key=labels.__getitem__)
            if uf.union(net.edges[e][0], net.edges[e][1])]
    return SpanningSubgraph(net, frozenset(keep))


@dataclass
class InvasionTrace:
    vertices: list
    edges: list

    def subgraph(self, network):
        return SpanningSubgraph(network, frozenset(self.edges))


def invasion(l, start, steps=None):
    """Repeatedly add the smallest-label edge leaving the invaded set."""
    net, labels = l.network, l.labels
    inside = {start}
    verts, edges = [start], []
    heap = [(labels[e], e, w) for (w, _, _, e) in net.adjacency[start] if w != start]
    heapq.heapify(heap)
    while heap and (steps is None or len(edges) < steps):
        _, e, w = heapq.heappop(heap)
        if w in inside:
            continue
        inside.add(w)
        verts.append(w)
        edges.append(e)
        for (y, _, _, f) in net.adjacency[w]:
            if y not in inside:
                heapq.heappush(heap, (labels[f], f, y))
    if steps is not None and len(edges) < steps:
        raise ValueError(f"only {len(edges)} edges reachable from {start}")
    return InvasionTrace(verts, edges)


def msf_degree_stats(s, R, m, seed=0, ball_radius=None):
    """Mean root degree in the wired forest of radius-``R + 1`` truncations.

    Finite samplers use their whole component with no boundary, where the
    wired rule is the minimum spanning tree.
    """
    finite = isinstance(s, FiniteRootSampler)
    if not finite:
        s.require_radius(R + 1)
    degs = []
    hist = {}
    for i in range(m):
        if finite:
            g = s.draw(seed, i)
            boundary = ()
        else:
            ex = s.explore(seed, i)
            g, _ = explore_ball(ex, R + 1)
            dist = g.network.distances_from(g.root)
            boundary = [v for v, d in dist.items() if d == R + 1]
        l = LabeledNetwork.random(g.network, seed, i)
        forest = wmsf_rule(l, boundary)
        degs.append(forest.degree(g.root))
        if ball_radius is not None:
            k = _root_ball_key(forest.subnetwork(), g.root, ball_radius)
            hist[k] = hist.get(k, 0) + 1
    mean, se = mean_and_se(degs)
    rep = {"R": R, "draws": m, "mean": mean, "se": se, "target": 2.0}
    if ball_radius is not None:
        rep["ball_radius"] = ball_radius
        rep["histogram"] = {k.hex(): c for k, c in sorted(hist.items())}
    return rep


def labels_as_floats(l):
    return [label_value(x) for x in l.labels]


__all__ = ["DisconnectedError", "DuplicateLabelError", "SpanningSubgraph", "LabeledNetwork",
           "wilson_ust", "wilson_sampler", "edge_inclusion_oracle", "edge_frequency_check",
           "ust_degree_stats", "fmsf_rule", "wmsf_rule", "kruskal_mst", "invasion",
           "InvasionTrace", "msf_degree_stats", "labels_as_floats", "TruncationError"]
