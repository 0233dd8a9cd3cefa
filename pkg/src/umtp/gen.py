"""Seeded generators of probability measures on rooted networks.

Every sampler exposes two views of draw ``index`` under ``seed``:

* ``explore(seed, index)`` -- a lazily generated (possibly infinite) rooted
  network, used by walks and percolation that only touch a small region;
* ``draw(seed, index)`` -- the materialized ball of radius
  ``truncation_radius`` as a :class:`~umtp.core.RootedNetwork`.

Both are pure functions of ``(seed, index)``.
"""

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .core import (EMPTY_MARK, Network, NetworkExplorer, RootedNetwork,
                   TruncationError, explore_ball, real_mark)


class UnboundedSupportError(ValueError):
    pass


# -- offspring laws ---------------------------------------------------------

class OffspringDistribution:
    """Finitely supported law on ``{0, 1, 2, ...}`` with exact rational weights."""

    def __init__(self, probs):
        items = {}
        for k, p in dict(probs).items():
            k = int(k)
            p = Fraction(str(p)) if isinstance(p, float) else Fraction(p)
            if k < 0 or p < 0:
                raise ValueError(f"invalid offspring entry {k}: {p}")
            if p:
                items[k] = items.get(k, 0) + p
        if sum(items.values()) != 1:
            raise ValueError(f"offspring probabilities sum to {sum(items.values())}, not 1")
        self.probs = dict(sorted(items.items()))
        self._ks = np.array(list(self.probs), dtype=np.int64)
        self._cdf = np.cumsum([float(p) for p in self.probs.values()])
        self._cdf[-1] = 1.0

    @classmethod
    def parse(cls, text):
        """Parse ``"0:0.2,1:0.3,2:0.5"``."""
        probs = {}
        try:
            for part in text.split(","):
                k, p = part.split(":")
                probs[int(k)] = Fraction(p.strip())
        except ValueError as exc:
            raise ValueError(f"cannot parse offspring law {text!r}") from exc
        return cls(probs)

    @classmethod
    def delta(cls, k):
        return cls({k: 1})

    def __repr__(self):
        return f"OffspringDistribution({self.spec()})"

    def spec(self):
        return ",".join(f"{k}:{p}" for k, p in self.probs.items())

    def __eq__(self, other):
        return isinstance(other, OffspringDistribution) and self.probs == other.probs

    @property
    def max_k(self):
        return max(self.probs)

    @property
    def min_k(self):
        return min(self.probs)

    def mean(self):
        return sum(k * p for k, p in self.probs.items())

    def ugw_mean_degree(self):
        """Expected root degree of the unimodular Galton-Watson measure."""
        return 1 / sum(p / (k + 1) for k, p in self.probs.items())

    def ball_law(self):
        """Per-vertex ball counts ``r_k`` whose configuration model has this offspring law."""
        c = sum(p / (k + 1) for k, p in self.probs.items())
        return {k + 1: p / (k + 1) / c for k, p in self.probs.items()}

    def sample(self, gen, size):
        u = gen.random(size)
        return self._ks[np.searchsorted(self._cdf, u, side="right").clip(max=len(self._ks) - 1)]


# -- base sampler -----------------------------------------------------------

class RootedSampler:
    """A seeded measure on rooted networks.

    ``truncation_radius`` is None for finite networks (no truncation) and
    ``max_degree`` bounds every degree that can occur (None if unbounded).
    """

    truncation_radius = None
    max_degree = None
    infinite = False

    def descriptor(self):
        raise NotImplementedError

    def explore(self, seed, index):
        raise NotImplementedError

    def draw(self, seed, index):
        ex = self.explore(seed, index)
        if self.truncation_radius is None:
            g, _ = explore_ball(ex, _finite_radius_cap(ex))
            return RootedNetwork(g.network, 0, None)
        g, _ = explore_ball(ex, self.truncation_radius)
        return g

    def draws(self, seed, n, start=0):
        for i in range(start, start + n):
            yield self.draw(seed, i)

    def require_radius(self, r):
        if self.truncation_radius is not None and r > self.truncation_radius:
            raise TruncationError(
                f"requested radius {r} exceeds sampler truncation {self.truncation_radius}")


def _finite_radius_cap(ex):
    net = getattr(ex, "network", None)
    if net is None:
        raise TruncationError("untruncated draw from an infinite explorer")
    return net.n


# -- finite networks --------------------------------------------------------

class FiniteRootSampler(RootedSampler):
    """Root a fixed finite network at a random vertex drawn from ``weights``."""

    def __init__(self, network, weights=None, name="uniform"):
        if network.n == 0:
            raise ValueError("empty network")
        self.network = network
        self.name = name
        if weights is None:
            self.weights = None
        else:
            w = [Fraction(x) if not isinstance(x, float) else Fraction(str(x)) for x in weights]
            if len(w) != network.n or any(x < 0 for x in w):
                raise ValueError("weights must be nonnegative, one per vertex")
            if sum(w) == 0:
                raise ValueError("all-zero weights")
            self.weights = w
            cdf = np.cumsum([float(x) for x in w])
            self._cdf = cdf / cdf[-1]
        self.max_degree = max(network.degrees)
        self._rooted = {}

    def descriptor(self):
        d = {"sampler": self.name, "n": self.network.n, "m": self.network.m}
        if self.weights is not None:
            d["weights"] = [str(x) for x in self.weights]
        return d

    def root_for(self, seed, index):
        gen = rng.stream(seed, index, rng.ROOT)
        if self.weights is None:
            return int(gen.integers(self.network.n))
        return int(np.searchsorted(self._cdf, gen.random(), side="right").clip(max=self.network.n - 1))

    def root_law(self):
        """Exact probability of each root vertex."""
        if self.weights is None:
            return [Fraction(1, self.network.n)] * self.network.n
        total = sum(self.weights)
        return [w / total for w in self.weights]

    def rooted(self, root):
        g = self._rooted.get(root)
        if g is None:
            g = self._rooted[root] = RootedNetwork.of(self.network, root)
        return g

    def explore(self, seed, index):
        return NetworkExplorer(self.network, self.root_for(seed, index))

    def draw(self, seed, index):
        return self.rooted(self.root_for(seed, index))


def uniform_root(g):
    """Uniformly rooted finite network."""
    return FiniteRootSampler(g)


def biased_root_sampler(g, weights):
    """Root at ``x`` with probability proportional to ``weights[x]``."""
    return FiniteRootSampler(g, weights, name="biased")


# -- lazily generated trees -------------------------------------------------

class LazyTree:
    """Rooted tree generated on demand; vertex 0 is the root.

    The edge to a vertex's parent is identified by the vertex id.
    """

    is_tree = True

    def __init__(self, validity_radius=None):
        self.root = 0
        self.validity_radius = validity_radius
        self.parent = [-1]
        self.depth = [0]
        self._kids = [None]
        self._lengths = [None]

    def _new_child(self, v):
        self.parent.append(v)
        self.depth.append(self.depth[v] + 1)
        self._kids.append(None)
        self._lengths.append(None)
        return len(self.parent) - 1

    def _expand(self, v):
        raise NotImplementedError

    def children(self, v):
        kids = self._kids[v]
        if kids is None:
            kids = self._kids[v] = self._expand(v)
        return kids

    def neighbors(self, v):
        kids = self.children(v)
        p = self.parent[v]
        return kids if p < 0 else [p] + kids

    def degree(self, v):
        return len(self.neighbors(v))

    def vertex_mark(self, v):
        return EMPTY_MARK

    def _edge_mark(self, child):
        return EMPTY_MARK

    def half_edges(self, v):
        out = []
        p = self.parent[v]
        if p >= 0:
            m = self._edge_mark(v)
            out.append((p, m, m, v))
        for c in self.children(v):
            m = self._edge_mark(c)
            out.append((c, m, m, c))
        return out

    def up(self, v):
        p = self.parent[v]
        return None if p < 0 else p

    def distance_from_root(self, v):
        return self.depth[v]

    def distance(self, a, b):
        d = 0
        while a != b:
            if self.depth[a] >= self.depth[b]:
                a = self.parent[a]
            else:
                b = self.parent[b]
            d += 1
        return d


class GaltonWatsonTree(LazyTree):
    """Galton-Watson tree whose root has ``root_children`` offspring."""

    _BLOCK = 256

    def __init__(self, offspring, gen, root_children, validity_radius=None):
        super().__init__(validity_radius)
        self.offspring = offspring
        self.gen = gen
        self._buf = []
        self._pos = 0
        self._root_children = int(root_children)

    def _count(self):
        if self._pos >= len(self._buf):
            self._buf = self.offspring.sample(self.gen, self._BLOCK).tolist()
            self._pos = 0
        k = self._buf[self._pos]
        self._pos += 1
        return k

    def _expand(self, v):
        k = self._root_children if v == 0 else self._count()
        return [self._new_child(v) for _ in range(k)]


class AGWSampler(RootedSampler):
    """Two independent Galton-Watson trees joined by an edge between their roots."""

    infinite = True
    name = "agw"

    def __init__(self, offspring, radius):
        if radius < 1:
            raise ValueError("radius must be >= 1")
        self.offspring = offspring
        self.truncation_radius = int(radius)
        self.max_degree = offspring.max_k + 1

    def descriptor(self):
        return {"sampler": self.name, "p": self.offspring.spec(), "radius": self.truncation_radius}

    def _root_count(self, gen, seed, index):
        return int(self.offspring.sample(gen, 1)[0])

    def explore(self, seed, index):
        gen = rng.stream(seed, index, rng.STRUCTURE)
        k = self._root_count(gen, seed, index)
        # the second tree's root is one extra child of the first root
        return GaltonWatsonTree(self.offspring, gen, k + 1, self.truncation_radius)


class UGWSampler(AGWSampler):
    """AGW reweighted by ``1/deg(root)``, by rejection against the least degree."""

    name = "ugw"

    def __init__(self, offspring, radius):
        super().__init__(offspring, radius)

    def _root_count(self, gen, seed, index):
        dmin = self.offspring.min_k + 1
        acc = rng.stream(seed, index, rng.REJECT)
        while True:
            k = int(self.offspring.sample(gen, 1)[0])
            if acc.random() * (k + 1) < dmin:
                return k


def agw_sampler(p, radius):
    return AGWSampler(p, radius)


def ugw_sampler(p, radius):
    if not isinstance(p, OffspringDistribution):
        raise UnboundedSupportError("UGW rejection needs a finitely supported offspring law")
    return UGWSampler(p, radius)


# -- canopy tree ------------------------------------------------------------

class CanopyTree:
    """The canopy tree seen from a vertex at ``level``.

    Vertices are ``(level, index)``; ``(l, i)`` has parent ``(l + 1, i // 2)``
    and, for ``l >= 1``, children ``(l - 1, 2i)`` and ``(l - 1, 2i + 1)``.
    """

    is_tree = True

    def __init__(self, level, validity_radius=None):
        self.root = (int(level), 0)
        self.validity_radius = validity_radius

    @staticmethod
    def neighbors(v):
        l, i = v
        up = (l + 1, i >> 1)
        if l == 0:
            return [up]
        return [up, (l - 1, 2 * i), (l - 1, 2 * i + 1)]

    def degree(self, v):
        return 1 if v[0] == 0 else 3

    def vertex_mark(self, v):
        return EMPTY_MARK

    def half_edges(self, v):
        l, i = v
        out = [((l + 1, i >> 1), EMPTY_MARK, EMPTY_MARK, v)]
        if l:
            for c in ((l - 1, 2 * i), (l - 1, 2 * i + 1)):
                out.append((c, EMPTY_MARK, EMPTY_MARK, c))
        return out

    def up(self, v):
        return (v[0] + 1, v[1] >> 1)

    def distance(self, a, b):
        (la, ia), (lb, ib) = a, b
        d = 0
        while la < lb:
            la, ia, d = la + 1, ia >> 1, d + 1
        while lb < la:
            lb, ib, d = lb + 1, ib >> 1, d + 1
        while ia != ib:
            ia, ib, d = ia >> 1, ib >> 1, d + 2
        return d

    def distance_from_root(self, v):
        return self.distance(self.root, v)


class CanopySampler(RootedSampler):
    """Canopy tree rooted at level ``n`` with probability ``2^-(n+1)``."""

    infinite = True
    max_degree = 3

    def __init__(self, radius):
        if radius < 1:
            raise ValueError("radius must be >= 1")
        self.truncation_radius = int(radius)

    def descriptor(self):
        return {"sampler": "canopy", "radius": self.truncation_radius}

    def level(self, seed, index):
        return int(rng.stream(seed, index, rng.STRUCTURE).geometric(0.5)) - 1

    def explore(self, seed, index):
        return CanopyTree(self.level(seed, index), self.truncation_radius)


def canopy_sampler(radius):
    return CanopySampler(radius)


# -- the line Z -------------------------------------------------------------

class LineGraph:
    is_tree = True

    def __init__(self, validity_radius=None):
        self.root = 0
        self.validity_radius = validity_radius

    @staticmethod
    def neighbors(v):
        return [v - 1, v + 1]

    def degree(self, v):
        return 2

    def vertex_mark(self, v):
        return EMPTY_MARK

    def half_edges(self, v):
        return [(v - 1, EMPTY_MARK, EMPTY_MARK, v - 1), (v + 1, EMPTY_MARK, EMPTY_MARK, v)]

    def distance(self, a, b):
        return abs(a - b)

    def distance_from_root(self, v):
        return abs(v)


class LineSampler(RootedSampler):
    """The (deterministic) integer line rooted at 0."""

    infinite = True
    max_degree = 2

    def __init__(self, radius):
        self.truncation_radius = int(radius)

    def descriptor(self):
        return {"sampler": "line", "radius": self.truncation_radius}

    def explore(self, seed, index):
        return LineGraph(self.truncation_radius)


def line_sampler(radius):
    return LineSampler(radius)


# -- configuration model ----------------------------------------------------

def config_model(n, p, seed):
    """Fixed-degree-distribution multigraph whose local limit is UGW(p).

    Each vertex independently receives ``k`` balls with probability ``r_k``;
    balls are paired uniformly at random and an odd leftover ball is dropped.
    Loops and multiple edges are kept.
    """
    if n < 2:
        raise ValueError("config_model needs n >= 2")
    law = p.ball_law()
    if any(v < 0 for v in law.values()) or sum(law.values()) != 1:
        raise ValueError(f"invalid ball-count law {law}")
    gen = rng.stream(seed, 0, rng.STRUCTURE)
    ks = np.array(list(law), dtype=np.int64)
    cdf = np.cumsum([float(v) for v in law.values()])
    cdf[-1] = 1.0
    counts = ks[np.searchsorted(cdf, gen.random(n), side="right").clip(max=len(ks) - 1)]
    balls = np.repeat(np.arange(n, dtype=np.int64), counts)
    gen.shuffle(balls)
    if len(balls) % 2:
        balls = balls[:-1]
    pairs = balls.reshape(-1, 2)
    return Network.from_pairs(n, pairs.tolist())


# -- products ---------------------------------------------------------------

class ProductExplorer:
    is_tree = False

    def __init__(self, a, b, validity_radius):
        self.a, self.b = a, b
        self.root = (a.root, b.root)
        self.validity_radius = validity_radius

    def half_edges(self, v):
        x, y = v
        out = []
        for (w, mh, mt, eid) in self.a.half_edges(x):
            out.append(((w, y), mh, mt, (0, eid, y)))
        for (w, mh, mt, eid) in self.b.half_edges(y):
            out.append(((x, w), mh, mt, (1, x, eid)))
        return out

    def neighbors(self, v):
        x, y = v
        return [(w, y) for w in self.a.neighbors(x)] + [(x, w) for w in self.b.neighbors(y)]

    def degree(self, v):
        return len(self.neighbors(v))

    def vertex_mark(self, v):
        ma, mb = self.a.vertex_mark(v[0]), self.b.vertex_mark(v[1])
        if not ma and not mb:
            return EMPTY_MARK
        return (len(ma),) + tuple(ma) + tuple(mb)

    def distance(self, u, v):
        return self.a.distance(u[0], v[0]) + self.b.distance(u[1], v[1])

    def distance_from_root(self, v):
        return self.distance(self.root, v)


class ProductSampler(RootedSampler):
    """Independent draws joined by the Cartesian product, rooted at the root pair."""

    def __init__(self, a, b):
        self.a, self.b = a, b
        self.truncation_radius = _min_radius(a.truncation_radius, b.truncation_radius)
        self.max_degree = None if a.max_degree is None or b.max_degree is None \
            else a.max_degree + b.max_degree
        self.infinite = a.infinite or b.infinite

    def descriptor(self):
        return {"sampler": "product", "a": self.a.descriptor(), "b": self.b.descriptor()}

    def explore(self, seed, index):
        ea = self.a.explore(rng.derive_seed(seed, 1), index)
        eb = self.b.explore(rng.derive_seed(seed, 2), index)
        return ProductExplorer(ea, eb, self.truncation_radius)

    def draw(self, seed, index):
        if self.truncation_radius is None:
            # product of two finite networks
            ga = self.a.draw(rng.derive_seed(seed, 1), index)
            gb = self.b.draw(rng.derive_seed(seed, 2), index)
            ex = ProductExplorer(ga.explorer(), gb.explorer(), None)
            g, _ = explore_ball(ex, ga.n + gb.n)
            return RootedNetwork(g.network, 0, None)
        return super().draw(seed, index)


def _min_radius(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def cartesian_product(a, b):
    return ProductSampler(a, b)


# -- edge replacement -------------------------------------------------------

@dataclass(frozen=True)
class TwoPointed:
    """A finite graph with distinguished vertices ``x`` and ``y`` (``x != y``)."""

    n: int
    edges: tuple
    x: int = 0
    y: int = 1
    vertex_marks: tuple = field(default=None)

    def __post_init__(self):
        if self.n < 2 or self.x == self.y:
            raise ValueError("a two-pointed graph needs two distinct points")
        if self.vertex_marks is None:
            object.__setattr__(self, "vertex_marks", (EMPTY_MARK,) * self.n)

    @classmethod
    def single_edge(cls):
        return cls(2, ((0, 1, EMPTY_MARK, EMPTY_MARK),))

    @classmethod
    def path(cls, internal):
        """Path from x=0 to y=1 through ``internal`` new vertices 2, 3, ..."""
        seq = [0] + list(range(2, 2 + internal)) + [1]
        edges = tuple((a, b, EMPTY_MARK, EMPTY_MARK) for a, b in zip(seq, seq[1:]))
        return cls(2 + internal, edges)

    def internal(self):
        return [v for v in range(self.n) if v not in (self.x, self.y)]


class EdgeReplaceExplorer:
    is_tree = False

    def __init__(self, base, gadget_for, validity_radius, root):
        self.base = base
        self.gadget_for = gadget_for
        self.validity_radius = validity_radius
        self.root = root
        self._info = {}

    def _gadget(self, v, w, mh, mt, eid):
        info = self._info.get(eid)
        if info is None:
            info = self._info[eid] = (v, w, self.gadget_for(mh, mt))
        return info

    def _map(self, eid, info, j):
        tail, head, gad = info
        if j == gad.x:
            return ("o", tail)
        if j == gad.y:
            return ("o", head)
        return ("i", eid, j)

    def incident_gadgets(self, v):
        """Distinct base edges at base vertex ``v`` with their gadget info."""
        seen = {}
        for (w, mh, mt, eid) in self.base.half_edges(v):
            if eid not in seen:
                seen[eid] = self._gadget(v, w, mh, mt, eid)
        return seen

    def half_edges(self, v):
        out = []
        if v[0] == "o":
            for eid, info in self.incident_gadgets(v[1]).items():
                gad = info[2]
                for k, (a, b, ma, mb) in enumerate(gad.edges):
                    pa, pb = self._map(eid, info, a), self._map(eid, info, b)
                    if pa == v:
                        out.append((pb, ma, mb, ("e", eid, k)))
                    if pb == v:
                        out.append((pa, mb, ma, ("e", eid, k)))
        else:
            _, eid, j = v
            info = self._info[eid]
            for k, (a, b, ma, mb) in enumerate(info[2].edges):
                if a == j:
                    out.append((self._map(eid, info, b), ma, mb, ("e", eid, k)))
                if b == j:
                    out.append((self._map(eid, info, a), mb, ma, ("e", eid, k)))
        return out

    def neighbors(self, v):
        return [h[0] for h in self.half_edges(v)]

    def degree(self, v):
        return len(self.half_edges(v))

    def vertex_mark(self, v):
        if v[0] == "o":
            return self.base.vertex_mark(v[1])
        return self._info[v[1]][2].vertex_marks[v[2]]


class EdgeReplaceSampler(RootedSampler):
    """Replace every edge by a two-pointed gadget and re-root unimodularly.

    The base draw is biased by ``A = 2 + sum_{e ~ o} (|V(L(e))| - 2)``
    (rejection against ``a_max``); the new root is uniform among the ``A``
    slots made of the gadget-internal vertices next to ``o`` plus two copies
    of ``o`` itself.
    """

    def __init__(self, base, gadgets, radius, max_vertices=None):
        self.base = base
        if isinstance(gadgets, dict):
            table = dict(gadgets)
            default = table.pop(None, None)

            def lookup(mh, mt):
                g = table.get((mh, mt), default)
                if g is None:
                    raise KeyError(f"no gadget for marks {(mh, mt)}")
                return g

            self.gadget_for = lookup
            sizes = [g.n for g in gadgets.values()]
            max_vertices = max(sizes) if max_vertices is None else max_vertices
        else:
            self.gadget_for = gadgets
        if max_vertices is None or base.max_degree is None:
            raise UnboundedSupportError("edge replacement needs bounded degrees and gadget sizes")
        self.a_max = 2 + base.max_degree * (max_vertices - 2)
        self.truncation_radius = int(radius)
        self.max_degree = None
        self.infinite = base.infinite

    def descriptor(self):
        return {"sampler": "edge-replace", "base": self.base.descriptor(),
                "radius": self.truncation_radius, "a_max": self.a_max}

    def explore(self, seed, index):
        sub = rng.derive_seed(seed, index)
        acc = rng.stream(seed, index, rng.REJECT)
        attempt = 0
        while True:
            bex = self.base.explore(sub, attempt)
            attempt += 1
            ex = EdgeReplaceExplorer(bex, self.gadget_for, self.truncation_radius, None)
            o = bex.root
            slots = []
            for eid, info in ex.incident_gadgets(o).items():
                for j in info[2].internal():
                    slots.append(("i", eid, j))
            a = 2 + len(slots)
            if a > self.a_max:
                raise ValueError(f"bias {a} exceeds the declared bound {self.a_max}")
            if acc.random() * self.a_max >= a:
                continue
            u = int(acc.integers(a))
            ex.root = slots[u] if u < len(slots) else ("o", o)
            return ex


def edge_replace(s, gadgets, radius, max_vertices=None):
    return EdgeReplaceSampler(s, gadgets, radius, max_vertices)


# -- universal cover --------------------------------------------------------

def universal_cover(g, radius):
    """Radius-``radius`` ball of the universal cover (non-backtracking paths).

    Cover vertices are non-backtracking walks from the root; a walk may not
    leave through the half-edge it arrived on.  Marks are lifted.
    """
    g.check_radius(radius)
    net = g.network
    # half-edges at v: (neighbor, mark_here, mark_there, edge, side)
    halves = [[] for _ in range(net.n)]
    for i, (u, v, mu, mv) in enumerate(net.edges):
        halves[u].append((v, mu, mv, i, 0))
        halves[v].append((u, mv, mu, i, 1))
    marks = [net.vertex_marks[g.root]]
    edges = []
    frontier = [(0, g.root, None)]  # (cover id, base vertex, forbidden half-edge)
    for _ in range(radius):
        nxt = []
        for (cid, bv, forbidden) in frontier:
            for (w, mh, mt, i, side) in halves[bv]:
                if (i, side) == forbidden:
                    continue
                new = len(marks)
                marks.append(net.vertex_marks[w])
                edges.append((cid, new, mh, mt))
                nxt.append((new, w, (i, 1 - side)))
        frontier = nxt
    return RootedNetwork(Network(tuple(marks), tuple(edges)), 0, radius)


# -- Poisson weighted infinite tree ------------------------------------------

@dataclass(frozen=True)
class PwitConfig:
    """Piecewise-linear mean function (grid ``ts`` -> ``values``), cutoff and depth."""

    ts: tuple
    values: tuple
    cutoff: int
    radius: int

    def __post_init__(self):
        if len(self.ts) != len(self.values) or len(self.ts) < 2:
            raise ValueError("mean function needs at least two grid points")
        if self.ts[0] != 0 or self.values[0] != 0:
            raise ValueError("mean function must start at (0, 0)")
        if any(b <= a for a, b in zip(self.ts, self.ts[1:])) or \
                any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("mean function must be strictly increasing on its grid")
        if self.cutoff < 0 or self.radius < 1:
            raise ValueError("cutoff must be >= 0 and radius >= 1")

    @classmethod
    def identity(cls, cutoff, radius):
        return cls((0.0, 1.0), (0.0, 1.0), cutoff, radius)

    def mean(self, t):
        ts, vs = np.asarray(self.ts, float), np.asarray(self.values, float)
        slope = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
        t = np.asarray(t, float)
        return np.where(t <= ts[-1], np.interp(t, ts, vs), vs[-1] + slope * (t - ts[-1]))

    def inverse(self, y):
        ts, vs = np.asarray(self.ts, float), np.asarray(self.values, float)
        slope = (vs[-1] - vs[-2]) / (ts[-1] - ts[-2])
        y = np.asarray(y, float)
        return np.where(y <= vs[-1], np.interp(y, vs, ts), ts[-1] + (y - vs[-1]) / slope)


class PwitTree(LazyTree):
    def __init__(self, cfg, gen):
        super().__init__(cfg.radius)
        self.cfg = cfg
        self.gen = gen

    def _expand(self, v):
        k = self.cfg.cutoff
        if k == 0:
            return []
        arrivals = np.cumsum(self.gen.exponential(1.0, k))
        lengths = self.cfg.inverse(arrivals)
        out = []
        for length in lengths.tolist():
            c = self._new_child(v)
            self._lengths[c] = real_mark(length)
            out.append(c)
        return out

    def _edge_mark(self, child):
        return self._lengths[child]


class PwitSampler(RootedSampler):
    infinite = True

    def __init__(self, cfg):
        self.cfg = cfg
        self.truncation_radius = cfg.radius
        self.max_degree = cfg.cutoff + 1

    def descriptor(self):
        return {"sampler": "pwit", "ts": list(self.cfg.ts), "values": list(self.cfg.values),
                "cutoff": self.cfg.cutoff, "radius": self.cfg.radius}

    def explore(self, seed, index):
        return PwitTree(self.cfg, rng.stream(seed, index, rng.STRUCTURE))


def pwit_sampler(cfg):
    return PwitSampler(cfg)


# -- named small networks ---------------------------------------------------

def path_graph(n):
    return Network.from_pairs(n, [(i, i + 1) for i in range(n - 1)])


def cycle_graph(n):
    return Network.from_pairs(n, [(i, (i + 1) % n) for i in range(n)])


def star_graph(leaves):
    return Network.from_pairs(leaves + 1, [(0, i) for i in range(1, leaves + 1)])


def complete_graph(n):
    return Network.from_pairs(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def random_connected_graph(n, extra_edges, gen, multigraph=False):
    """Random spanning tree (random attachment) plus ``extra_edges`` random edges."""
    pairs = []
    for v in range(1, n):
        pairs.append((int(gen.integers(v)), v))
    have = {tuple(sorted(p)) for p in pairs}
    tries = 0
    while extra_edges > 0 and tries < 100 * (extra_edges + 1):
        tries += 1
        u, v = (int(x) for x in gen.integers(n, size=2))
        if not multigraph and (u == v or tuple(sorted((u, v))) in have):
            continue
        have.add(tuple(sorted((u, v))))
        pairs.append((u, v))
        extra_edges -= 1
    perm = gen.permutation(n).tolist()
    return Network.from_pairs(n, [(perm[u], perm[v]) for u, v in pairs])
