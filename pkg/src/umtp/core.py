"""Marked rooted multigraphs, balls, and the network JSON format.

Marks are tuples of integers (finite prefixes of Baire-space points).
Real-valued marks (edge lengths, weights) use the reserved leading entry
``REAL_TAG`` followed by a single integer scaled by ``REAL_SCALE``; discrete
payloads are nonnegative, so the two kinds never collide.
"""

import json
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

REAL_TAG = -1
REAL_SCALE = 1 << 32
_INT64_MAX = (1 << 63) - 1

EMPTY_MARK = ()


class TruncationError(ValueError):
    """An operation needed information beyond a network's validity radius."""


class SizeCapExceeded(ValueError):
    pass


class IndeterminateDistance(ValueError):
    """Raised when truncation hides the first disagreement radius.

    ``alpha_lower`` is a certified lower bound on the agreement radius and
    ``distance_upper`` the matching upper bound ``1 / (1 + alpha_lower)``.
    """

    def __init__(self, alpha_lower):
        self.alpha_lower = Fraction(alpha_lower)
        self.distance_upper = 1 / (1 + self.alpha_lower)
        super().__init__(
            f"truncation prevents resolving the distance; "
            f"alpha >= {self.alpha_lower}, distance <= {self.distance_upper}"
        )


# -- marks ------------------------------------------------------------------

def real_mark(x):
    """Encode a real number as a fixed-precision mark."""
    scaled = round(float(x) * REAL_SCALE)
    if abs(scaled) > _INT64_MAX:
        raise ValueError(f"real mark {x!r} overflows the 64-bit scaled range")
    return (REAL_TAG, scaled)


def is_real_mark(m):
    return len(m) == 2 and m[0] == REAL_TAG


def mark_value(m):
    """Exact value of a real mark."""
    if not is_real_mark(m):
        raise ValueError(f"{m!r} is not a real-valued mark")
    return Fraction(m[1], REAL_SCALE)


def mark_float(m):
    return m[1] / REAL_SCALE


def mark_distance(a, b):
    """Metric on marks: ``|a - b|`` for real marks, else ``1/(1 + common prefix)``."""
    if a == b:
        return Fraction(0)
    if is_real_mark(a) and is_real_mark(b):
        return Fraction(abs(a[1] - b[1]), REAL_SCALE)
    if is_real_mark(a) or is_real_mark(b):
        return Fraction(1)
    k = 0
    for x, y in zip(a, b):
        if x != y:
            break
        k += 1
    return Fraction(1, 1 + k)


# -- networks ---------------------------------------------------------------

def _orient(edge):
    u, v, mu, mv = edge
    if (v, mv) < (u, mu):
        return (v, u, mv, mu)
    return (u, v, mu, mv)


@dataclass(frozen=True, eq=True)
class Network:
    """Finite multigraph with vertex marks and two marks per edge.

    ``edges`` holds ``(u, v, mark_at_u, mark_at_v)``; each edge is stored in
    a normalized orientation so ``(u, v, a, b)`` and ``(v, u, b, a)`` compare
    equal.  Loops contribute 2 to the degree.
    """

    vertex_marks: tuple
    edges: tuple

    def __post_init__(self):
        n = len(self.vertex_marks)
        marks = tuple(tuple(m) for m in self.vertex_marks)
        edges = []
        for e in self.edges:
            u, v, mu, mv = e
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"edge {e!r} has an endpoint outside 0..{n - 1}")
            edges.append(_orient((int(u), int(v), tuple(mu), tuple(mv))))
        object.__setattr__(self, "vertex_marks", marks)
        object.__setattr__(self, "edges", tuple(edges))

    @classmethod
    def from_pairs(cls, n, pairs, vertex_marks=None):
        """Build an unmarked (constant-mark) network from endpoint pairs."""
        if vertex_marks is None:
            vertex_marks = (EMPTY_MARK,) * n
        return cls(tuple(vertex_marks),
                   tuple((u, v, EMPTY_MARK, EMPTY_MARK) for u, v in pairs))

    @property
    def n(self):
        return len(self.vertex_marks)

    @property
    def m(self):
        return len(self.edges)

    @cached_property
    def adjacency(self):
        """Per vertex, the half-edges ``(neighbor, mark_here, mark_there, edge_index)``."""
        adj = [[] for _ in range(self.n)]
        for i, (u, v, mu, mv) in enumerate(self.edges):
            adj[u].append((v, mu, mv, i))
            adj[v].append((u, mv, mu, i))
        return tuple(tuple(a) for a in adj)

    @cached_property
    def neighbor_lists(self):
        return tuple(tuple(h[0] for h in a) for a in self.adjacency)

    def degree(self, v):
        return len(self.adjacency[v])

    @cached_property
    def degrees(self):
        return tuple(len(a) for a in self.adjacency)

    def distances_from(self, source, limit=None):
        """BFS distances (dict) from ``source``, optionally cut at ``limit``."""
        dist = {source: 0}
        queue = deque([source])
        nbrs = self.neighbor_lists
        while queue:
            x = queue.popleft()
            d = dist[x]
            if limit is not None and d >= limit:
                continue
            for y in nbrs[x]:
                if y not in dist:
                    dist[y] = d + 1
                    queue.append(y)
        return dist

    def components(self):
        """Connected components as lists of vertices, in order of first vertex."""
        seen = [False] * self.n
        comps = []
        for s in range(self.n):
            if not seen[s]:
                comp = list(self.distances_from(s))
                for x in comp:
                    seen[x] = True
                comps.append(sorted(comp))
        return comps

    def is_connected(self):
        return self.n > 0 and len(self.distances_from(0)) == self.n

    def induced(self, vertices):
        """Induced subnetwork on ``vertices`` (listed order becomes 0..k-1)."""
        index = {x: i for i, x in enumerate(vertices)}
        edges = tuple(
            (index[u], index[v], mu, mv)
            for (u, v, mu, mv) in self.edges
            if u in index and v in index
        )
        return Network(tuple(self.vertex_marks[x] for x in vertices), edges), index


@dataclass(frozen=True)
class RootedNetwork:
    """A network with a root; ``validity_radius`` is None when unbounded.

    Build with :meth:`of` to get the root's component relabeled; the plain
    constructor trusts its input.
    """

    network: Network
    root: int = 0
    validity_radius: object = None

    def __post_init__(self):
        if not 0 <= self.root < self.network.n:
            raise ValueError(f"root {self.root} is not a vertex")
        if self.validity_radius is not None and self.validity_radius < 0:
            raise ValueError("validity radius must be nonnegative")

    @classmethod
    def of(cls, network, root=0, validity_radius=None):
        """Root ``network`` at ``root``, keeping only the root's component."""
        dist = network.distances_from(root)
        if validity_radius is not None and max(dist.values()) > validity_radius:
            raise ValueError("vertices beyond the stated validity radius")
        if len(dist) == network.n:
            return cls(network, root, validity_radius)
        order = sorted(dist, key=lambda x: (dist[x], x))
        sub, index = network.induced(order)
        return cls(sub, index[root], validity_radius)

    @property
    def n(self):
        return self.network.n

    def root_degree(self):
        return self.network.degree(self.root)

    def check_radius(self, r):
        if self.validity_radius is not None and r > self.validity_radius:
            raise TruncationError(
                f"radius {r} exceeds validity radius {self.validity_radius}")

    def explorer(self):
        return NetworkExplorer(self.network, self.root, self.validity_radius)


def _unbounded_min(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


def min_radius(*radii):
    out = None
    for r in radii:
        out = _unbounded_min(out, r)
    return out


def ball(g, r):
    """Induced ball of radius ``r`` around the root, rooted at vertex 0."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    g.check_radius(r)
    dist = g.network.distances_from(g.root, limit=r)
    order = sorted(dist, key=lambda x: (dist[x], x))
    sub, _ = g.network.induced(order)
    return RootedNetwork(sub, 0, r)


# -- explorers --------------------------------------------------------------
#
# An explorer is a (possibly infinite, lazily generated) rooted network.
# It exposes ``root``, ``validity_radius``, ``half_edges(v)`` returning
# ``(w, mark_here, mark_there, edge_id)`` tuples, ``neighbors(v)``,
# ``vertex_mark(v)`` and ``is_tree``.  Vertex ids are any hashable values.

class NetworkExplorer:
    is_tree = False

    def __init__(self, network, root, validity_radius=None):
        self.network = network
        self.root = root
        self.validity_radius = validity_radius
        self.max_degree = max(network.degrees) if network.n else 0

    def half_edges(self, v):
        return self.network.adjacency[v]

    def neighbors(self, v):
        return self.network.neighbor_lists[v]

    def degree(self, v):
        return self.network.degrees[v]

    def vertex_mark(self, v):
        return self.network.vertex_marks[v]

    def distance(self, a, b):
        d = self.network.distances_from(a).get(b)
        if d is None:
            raise ValueError("vertices lie in different components")
        return d


def explore_ball(ex, r, center=None):
    """Materialize the radius-``r`` ball of an explorer around ``center``.

    The caller is responsible for ``dist(root, center) + r`` staying within
    the explorer's validity radius; for the root this is checked here.
    """
    if center is None:
        center = ex.root
        if ex.validity_radius is not None and r > ex.validity_radius:
            raise TruncationError(
                f"radius {r} exceeds validity radius {ex.validity_radius}")
    dist = {center: 0}
    order = [center]
    queue = deque([center])
    while queue:
        x = queue.popleft()
        d = dist[x]
        if d >= r:
            continue
        for h in ex.half_edges(x):
            y = h[0]
            if y not in dist:
                dist[y] = d + 1
                order.append(y)
                queue.append(y)
    index = {x: i for i, x in enumerate(order)}
    seen_edges = set()
    edges = []
    for x in order:
        if ex.is_tree and dist[x] == r:
            # in a tree no edge joins two sphere vertices; skip expansion
            continue
        ix = index[x]
        for (y, mh, mt, eid) in ex.half_edges(x):
            if eid in seen_edges:
                continue
            iy = index.get(y)
            if iy is None:
                continue
            seen_edges.add(eid)
            edges.append((ix, iy, mh, mt))
    net = Network(tuple(ex.vertex_mark(x) for x in order), tuple(edges))
    return RootedNetwork(net, 0, r), order


# -- JSON -------------------------------------------------------------------

def to_json_dict(g):
    """Serialize a RootedNetwork (or a Network, rooted at 0) to the JSON schema."""
    if isinstance(g, Network):
        g = RootedNetwork(g, 0, None)
    net = g.network
    return {
        "vertices": [{"mark": list(m)} for m in net.vertex_marks],
        "edges": [{"u": u, "v": v, "mu": list(mu), "mv": list(mv)}
                  for (u, v, mu, mv) in net.edges],
        "root": g.root,
        "radius": g.validity_radius,
    }


def from_json_dict(data):
    try:
        marks = tuple(tuple(int(x) for x in vx.get("mark", [])) for vx in data["vertices"])
        edges = tuple(
            (int(e["u"]), int(e["v"]),
             tuple(int(x) for x in e.get("mu", [])),
             tuple(int(x) for x in e.get("mv", [])))
            for e in data["edges"]
        )
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed network JSON: missing or bad field {exc}") from exc
    radius = data.get("radius")
    net = Network(marks, edges)
    return RootedNetwork(net, int(data.get("root", 0)),
                         None if radius is None else int(radius))


def dumps(g):
    return json.dumps(to_json_dict(g), separators=(",", ":"))


def loads(text):
    return from_json_dict(json.loads(text))
