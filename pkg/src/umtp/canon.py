"""Canonical forms, the local rooted metric, and automorphism orbits.

Colour refinement drives everything here.  A colouring is a list of integer
ranks; one refinement round replaces each vertex's colour by the rank of its
signature ``(colour, sorted (neighbour colour, mark here, mark there))``.
Ranks come from sorting signatures, so the result never depends on vertex
labels, and the sequence of sorted signature lists (the *trace*) certifies
that two graphs were refined identically.
"""

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction

from .core import (IndeterminateDistance, Network, RootedNetwork,
                   SizeCapExceeded, ball, mark_distance)

DEFAULT_ORBIT_CAP = 16


@dataclass(frozen=True)
class CanonicalKey:
    bytes: bytes

    def hex(self):
        return self.bytes.hex()

    @classmethod
    def fromhex(cls, text):
        return cls(bytes.fromhex(text))

    def __lt__(self, other):
        return self.bytes < other.bytes


@dataclass(frozen=True)
class OrbitReport:
    orbits: tuple
    stabilizer_order: dict
    automorphism_count: int

    def orbit_of(self, x):
        for orb in self.orbits:
            if x in orb:
                return orb
        raise KeyError(x)


# -- refinement -------------------------------------------------------------

def _rank(sigs):
    distinct = sorted(set(sigs))
    index = {s: i for i, s in enumerate(distinct)}
    return [index[s] for s in sigs], distinct


def refine(adj, colors):
    """Refine ``colors`` to the coarsest equitable colouring below it.

    ``adj[v]`` lists ``(w, mark_here, mark_there, ...)`` half-edges.
    Returns ``(colors, trace)``.
    """
    colors = list(colors)
    ncolors = len(set(colors))
    trace = []
    while True:
        sigs = [
            (colors[v], tuple(sorted((colors[h[0]], h[1], h[2]) for h in adj[v])))
            for v in range(len(adj))
        ]
        new, distinct = _rank(sigs)
        trace.append(tuple(distinct))
        colors = new
        if len(distinct) == ncolors:
            return colors, tuple(trace)
        ncolors = len(distinct)


def _individualize(colors, v):
    doubled = [2 * c + 1 for c in colors]
    doubled[v] -= 1
    return _rank(doubled)[0]


def _target_cell(colors):
    """Members of the lowest-coloured non-singleton cell, or None."""
    cells = {}
    for v, c in enumerate(colors):
        cells.setdefault(c, []).append(v)
    for c in sorted(cells):
        if len(cells[c]) > 1:
            return cells[c]
    return None


def _certificate(network, colors):
    """The network relabelled by a discrete colouring, as comparable tuples."""
    marks = [None] * network.n
    for v, c in enumerate(colors):
        marks[c] = network.vertex_marks[v]
    edges = []
    for (u, v, mu, mv) in network.edges:
        a, b = colors[u], colors[v]
        if a == b:
            edges.append((a, a) + tuple(sorted((mu, mv))))
        elif a < b:
            edges.append((a, b, mu, mv))
        else:
            edges.append((b, a, mv, mu))
    edges.sort()
    return tuple(marks), tuple(edges)


def _relabel(network, position):
    marks = [None] * network.n
    for v, p in enumerate(position):
        marks[p] = network.vertex_marks[v]
    edges = tuple((position[u], position[v], mu, mv) for (u, v, mu, mv) in network.edges)
    return Network(tuple(marks), edges)


def _encode(cert):
    marks, edges = cert
    payload = [[list(m) for m in marks],
               [[a, b, list(x), list(y)] for (a, b, x, y) in edges]]
    return json.dumps(payload, separators=(",", ":")).encode()


# -- canonical form ---------------------------------------------------------

def _tree_labeling(network, root):
    """Canonical positions for a tree: preorder with children sorted by code."""
    adj = network.adjacency
    parent = {root: None}
    order = [root]
    for x in order:
        for (y, _, _, _) in adj[x]:
            if y not in parent:
                parent[y] = x
                order.append(y)
    code = {}
    children = {}
    for x in reversed(order):
        entries = []
        for (y, mh, mt, _) in adj[x]:
            if parent.get(y) == x and y != parent[x]:
                entries.append(((mh, mt, code[y]), y))
        entries.sort(key=lambda t: t[0])
        children[x] = [y for _, y in entries]
        code[x] = (network.vertex_marks[x], tuple(e for e, _ in entries))
    position = [0] * network.n
    stack = [root]
    k = 0
    while stack:
        x = stack.pop()
        position[x] = k
        k += 1
        stack.extend(reversed(children[x]))
    return position


def _general_labeling(network, root):
    adj = network.adjacency
    init = [(0 if v == root else 1, network.vertex_marks[v]) for v in range(network.n)]
    colors0 = _rank(init)[0]
    best = [None, None]  # certificate, colouring
    autos = []

    def search(colors, fixed):
        colors, _ = refine(adj, colors)
        cell = _target_cell(colors)
        if cell is None:
            cert = _certificate(network, colors)
            if best[0] is None or cert < best[0]:
                best[0], best[1] = cert, colors
            elif cert == best[0]:
                inv = [0] * len(colors)
                for u, c in enumerate(best[1]):
                    inv[c] = u
                autos.append([inv[c] for c in colors])
            return
        tried = []
        for v in cell:
            if tried and _same_orbit(v, tried, autos, fixed):
                continue
            search(_individualize(colors, v), fixed + [v])
            tried.append(v)

    search(colors0, [root])
    return list(best[1])


def _same_orbit(v, tried, autos, fixed):
    gens = [g for g in autos if all(g[s] == s for s in fixed)]
    if not gens:
        return False
    parent = {}

    def find(x):
        while parent.get(x, x) != x:
            x = parent[x]
        return x

    for g in gens:
        for x, y in enumerate(g):
            if x != y:
                rx, ry = find(x), find(y)
                if rx != ry:
                    parent[rx] = ry
    rv = find(v)
    return any(find(t) == rv for t in tried)


def canonical_form(g):
    """Return ``(CanonicalKey, relabelled RootedNetwork)`` with root at 0.

    Trees are labelled by sorted-subtree codes; other networks by refinement
    with individualisation, keeping the least certificate over the search
    tree (branches equivalent under automorphisms already found are pruned).
    """
    net = g.network
    if net.m == net.n - 1:
        position = _tree_labeling(net, g.root)
    else:
        position = _general_labeling(net, g.root)
    relabelled = _relabel(net, position)
    cert = _certificate(relabelled, list(range(net.n)))
    return CanonicalKey(_encode(cert)), RootedNetwork(relabelled, 0, g.validity_radius)


def canonical_key(g):
    return canonical_form(g)[0]


# -- isomorphism with mark tolerance ---------------------------------------

def _edge_bundle(net, u, v):
    """Edge-mark pairs between u and v, oriented from u."""
    out = []
    for (w, mh, mt, _) in net.adjacency[u]:
        if w == v:
            out.append((mh, mt))
    return out


def _bundles_match(b1, b2, tol):
    if len(b1) != len(b2):
        return False
    if not b1:
        return True
    if len(b1) > 7:
        # exact comparison only; tolerance matching of huge bundles is not needed here
        return sorted(b1) == sorted(b2) if tol == 0 else _greedy_bundle(b1, b2, tol)
    for perm in itertools.permutations(range(len(b2))):
        if all(mark_distance(b1[i][0], b2[j][0]) <= tol and
               mark_distance(b1[i][1], b2[j][1]) <= tol
               for i, j in enumerate(perm)):
            return True
    return False


def _greedy_bundle(b1, b2, tol):
    pool = list(b2)
    for a in sorted(b1):
        for k, b in enumerate(pool):
            if mark_distance(a[0], b[0]) <= tol and mark_distance(a[1], b[1]) <= tol:
                del pool[k]
                break
        else:
            return False
    return True


def rooted_isomorphic_within(g1, g2, tol):
    """Is there a rooted isomorphism with every mark distance ``<= tol``?"""
    n1, n2 = g1.network, g2.network
    if n1.n != n2.n or n1.m != n2.m:
        return False
    d1 = n1.distances_from(g1.root)
    d2 = n2.distances_from(g2.root)
    order = sorted(d1, key=lambda x: (d1[x], x))
    by_layer = {}
    for w, d in d2.items():
        by_layer.setdefault((d, n2.degree(w)), []).append(w)
    phi = {}
    used = set()

    def consistent(v, w):
        if mark_distance(n1.vertex_marks[v], n2.vertex_marks[w]) > tol:
            return False
        if not _bundles_match(_edge_bundle(n1, v, v), _edge_bundle(n2, w, w), tol):
            return False
        for (u, _, _, _) in n1.adjacency[v]:
            if u in phi and u != v:
                if not _bundles_match(_edge_bundle(n1, v, u),
                                      _edge_bundle(n2, w, phi[u]), tol):
                    return False
        # mapped neighbours of w must come from mapped neighbours of v
        inv = {b: a for a, b in phi.items()}
        for (x, _, _, _) in n2.adjacency[w]:
            if x in inv and x != w:
                if not _edge_bundle(n1, v, inv[x]):
                    return False
        return True

    def extend(i):
        if i == len(order):
            return True
        v = order[i]
        for w in by_layer.get((d1[v], n1.degree(v)), ()):
            if w in used:
                continue
            if i == 0 and w != g2.root:
                continue
            if consistent(v, w):
                phi[v] = w
                used.add(w)
                if extend(i + 1):
                    return True
                del phi[v]
                used.discard(w)
        return False

    return extend(0)


def _strip(g):
    net = g.network
    plain = Network(((),) * net.n, tuple((u, v, (), ()) for (u, v, _, _) in net.edges))
    return RootedNetwork(plain, g.root, g.validity_radius)


def _bottleneck(b1, b2):
    """Least ``D`` with a rooted isomorphism whose mark distances are all ``<= D``.

    Returns None when the balls are not isomorphic as unmarked graphs.
    """
    if canonical_key(b1) == canonical_key(b2):
        return Fraction(0)
    if canonical_key(_strip(b1)) != canonical_key(_strip(b2)):
        return None
    marks1 = set(b1.network.vertex_marks) | {m for e in b1.network.edges for m in e[2:]}
    marks2 = set(b2.network.vertex_marks) | {m for e in b2.network.edges for m in e[2:]}
    candidates = sorted({mark_distance(a, b) for a in marks1 for b in marks2} - {0})
    lo, hi = 0, len(candidates) - 1
    if not rooted_isomorphic_within(b1, b2, candidates[hi]):
        return None
    while lo < hi:
        mid = (lo + hi) // 2
        if rooted_isomorphic_within(b1, b2, candidates[mid]):
            hi = mid
        else:
            lo = mid + 1
    return candidates[lo]


def _eccentricity(g):
    return max(g.network.distances_from(g.root).values())


def rooted_distance(g1, g2):
    """Local distance ``1/(1 + alpha)`` between two rooted networks.

    ``alpha`` is the supremum of ``r > 0`` such that the ``floor(r)``-balls
    admit a rooted isomorphism moving every mark by less than ``1/r``.
    Raises :class:`IndeterminateDistance` when the truncations end before
    ``alpha`` is pinned down.
    """
    limit = None
    for v in (g1.validity_radius, g2.validity_radius):
        if v is not None:
            limit = v if limit is None else min(limit, v)
    stable = None
    if g1.validity_radius is None and g2.validity_radius is None:
        stable = max(_eccentricity(g1), _eccentricity(g2))
    alpha = Fraction(0)
    k = 0
    while True:
        if limit is not None and k > limit:
            raise IndeterminateDistance(alpha)
        d = _bottleneck(ball(g1, k), ball(g2, k))
        if d is None:
            break
        if d == 0:
            alpha = Fraction(k + 1)
        else:
            inv = 1 / d
            if k >= inv:
                break
            alpha = min(Fraction(k + 1), inv)
            if inv <= k + 1:
                break
        if stable is not None and k >= stable:
            if d == 0:
                return Fraction(0)
            alpha = 1 / d
            break
        k += 1
    return 1 / (1 + alpha)


# -- automorphisms ----------------------------------------------------------

def _initial_colors(network):
    return _rank([network.vertex_marks[v] for v in range(network.n)])[0]


def _iso_extends(network, c1, c2):
    """Is there an automorphism carrying colouring ``c1`` onto ``c2``?"""
    adj = network.adjacency
    c1, t1 = refine(adj, c1)
    c2, t2 = refine(adj, c2)
    if t1 != t2:
        return False
    cell1 = _target_cell(c1)
    if cell1 is None:
        # discrete: the bijection matching equal colours must be an automorphism
        return _certificate(network, c1) == _certificate(network, c2)
    v = cell1[0]
    colour = c1[v]
    for w in (x for x in range(network.n) if c2[x] == colour):
        if _iso_extends(network, _individualize(c1, v), _individualize(c2, w)):
            return True
    return False


def automorphism_orbits(g, cap=DEFAULT_ORBIT_CAP):
    """Orbits and stabilizer orders of the mark-preserving automorphism group."""
    net = g.network if isinstance(g, RootedNetwork) else g
    if net.n > cap:
        raise SizeCapExceeded(f"{net.n} vertices exceeds the orbit-search cap {cap}")
    adj = net.adjacency
    base, _ = refine(adj, _initial_colors(net))

    # |Aut| along a stabilizer chain
    count = 1
    colors = base
    while True:
        cell = _target_cell(colors)
        if cell is None:
            break
        v = cell[0]
        target = _individualize(colors, v)
        orbit = sum(1 for w in cell if _iso_extends(net, target, _individualize(colors, w)))
        count *= orbit
        colors, _ = refine(adj, target)

    parent = list(range(net.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    cells = {}
    for v, c in enumerate(base):
        cells.setdefault(c, []).append(v)
    for members in cells.values():
        for i, x in enumerate(members):
            for y in members[i + 1:]:
                if find(x) != find(y) and _iso_extends(
                        net, _individualize(base, x), _individualize(base, y)):
                    parent[find(y)] = find(x)
    groups = {}
    for v in range(net.n):
        groups.setdefault(find(v), []).append(v)
    orbits = tuple(sorted(tuple(sorted(m)) for m in groups.values()))
    stab = {orb[0]: count // len(orb) for orb in orbits}
    return OrbitReport(orbits, stab, count)
