"""Unimodularity checks: exact and Monte Carlo mass transport, root laws,
ball histograms for local weak convergence, and edge isoperimetry.
"""

import csv
import hashlib
import io
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from . import rng
from .canon import automorphism_orbits, canonical_form, canonical_key
from .core import Network, NetworkExplorer, RootedNetwork, TruncationError, explore_ball
from .gen import FiniteRootSampler
from .stats import mean_and_se, sign_flip_pvalue


class MtpViolation(AssertionError):
    pass


# -- mass transport functions -----------------------------------------------

class MassTransportFn:
    """Nonnegative ``f(G, x, y)``, zero unless ``dist(x, y) <= radius``.

    ``locality`` bounds how far from ``x`` the value may look, so the mass
    received at the root needs the network to radius ``radius + locality``.
    Subclasses implement :meth:`evaluate` on a :class:`RootedNetwork`.
    """

    radius = 1
    locality = 1
    cacheable = False

    def evaluate(self, g, x, y):
        raise NotImplementedError

    def sent(self, g, o=None):
        o = g.root if o is None else o
        dist = g.network.distances_from(o, limit=self.radius)
        return sum((self.evaluate(g, o, x) for x in dist), Fraction(0))

    def received(self, g, o=None):
        o = g.root if o is None else o
        dist = g.network.distances_from(o, limit=self.radius)
        return sum((self.evaluate(g, x, o) for x in dist), Fraction(0))

    def describe(self):
        return {"kind": type(self).__name__, "radius": self.radius, "locality": self.locality}


def double_rooted_key(g, x, y, radius):
    """Canonical key of the radius ball around ``x`` with ``y`` marked, or None."""
    dist = g.network.distances_from(x, limit=radius)
    if y not in dist:
        return None
    order = sorted(dist, key=lambda v: (dist[v], v))
    sub, index = g.network.induced(order)
    marks = tuple(((1,) if v == index[y] else (0,)) + tuple(m)
                  for v, m in enumerate(sub.vertex_marks))
    return canonical_key(RootedNetwork(Network(marks, sub.edges), 0, radius))


class LookupTransport(MassTransportFn):
    """``f`` read from a table keyed by the double-rooted ball's canonical key."""

    cacheable = True

    def __init__(self, table, radius):
        self.table = dict(table)
        self.radius = self.locality = int(radius)

    def value(self, key):
        return Fraction(self.table.get(key.bytes, 0))

    def evaluate(self, g, x, y):
        key = double_rooted_key(g, x, y, self.radius)
        return Fraction(0) if key is None else self.value(key)


class HashedTransport(LookupTransport):
    """A pseudo-random equivariant ``f``: the table is a salted hash of the key.

    Values are small nonnegative rationals; about ``zero_fraction`` of keys
    map to 0.
    """

    def __init__(self, salt, radius, zero_fraction=0.3):
        super().__init__({}, radius)
        self.salt = int(salt)
        self.zero_fraction = zero_fraction

    def value(self, key):
        h = int.from_bytes(hashlib.sha256(self.salt.to_bytes(8, "little") + key.bytes)
                           .digest()[:8], "little")
        if (h % 1000) < 1000 * self.zero_fraction:
            return Fraction(0)
        return Fraction(1 + (h >> 10) % 7, 1 + (h >> 20) % 5)

    def describe(self):
        return {"kind": "hashed", "salt": self.salt, "radius": self.radius}


class NeighborTransport(MassTransportFn):
    """Mass ``weight(deg x, deg y)`` along every edge ``x -> y`` (with multiplicity)."""

    radius = 1
    locality = 1

    def __init__(self, weight, name="neighbor"):
        self.weight = weight
        self.name = name

    def evaluate(self, g, x, y):
        if x == y:
            return Fraction(0)
        net = g.network
        mult = sum(1 for w in net.neighbor_lists[x] if w == y)
        if not mult:
            return Fraction(0)
        return mult * Fraction(self.weight(net.degree(x), net.degree(y)))

    def sent(self, g, o=None):
        o = g.root if o is None else o
        net = g.network
        dx = net.degree(o)
        return sum((Fraction(self.weight(dx, net.degree(w)))
                    for w in net.neighbor_lists[o] if w != o), Fraction(0))

    def received(self, g, o=None):
        o = g.root if o is None else o
        net = g.network
        dx = net.degree(o)
        return sum((Fraction(self.weight(net.degree(w), dx))
                    for w in net.neighbor_lists[o] if w != o), Fraction(0))

    def describe(self):
        return {"kind": self.name, "radius": 1}


def unit_neighbor_transport():
    """One unit of mass to each neighbour (symmetric)."""
    return NeighborTransport(lambda a, b: 1, "unit-neighbor")


def uphill_transport():
    """One unit from ``x`` to each neighbour of strictly larger degree."""
    return NeighborTransport(lambda a, b: 1 if b > a else 0, "uphill")


class ParentTransport(MassTransportFn):
    """One unit to the parent, for explorers with an intrinsic upward direction.

    Needs an explorer method ``up(v)`` (the parent, or None).  On the canopy
    tree the direction is the unique end, so this is equivariant.
    """

    radius = 1
    locality = 1

    def sent_received_explorer(self, ex):
        o = ex.root
        up = ex.up(o)
        sent = Fraction(1) if up is not None else Fraction(0)
        received = sum(1 for w in ex.neighbors(o) if w != up and ex.up(w) == o)
        return sent, Fraction(received)

    def describe(self):
        return {"kind": "to-parent", "radius": 1}


# -- exact transport on finite networks --------------------------------------

def verify_mtp_finite(g, f, check=True):
    """Both sides of the transport identity under uniform rooting, exactly.

    Each root's component is canonicalized and ``f`` is evaluated on the
    canonical representative, so a non-equivariant ``f`` shows up as a
    mismatch.
    """
    if isinstance(g, RootedNetwork):
        g = g.network
    memo = {}
    lhs = rhs = Fraction(0)
    for o in range(g.n):
        key, can = canonical_form(RootedNetwork.of(g, o))
        if key.bytes not in memo:
            memo[key.bytes] = (f.sent(can, 0), f.received(can, 0))
        s, r = memo[key.bytes]
        lhs += s
        rhs += r
    lhs /= g.n
    rhs /= g.n
    if check and lhs != rhs:
        raise MtpViolation(f"sent {lhs} != received {rhs}")
    return lhs, rhs


@dataclass
class MtpTestReport:
    lhs_mean: float
    rhs_mean: float
    statistic: float
    p_value: float
    samples: int
    permutations: int
    extra: dict = field(default_factory=dict)

    def rejected(self, level):
        return self.p_value < level

    def as_dict(self):
        d = {"lhs_mean": self.lhs_mean, "rhs_mean": self.rhs_mean,
             "statistic": self.statistic, "p_value": self.p_value,
             "samples": self.samples, "permutations": self.permutations}
        d.update(self.extra)
        return d


def transport_sides(s, f, seed, index, memo=None):
    """Mass sent from and received at the root of draw ``index``."""
    if isinstance(f, ParentTransport):
        return f.sent_received_explorer(s.explore(seed, index))
    if isinstance(s, FiniteRootSampler):
        root = s.root_for(seed, index)
        if memo is not None and root in memo:
            return memo[root]
        g = s.rooted(root)
        out = (f.sent(g), f.received(g))
        if memo is not None:
            memo[root] = out
        return out
    r = f.radius + f.locality
    g, _ = explore_ball(s.explore(seed, index), r)
    if f.cacheable and memo is not None:
        k = canonical_key(g).bytes
        if k not in memo:
            memo[k] = (f.sent(g), f.received(g))
        return memo[k]
    return f.sent(g), f.received(g)


def mtp_monte_carlo_test(s, f, n, seed=0, permutations=10_000):
    """Paired sign-flip permutation test of ``E[sent] == E[received]``."""
    need = f.radius + f.locality
    if s.truncation_radius is not None and s.truncation_radius < need:
        raise TruncationError(
            f"sampler truncation {s.truncation_radius} < transport reach {need}")
    memo = {}
    sent = np.empty(n)
    recv = np.empty(n)
    for i in range(n):
        a, b = transport_sides(s, f, seed, i, memo)
        sent[i] = float(a)
        recv[i] = float(b)
    diffs = sent - recv
    p = sign_flip_pvalue(diffs, permutations, rng.stream(seed, 0, rng.PERMUTE))
    return MtpTestReport(float(sent.mean()), float(recv.mean()), float(diffs.mean()),
                         p, n, permutations, {"transport": f.describe()})


# -- root laws of fixed graphs ----------------------------------------------

@dataclass
class StabRootReport:
    orbit_masses: dict
    predicted: dict
    stabilizer_order: dict
    ok: bool

    def as_dict(self):
        return {"orbit_masses": {str(k): str(v) for k, v in self.orbit_masses.items()},
                "predicted": {str(k): str(v) for k, v in self.predicted.items()},
                "stabilizer_order": {str(k): v for k, v in self.stabilizer_order.items()},
                "ok": self.ok}


def stab_root_check(g, cap=16):
    """Compare uniform-root orbit masses with ``c^-1 |Stab(x)|^-1``."""
    net = g.network if isinstance(g, RootedNetwork) else g
    if not net.is_connected():
        raise ValueError("stab_root_check needs a connected network")
    rep = automorphism_orbits(net, cap=cap)
    c = sum(Fraction(1, rep.stabilizer_order[orb[0]]) for orb in rep.orbits)
    masses, predicted = {}, {}
    for orb in rep.orbits:
        masses[orb[0]] = Fraction(len(orb), net.n)
        predicted[orb[0]] = 1 / c * Fraction(1, rep.stabilizer_order[orb[0]])
    return StabRootReport(masses, predicted, dict(rep.stabilizer_order),
                          masses == predicted)


def root_class_law(s):
    """Exact law of the rooted isomorphism class for a finite-root sampler."""
    law = {}
    for v, p in enumerate(s.root_law()):
        if p:
            k = canonical_key(s.rooted(v)).bytes
            law[k] = law.get(k, 0) + p
    return law


# -- local weak convergence diagnostics -------------------------------------

@dataclass
class EmpiricalBallDistribution:
    radius: int
    counts: dict
    total: int

    def freq(self, key):
        return self.counts.get(key, 0) / self.total

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["key_hex", "count"])
        for k in sorted(self.counts):
            w.writerow([k.hex(), self.counts[k]])
        return buf.getvalue()

    def as_dict(self):
        return {"radius": self.radius, "total": self.total,
                "counts": {k.hex(): v for k, v in sorted(self.counts.items())}}


def ball_distribution(s, r, n, seed=0):
    """Histogram of canonical keys of radius-``r`` root balls over ``n`` draws."""
    s.require_radius(r)
    counts = {}
    if isinstance(s, FiniteRootSampler):
        per_root = {}
        for i in range(n):
            root = s.root_for(seed, i)
            k = per_root.get(root)
            if k is None:
                g, _ = explore_ball(NetworkExplorer(s.network, root), r)
                k = per_root[root] = canonical_key(g).bytes
            counts[k] = counts.get(k, 0) + 1
    else:
        for i in range(n):
            g, _ = explore_ball(s.explore(seed, i), r)
            k = canonical_key(g).bytes
            counts[k] = counts.get(k, 0) + 1
    return EmpiricalBallDistribution(r, counts, n)


def tv_distance(a, b):
    if a.radius != b.radius:
        raise ValueError(f"radius mismatch: {a.radius} vs {b.radius}")
    keys = set(a.counts) | set(b.counts)
    return 0.5 * sum(abs(a.freq(k) - b.freq(k)) for k in keys)


# -- isoperimetry -----------------------------------------------------------

@dataclass
class IsoperimetryReport:
    iota_estimate: Fraction
    alpha_estimate: Fraction
    expdeg: Fraction
    mean_closed_at_root: Fraction

    def as_dict(self):
        return {k: str(v) for k, v in self.__dict__.items()}


def isoperimetry_report(g, open_edge):
    """Exact boundary and internal-degree terms under uniform rooting.

    ``open_edge(mark_u, mark_v)`` says whether an edge is open.  The
    boundary count ``n(x)`` is the number of closed half-edges at ``x``
    (with multiplicity), so ``deg(x) - n(x)`` is the open degree.
    """
    net = g.network if isinstance(g, RootedNetwork) else g
    is_open = [bool(open_edge(mu, mv)) for (_, _, mu, mv) in net.edges]
    closed = [0] * net.n
    parent = list(range(net.n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, (u, v, _, _) in enumerate(net.edges):
        if is_open[i]:
            parent[find(u)] = find(v)
        else:
            closed[u] += 1
            closed[v] += 1
    comp_size, comp_closed = {}, {}
    for x in range(net.n):
        r = find(x)
        comp_size[r] = comp_size.get(r, 0) + 1
        comp_closed[r] = comp_closed.get(r, 0) + closed[x]
    n = net.n
    boundary = sum((Fraction(comp_closed[find(x)], comp_size[find(x)]) for x in range(n)),
                   Fraction(0)) / n
    mean_closed = Fraction(sum(closed), n)
    expdeg = Fraction(sum(net.degrees), n)
    alpha = Fraction(sum(net.degrees[x] - closed[x] for x in range(n)), n)
    if boundary != mean_closed:
        raise MtpViolation(f"boundary count mismatch: {boundary} != {mean_closed}")
    if boundary + alpha != expdeg:
        raise MtpViolation(f"iota + alpha = {boundary + alpha} != expdeg {expdeg}")
    return IsoperimetryReport(boundary, alpha, expdeg, mean_closed)


def iota_grid_search(s, q_grid, n, seed=0):
    """Upper-bound estimate of the edge-isoperimetric constant.

    For each threshold ``q`` edges with a uniform label below ``q`` are
    open.  A threshold is admissible only if no root cluster met the
    truncation boundary in any draw (finite clusters are then certified on
    the sample); the reported bound is the least admissible estimate.
    """
    R = s.truncation_radius
    per_q = {}
    for q in q_grid:
        vals = []
        admissible = True
        for i in range(n):
            g = s.draw(seed, i)
            labels = rng.stream(seed, i, rng.LABELS).random(g.network.m)
            net = g.network
            adj = net.adjacency
            comp = {g.root}
            stack = [g.root]
            while stack:
                x = stack.pop()
                for (y, _, _, e) in adj[x]:
                    if labels[e] < q and y not in comp:
                        comp.add(y)
                        stack.append(y)
            if R is not None:
                dist = net.distances_from(g.root)
                if any(dist[x] >= R for x in comp):
                    admissible = False
                    break
            closed = sum(1 for x in comp for (_, _, _, e) in adj[x] if not labels[e] < q)
            vals.append(closed / len(comp))
        if admissible:
            mean, se = mean_and_se(vals)
            per_q[float(q)] = {"estimate": mean, "se": se}
        else:
            per_q[float(q)] = {"estimate": None, "se": None}
    valid = [v["estimate"] for v in per_q.values() if v["estimate"] is not None]
    return {"per_threshold": per_q, "upper_bound": min(valid) if valid else None,
            "note": "upper bound over Bernoulli thresholds only"}


def expdeg_floor_check(s, n, seed=0):
    """Estimate the expected root degree; flag a ``< 2`` violation beyond 3 sigma."""
    degs = [_root_degree(s, seed, i) for i in range(n)]
    mean, se = mean_and_se(degs)
    return {"mean": mean, "se": se, "ci95": [mean - 1.96 * se, mean + 1.96 * se],
            "violation": bool(mean + 3 * se < 2), "samples": n}


def _root_degree(s, seed, i):
    ex = s.explore(seed, i)
    return ex.degree(ex.root)
