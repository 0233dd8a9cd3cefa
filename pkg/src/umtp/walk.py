"""Random walks on rooted networks.

Discrete-time simple random walk (degree-biased stationarity, reversibility
and speed), the canonical reversible environment, continuous-time walks with
explosion flagging, heat kernels and spectral traces of weighted Laplacians.
"""

import csv
import io
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
import scipy.linalg

from . import rng
from .canon import canonical_key
from .core import (Network, NetworkExplorer, RootedNetwork, TruncationError,
                   explore_ball, is_real_mark, mark_float, real_mark)
from .gen import FiniteRootSampler, RootedSampler, UnboundedSupportError
from .stats import asymmetry_chi2, marginal_tv, mean_and_se, swap_test

DEFAULT_HEAT_CAP = 2000
DEFAULT_JUMP_CAP = 10**6
HOLD_WINDOW = 10
HOLD_FRACTION = 1e-6


class CouplingViolation(ValueError):
    pass


@dataclass
class Trajectory:
    network: object
    positions: list
    jump_times: list = None
    exploded: bool = False

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["step", "vertex", "time"])
        for i, v in enumerate(self.positions):
            t = 0.0 if i == 0 else (self.jump_times[i - 1] if self.jump_times else "")
            w.writerow([i, v, t])
        return buf.getvalue()


# -- discrete walks ---------------------------------------------------------

def _as_explorer(g):
    if isinstance(g, RootedNetwork):
        return g.explorer()
    return g


def _srw(ex, start, steps, ubuf):
    v = start
    pos = [v]
    nbrs = ex.neighbors
    for _ in range(steps):
        ns = nbrs(v)
        v = ns[int(ubuf.next() * len(ns))]
        pos.append(v)
    return pos


def _walk(ex, start, steps, ubuf, rule):
    if rule is None:
        return _srw(ex, start, steps, ubuf)
    v = start
    pos = [v]
    for _ in range(steps):
        v = rule(ex, v, ubuf.next())
        pos.append(v)
    return pos


def srw_trajectory(g, steps, seed, index=0):
    """Simple random walk from the root; loops and multi-edges count with multiplicity."""
    ex = _as_explorer(g)
    if ex.validity_radius is not None and steps > ex.validity_radius:
        raise TruncationError(
            f"{steps} steps could leave the validity radius {ex.validity_radius}")
    ubuf = rng.UniformBuffer(rng.stream(seed, index, rng.WALK))
    return Trajectory(g, _srw(ex, ex.root, steps, ubuf))


def parent_drift_rule(q):
    """Step to ``up(v)`` with probability ``q``, else to a uniform other neighbour.

    A deliberately non-reversible environment for negative controls; the
    explorer must provide ``up``.
    """
    def rule(ex, v, u):
        up = ex.up(v)
        ns = ex.neighbors(v)
        if up is None:
            return ns[int(u * len(ns))]
        others = [w for w in ns if w != up]
        if not others or u < q:
            return up
        u = (u - q) / (1 - q)
        return others[min(int(u * len(others)), len(others) - 1)]
    return rule


# -- degree biasing ---------------------------------------------------------

class DegreeBiasedSampler(RootedSampler):
    """Reweight a sampler by the root degree (rejection against ``max_degree``)."""

    def __init__(self, base):
        if base.max_degree is None:
            raise UnboundedSupportError("degree biasing by rejection needs bounded degrees")
        self.base = base
        self.truncation_radius = base.truncation_radius
        self.max_degree = base.max_degree
        self.infinite = base.infinite

    def descriptor(self):
        return {"sampler": "degree-biased", "base": self.base.descriptor()}

    def explore(self, seed, index):
        sub = rng.derive_seed(seed, index)
        acc = rng.stream(seed, index, rng.REJECT)
        j = 0
        while True:
            ex = self.base.explore(sub, j)
            j += 1
            if acc.random() * self.max_degree < ex.degree(ex.root):
                return ex


def degree_biased(s):
    if isinstance(s, FiniteRootSampler):
        degs = s.network.degrees
        base = s.root_law()
        w = [b * d for b, d in zip(base, degs)]
        if sum(w) == 0:
            raise ValueError("expected root degree is zero")
        return FiniteRootSampler(s.network, w, name="degree-biased")
    return DegreeBiasedSampler(s)


# -- stationarity and reversibility -----------------------------------------

class _KeyCache:
    """Ball keys around explorer vertices; finite explorers share a cache."""

    def __init__(self, r):
        self.r = r
        self.finite = {}

    def key(self, ex, v):
        if isinstance(ex, NetworkExplorer):
            k = (id(ex.network), v)
            out = self.finite.get(k)
            if out is None:
                g, _ = explore_ball(ex, self.r, center=v)
                out = self.finite[k] = canonical_key(g).bytes
            return out
        g, _ = explore_ball(ex, self.r, center=v)
        return canonical_key(g).bytes


def _pair_tallies(s, r, k, n, seed, rule, bias=True):
    biased = degree_biased(s) if bias else s
    cache = _KeyCache(r)
    pairs = {}
    for i in range(n):
        ex = biased.explore(seed, i)
        ubuf = rng.UniformBuffer(rng.stream(seed, i, rng.WALK), block=max(16, k))
        pos = _walk(ex, ex.root, k, ubuf, rule)
        a = cache.key(ex, pos[0])
        b = cache.key(ex, pos[-1])
        pairs[(a, b)] = pairs.get((a, b), 0) + 1
    return pairs


def _marginals(pairs):
    first, last = {}, {}
    for (a, b), c in pairs.items():
        first[a] = first.get(a, 0) + c
        last[b] = last.get(b, 0) + c
    return first, last


def stationarity_test(s, r, k, n, seed=0, permutations=10_000, step_rule=None, bias=True):
    """Compare the root-ball law at step 0 and step ``k`` under degree biasing.

    The permutation null swaps each draw's (start, end) pair, which is exact
    when the biased walk is stationary and reversible.  ``bias=False``
    starts from ``s`` itself (a negative control).
    """
    if s.truncation_radius is not None and r + k > s.truncation_radius:
        raise TruncationError(f"r + k = {r + k} exceeds truncation {s.truncation_radius}")
    pairs = _pair_tallies(s, r, k, n, seed, step_rule, bias)
    first, last = _marginals(pairs)
    tv = 0.5 * sum(abs(first.get(x, 0) - last.get(x, 0)) for x in set(first) | set(last)) / n
    _, p = swap_test(pairs, lambda c, f, t: marginal_tv(c, f, t, n), permutations,
                     rng.stream(seed, 0, rng.PERMUTE))
    return {"tv": tv, "p_value": p, "samples": n, "radius": r, "steps": k,
            "permutations": permutations}


def reversibility_test(s, r, n, seed=0, permutations=10_000, step_rule=None, bias=True):
    """Is the (ball at w0, ball at w1) pair law symmetric under degree biasing?"""
    if s.truncation_radius is not None and r + 1 > s.truncation_radius:
        raise TruncationError(f"r + 1 = {r + 1} exceeds truncation {s.truncation_radius}")
    pairs = _pair_tallies(s, r, 1, n, seed, step_rule, bias)
    stat, p = swap_test(pairs, asymmetry_chi2, permutations, rng.stream(seed, 0, rng.PERMUTE))
    return {"statistic": stat, "p_value": p, "samples": n, "radius": r,
            "permutations": permutations}


def pair_matrix(g):
    """Exact one-step pair law ``deg(i) p(i, j) / sum(deg)`` for simple random walk."""
    net = g.network if isinstance(g, RootedNetwork) else g
    total = sum(net.degrees)
    if total == 0:
        raise ValueError("network has no edges")
    m = {}
    for i in range(net.n):
        d = net.degree(i)
        for j in net.neighbor_lists[i]:
            # deg(i) * (1 / deg(i)) per half-edge
            m[(i, j)] = m.get((i, j), Fraction(0)) + Fraction(d, d) / total
    return m


def pair_matrix_symmetric(g):
    m = pair_matrix(g)
    return all(m.get((j, i), 0) == v for (i, j), v in m.items())


def _transition(net, rule=None):
    """Exact transition probabilities (dict of dicts) for SRW."""
    p = []
    for i in range(net.n):
        row = {}
        d = net.degree(i)
        for j in net.neighbor_lists[i]:
            row[j] = row.get(j, Fraction(0)) + Fraction(1, d)
        p.append(row)
    return p


def exact_step_laws(g, r, k, weights=None):
    """Exact laws of the radius-``r`` ball key at ``w_0`` and ``w_k``.

    The walk starts from ``weights`` (default: the degree measure).
    """
    net = g.network if isinstance(g, RootedNetwork) else g
    if weights is None:
        total = sum(net.degrees)
        dist = [Fraction(d, total) for d in net.degrees]
    else:
        s = sum(weights)
        dist = [Fraction(w) / s for w in weights]
    keys = [canonical_key(explore_ball(NetworkExplorer(net, v), r, center=v)[0]).bytes
            for v in range(net.n)]
    p = _transition(net)

    def law(vec):
        out = {}
        for v, q in enumerate(vec):
            if q:
                out[keys[v]] = out.get(keys[v], 0) + q
        return out

    start = law(dist)
    cur = dist
    for _ in range(k):
        nxt = [Fraction(0)] * net.n
        for i, q in enumerate(cur):
            if q:
                for j, pij in p[i].items():
                    nxt[j] += q * pij
        cur = nxt
    return start, law(cur)


def exact_tv(a, b):
    return sum(abs(a.get(x, 0) - b.get(x, 0)) for x in set(a) | set(b)) / 2


# -- canonical environment --------------------------------------------------

@dataclass
class Environment:
    transition: dict
    bias: list
    normalizer: Fraction
    F: list

    def row_sums(self):
        sums = {}
        for (x, _), v in self.transition.items():
            sums[x] = sums.get(x, 0) + v
        return sums

    def detailed_balance(self):
        return all(self.bias[x] * v == self.bias[y] * self.transition.get((y, x), 0)
                   for (x, y), v in self.transition.items())


def canonical_environment(g):
    """``p(x, y) = 1 / (F(x) deg(y))`` with ``F(x) = sum_{y ~ x} 1/deg(y)``.

    Computed exactly on the stored network; ``bias`` is
    ``F(x) / deg(x) / Z`` with ``Z`` the uniform-root mean of ``F / deg``.
    """
    net = g.network if isinstance(g, RootedNetwork) else g
    degs = net.degrees
    if any(d == 0 for d in degs):
        raise ValueError("canonical environment needs every vertex to have an edge")
    F = [sum((Fraction(1, degs[y]) for y in net.neighbor_lists[x]), Fraction(0))
         for x in range(net.n)]
    p = {}
    for x in range(net.n):
        for y in net.neighbor_lists[x]:
            p[(x, y)] = p.get((x, y), Fraction(0)) + 1 / (F[x] * degs[y])
    Z = sum((F[x] / degs[x] for x in range(net.n)), Fraction(0)) / net.n
    bias = [F[x] / degs[x] / Z for x in range(net.n)]
    env = Environment(p, bias, Z, F)
    if any(v != 1 for v in env.row_sums().values()):
        raise AssertionError("canonical environment rows do not sum to 1")
    if not env.detailed_balance():
        raise AssertionError("canonical environment is not reversible")
    return env


# -- speed ------------------------------------------------------------------

def tree_speed_formula(mean_degree):
    """Speed ``1 - 2/mean_degree`` of simple random walk on unimodular trees."""
    if mean_degree <= 0:
        raise ValueError("mean degree must be positive")
    return 1 - 2 / mean_degree


def _graph_distance(ex, a, b, limit):
    if hasattr(ex, "distance"):
        return ex.distance(a, b)
    dist = {a: 0}
    queue = deque([a])
    while queue:
        x = queue.popleft()
        if x == b:
            return dist[x]
        if dist[x] >= limit:
            continue
        for y in ex.neighbors(x):
            if y not in dist:
                dist[y] = dist[x] + 1
                queue.append(y)
    raise ValueError("target not reached within the step bound")


def speed_trials(s, steps, trials, seed=0, start=0):
    """``dist(w_0, w_n)/n`` for trials ``start .. start + trials - 1``."""
    biased = degree_biased(s)
    out = []
    for i in range(start, start + trials):
        ex = biased.explore(seed, i)
        ubuf = rng.UniformBuffer(rng.stream(seed, i, rng.WALK))
        pos = _srw(ex, ex.root, steps, ubuf)
        out.append(_graph_distance(ex, ex.root, pos[-1], steps) / steps)
    return out


def speed_estimate(s, steps, trials, seed=0, workers=1):
    """Monte Carlo speed under the degree-biased measure, with a 3-sigma band."""
    if s.truncation_radius is not None and steps > s.truncation_radius:
        raise TruncationError(f"{steps} steps exceed truncation {s.truncation_radius}")
    if workers > 1 and trials > 1:
        from .parallel import chunked_map
        vals = chunked_map(speed_trials, (s, steps), trials, seed, workers)
    else:
        vals = speed_trials(s, steps, trials, seed)
    mean, se = mean_and_se(vals)
    return {"mean": mean, "se": se, "ci": [mean - 3 * se, mean + 3 * se],
            "steps": steps, "trials": trials}


# -- weighted Laplacians ----------------------------------------------------

def edge_weights(net):
    """Weights read from real-valued edge marks; unmarked edges weigh 1."""
    out = []
    for (_, _, mu, _) in net.edges:
        out.append(mark_float(mu) if is_real_mark(mu) else 1.0)
    return np.array(out, dtype=float)


@dataclass
class WeightedOperator:
    """Laplacian ``A`` of a finite network with edge conductances ``weights``."""

    network: Network
    weights: np.ndarray = None
    laplacian: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        net = self.network
        w = edge_weights(net) if self.weights is None else np.asarray(self.weights, float)
        if w.shape != (net.m,):
            raise ValueError("one weight per edge required")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("edge weights must be finite and nonnegative")
        self.weights = w
        A = np.zeros((net.n, net.n))
        for (u, v, _, _), c in zip(net.edges, w):
            if u == v:
                continue
            A[u, v] -= c
            A[v, u] -= c
            A[u, u] += c
            A[v, v] += c
        self.laplacian = A

    @property
    def n(self):
        return self.network.n

    def spectrum(self):
        return scipy.linalg.eigh(self.laplacian)


def heat_kernel(w, t):
    """``P_t = exp(-A t)`` via the symmetric eigendecomposition."""
    if t < 0:
        raise ValueError("t must be nonnegative")
    if w.n > DEFAULT_HEAT_CAP:
        raise ValueError(f"{w.n} vertices exceeds the dense heat-kernel cap {DEFAULT_HEAT_CAP}")
    vals, vecs = w.spectrum()
    return (vecs * np.exp(-vals * t)) @ vecs.T


def mean_return_probability(w, t):
    """``(1/n) tr exp(-A t)`` for each ``t`` in ``t``."""
    vals, _ = w.spectrum()
    t = np.atleast_1d(np.asarray(t, float))
    return np.exp(-np.outer(t, vals)).sum(axis=1) / w.n


def return_comparison(base, c1, c2, t_grid, tol=1e-10):
    """Check ``(1/n) tr e^{-A1 t} >= (1/n) tr e^{-A2 t}`` for coupled weights ``c1 <= c2``."""
    c1 = np.asarray(c1, float)
    c2 = np.asarray(c2, float)
    if np.any(c1 > c2):
        bad = int(np.flatnonzero(c1 > c2)[0])
        raise CouplingViolation(f"c1 > c2 on edge {bad}")
    r1 = mean_return_probability(WeightedOperator(base, c1), t_grid)
    r2 = mean_return_probability(WeightedOperator(base, c2), t_grid)
    return {"t": [float(t) for t in t_grid], "trace1": r1.tolist(), "trace2": r2.tolist(),
            "holds": bool(np.all(r1 >= r2 - tol))}


def spectral_trace(ensemble, phi):
    """Average over the ensemble of ``(1/n) tr phi(A)`` (uniform root per network)."""
    vals = []
    for w in ensemble:
        ev, _ = w.spectrum()
        out = np.asarray(phi(ev), dtype=float)
        if not np.all(np.isfinite(out)):
            raise ValueError("phi is not finite on the spectrum")
        vals.append(out.sum() / w.n)
    return float(np.mean(vals))


# -- continuous-time walks --------------------------------------------------

def weighted_ray(length, weight, marked=False):
    """Path ``0 - 1 - ... - length`` rooted at 0; edge ``k`` weighs ``weight(k)``.

    Returns ``(network, weights)``.  With ``marked`` the weights are also
    stored as real edge marks, which limits them to the real-mark range.
    """
    w = np.array([float(weight(k)) for k in range(length)])
    if marked:
        marks = [real_mark(x) for x in w]
        edges = tuple((k, k + 1, marks[k], marks[k]) for k in range(length))
    else:
        edges = tuple((k, k + 1, (), ()) for k in range(length))
    return RootedNetwork(Network(((),) * (length + 1), edges), 0, length), w


def _csr(g, weights=None):
    net = g.network
    w = edge_weights(net) if weights is None else np.asarray(weights, float)
    if w.shape != (net.m,):
        raise ValueError("one weight per edge required")
    nbr = [[] for _ in range(net.n)]
    for (u, v, _, _), c in zip(net.edges, w):
        nbr[u].append((v, c))
        nbr[v].append((u, c))
    start = np.zeros(net.n + 1, dtype=np.int64)
    targets, cw = [], []
    for v in range(net.n):
        start[v + 1] = start[v] + len(nbr[v])
        for (y, c) in nbr[v]:
            targets.append(y)
            cw.append(c)
    cw = np.array(cw, float)
    if np.any(cw <= 0):
        raise ValueError("ctrw needs positive weights")
    rate = np.add.reduceat(cw, start[:-1]) if len(cw) else np.zeros(net.n)
    rate[start[:-1] == start[1:]] = 0.0
    return start, np.array(targets, dtype=np.int64), cw, rate


def _boundary(g):
    if g.validity_radius is None:
        return np.zeros(g.n, dtype=bool)
    dist = g.network.distances_from(g.root)
    return np.array([dist.get(v, 0) >= g.validity_radius for v in range(g.n)])


def _ctrw_chunk(start, targets, cw, rate, boundary, state, tail, exps, unis, t_max, cap):
    """Advance one walk through a block of random numbers.

    ``state`` is ``[vertex, time, jumps, status]``; status 0 running,
    1 reached ``t_max``, 2 hit the jump cap, 3 reached the boundary, 4 stuck.
    """
    v = int(state[0])
    t = state[1]
    jumps = int(state[2])
    status = 0
    for i in range(exps.shape[0]):
        if jumps >= cap:
            status = 2
            break
        r = rate[v]
        if r <= 0.0:
            t = t_max
            status = 4
            break
        hold = exps[i] / r
        if t + hold >= t_max:
            t = t_max
            status = 1
            break
        if boundary[v]:
            status = 3
            break
        t += hold
        tail[jumps % tail.shape[0]] = hold
        x = unis[i] * r
        k = start[v]
        last = start[v + 1] - 1
        while k < last:
            x -= cw[k]
            if x < 0.0:
                break
            k += 1
        v = targets[k]
        jumps += 1
    state[0] = v
    state[1] = t
    state[2] = jumps
    state[3] = status


try:
    import numba
    _ctrw_chunk = numba.njit(cache=True)(_ctrw_chunk)
except ImportError:  # pragma: no cover
    pass


_BLOCK = 1 << 16


def _ctrw_run(csr, boundary, t_max, cap, gen, block=_BLOCK):
    start, targets, cw, rate, root = csr
    state = np.array([root, 0.0, 0.0, 0.0])
    tail = np.full(HOLD_WINDOW, np.inf)
    while True:
        b = int(min(block, cap - state[2] + 1))
        exps = gen.exponential(1.0, b)
        unis = gen.random(b)
        _ctrw_chunk(start, targets, cw, rate, boundary, state, tail, exps, unis,
                    float(t_max), int(cap))
        if state[3] == 3:
            raise TruncationError("walk reached the truncation boundary")
        if state[3] != 0:
            break
    jumps = int(state[2])
    exploded = jumps >= cap and state[1] < t_max and tail.sum() < HOLD_FRACTION * t_max
    return int(state[0]), float(state[1]), jumps, bool(exploded)


def ctrw_simulate(g, t_max, cap=DEFAULT_JUMP_CAP, seed=0, index=0, record=True,
                  weights=None):
    """Minimal continuous-time walk with rates given by edge weights.

    Stops at ``t_max`` or after ``cap`` jumps.  ``exploded`` is set when the
    cap is reached before ``t_max`` and the last ten holding times sum below
    ``1e-6 * t_max``; this is evidence, not proof.  ``weights`` overrides
    the edge-mark weights.  With ``record=False`` only the endpoint is kept.
    """
    start, targets, cw, rate = _csr(g, weights)
    boundary = _boundary(g)
    gen = rng.stream(seed, index, rng.WALK)
    if not record:
        v, t, jumps, exploded = _ctrw_run((start, targets, cw, rate, g.root), boundary,
                                          t_max, cap, gen)
        traj = Trajectory(g, [v], None, exploded)
        traj.jumps, traj.time = jumps, t
        return traj
    v = g.root
    t = 0.0
    jumps = 0
    tail = deque(maxlen=HOLD_WINDOW)
    positions = [v]
    times = []
    running = True
    while running:
        b = int(min(_BLOCK, cap - jumps + 1))
        exps = gen.exponential(1.0, b)
        unis = gen.random(b)
        for e, u in zip(exps, unis):
            if jumps >= cap or rate[v] <= 0:
                running = False
                break
            hold = e / rate[v]
            if t + hold >= t_max:
                running = False
                break
            if boundary[v]:
                raise TruncationError("walk reached the truncation boundary")
            t += hold
            tail.append(hold)
            x = u * rate[v]
            k = start[v]
            while k < start[v + 1] - 1:
                x -= cw[k]
                if x < 0:
                    break
                k += 1
            v = int(targets[k])
            jumps += 1
            positions.append(v)
            times.append(t)
    exploded = jumps >= cap and t < t_max and sum(tail) < HOLD_FRACTION * t_max
    traj = Trajectory(g, positions, times, exploded)
    traj.jumps, traj.time = jumps, (t if jumps >= cap else float(t_max))
    return traj


def ctrw_explosion_frequency(g, runs, t_max, cap=DEFAULT_JUMP_CAP, seed=0, weights=None):
    """Fraction of ``runs`` independent walks flagged as exploding.

    Run ``i`` uses the stream of ``ctrw_simulate(..., index=i)``.
    """
    start, targets, cw, rate = _csr(g, weights)
    boundary = _boundary(g)
    csr = (start, targets, cw, rate, g.root)
    flags, jumps = [], []
    for i in range(runs):
        _, _, j, ex = _ctrw_run(csr, boundary, t_max, cap, rng.stream(seed, i, rng.WALK))
        flags.append(ex)
        jumps.append(j)
    return {"runs": runs, "flagged": int(sum(flags)), "frequency": float(np.mean(flags)),
            "t_max": t_max, "cap": cap, "median_jumps": float(np.median(jumps))}
