"""Acceptance checks with fixed seeds, tolerances and runtime budgets.

Each check prints one PASS/FAIL line.  Run with ``pytest tests/test_acceptance.py``
or directly as ``python -m tests.test_acceptance``.
"""

import os
import sys
import time
from fractions import Fraction

import numpy as np
import pytest
import scipy.optimize
from networkx.generators.atlas import graph_atlas_g

from umtp import rng
from umtp.core import Network
from umtp.forest import (LabeledNetwork, fmsf_rule, invasion, kruskal_mst,
                         ust_degree_stats)
from umtp.gen import (FiniteRootSampler, OffspringDistribution, agw_sampler, canopy_sampler,
                      config_model, line_sampler, path_graph, random_connected_graph,
                      ugw_sampler, uniform_root)
from umtp.mtp import (HashedTransport, ball_distribution, isoperimetry_report,
                      mtp_monte_carlo_test, tv_distance, uphill_transport, verify_mtp_finite)
from umtp.perc import branching_survival, couple, monotonicity_check, pc_estimate
from umtp.stats import mean_and_se
from umtp.walk import (WeightedOperator, ctrw_explosion_frequency, mean_return_probability,
                       pair_matrix_symmetric, parent_drift_rule, return_comparison,
                       reversibility_test, speed_estimate, stationarity_test, weighted_ray)

MIXED = OffspringDistribution({0: Fraction(1, 5), 1: Fraction(3, 10), 2: Fraction(1, 2)})
THREE_REGULAR = OffspringDistribution.delta(2)
WORKERS = os.cpu_count() or 1


def _line(num, name, ok, elapsed, budget, detail):
    status = "PASS" if ok and elapsed < budget else "FAIL"
    return f"[{status}] {num:2d} {name:<28} {elapsed:7.1f}s / {budget:4.0f}s  {detail}"


# filled as checks run; the conftest prints it in the terminal summary
LINES = []


def _random_marked(gen, max_n, loops=True):
    n = int(gen.integers(1, max_n + 1))
    net = random_connected_graph(n, int(gen.integers(0, n + 1)), gen, multigraph=loops)
    marks = tuple((int(x),) for x in gen.integers(0, 2, n))
    return Network(marks, net.edges)


# -- the twelve checks ------------------------------------------------------

def exact_mtp():
    gen = rng.stream(101)
    checked = 0
    for _ in range(100):
        net = _random_marked(gen, 12)
        for _ in range(20):
            f = HashedTransport(int(gen.integers(2**31)), int(gen.integers(1, 3)))
            lhs, rhs = verify_mtp_finite(net, f, check=False)
            if lhs != rhs:
                return False, f"unequal sides {lhs} != {rhs}"
            checked += 1
    return True, f"{checked} (network, transport) pairs equal"


def ugw_degree():
    n = 100_000
    s = ugw_sampler(MIXED, 1)
    degs = [s.explore(202, i).degree(0) for i in range(n)]
    mean, se = mean_and_se(degs)
    target = float(MIXED.ugw_mean_degree())
    s3 = ugw_sampler(THREE_REGULAR, 1)
    regular = all(s3.explore(203, i).degree(0) == 3 for i in range(n))
    ok = abs(mean - target) <= 3 * se and regular
    return ok, (f"mean {mean:.5f} (se {se:.5f}) vs {target:.5f}; "
                f"3-regular all 3: {regular}")


def config_convergence():
    n = 100_000
    ref = ball_distribution(ugw_sampler(MIXED, 1), 1, n, seed=301)
    tvs = []
    for size in (100, 1000, 10_000):
        g = config_model(size, MIXED, seed=302)
        tvs.append(tv_distance(ball_distribution(uniform_root(g), 1, n, seed=303), ref))
    ok = tvs[-1] <= 0.05 and tvs[0] > tvs[1] > tvs[2]
    return ok, "TV at n=1e2,1e3,1e4: " + ", ".join(f"{t:.4f}" for t in tvs)


def tree_speed():
    steps, trials = 10_000, 1000
    out = {}
    for name, s in (("ugw", ugw_sampler(THREE_REGULAR, steps)),
                    ("canopy", canopy_sampler(steps)), ("line", line_sampler(steps))):
        out[name] = speed_estimate(s, steps, trials, seed=401, workers=WORKERS)["mean"]
    ok = (abs(out["ugw"] - 1 / 3) <= 0.02 and abs(out["canopy"]) <= 0.02
          and abs(out["line"]) <= 0.02)
    return ok, ", ".join(f"{k} {v:.4f}" for k, v in out.items())


def biased_walks():
    graphs = 0
    for G in graph_atlas_g()[1:]:
        if G.number_of_edges() == 0:
            continue
        nodes = sorted(G)
        net = Network.from_pairs(len(nodes), [(nodes.index(u), nodes.index(v))
                                              for u, v in G.edges()])
        if not pair_matrix_symmetric(net):
            return False, f"asymmetric pair matrix on atlas graph {nodes}"
        graphs += 1
    gen = rng.stream(501)
    for _ in range(1000):
        net = _random_marked(gen, 10)
        if net.m and not pair_matrix_symmetric(net):
            return False, "asymmetric pair matrix on a random multigraph"
        graphs += 1
    st = stationarity_test(ugw_sampler(MIXED, 3), 1, 2, 10_000, seed=502)
    rv = reversibility_test(ugw_sampler(MIXED, 2), 1, 10_000, seed=503)
    drift = reversibility_test(canopy_sampler(3), 2, 5000, seed=504,
                               step_rule=parent_drift_rule(0.9))
    ok = st["p_value"] > 0.01 and rv["p_value"] > 0.01 and drift["p_value"] < 0.01
    return ok, (f"{graphs} exact networks symmetric; stationarity p {st['p_value']:.3f}, "
                f"reversibility p {rv['p_value']:.3f}, drift p {drift['p_value']:.4f}")


def ust_degree():
    gen = rng.stream(601)
    graphs = [random_connected_graph(50, int(gen.integers(10, 60)), gen) for _ in range(10)]
    reps = ust_degree_stats(graphs, 10_000, seed=602, edge_check=True)
    zs = [r["z"] for r in reps]
    edges_ok = all(r["edge_check"]["ok"] for r in reps)
    ok = all(abs(z) <= 3 for z in zs) and edges_ok
    return ok, f"max |z| {max(map(abs, zs)):.2f}; Kirchhoff check on all graphs: {edges_ok}"


def msf_equivalence():
    gen = rng.stream(701)
    for i in range(1000):
        n = int(gen.integers(2, 31))
        net = random_connected_graph(n, int(gen.integers(0, 2 * n)), gen, multigraph=True)
        l = LabeledNetwork.random(net, 702, i)
        free = fmsf_rule(l)
        start = int(gen.integers(n))
        if free != kruskal_mst(l) or free != invasion(l, start).subgraph(net):
            return False, f"edge sets differ on instance {i}"
    return True, "1000 instances: free rule = Kruskal = invasion"


def return_probabilities():
    gen = rng.stream(801)
    worst = np.inf
    for _ in range(50):
        n = int(gen.integers(2, 61))
        net = random_connected_graph(n, int(gen.integers(0, n)), gen)
        c1 = gen.uniform(0.1, 2.0, net.m)
        c2 = c1 + gen.uniform(0.0, 2.0, net.m) * (gen.random(net.m) < 0.5)
        rep = return_comparison(net, c1, c2, [0.1, 1.0, 10.0], tol=1e-10)
        if not rep["holds"]:
            return False, f"trace order fails on n={n}"
        worst = min(worst, min(a - b for a, b in zip(rep["trace1"], rep["trace2"])))
    err = 0.0
    for c in (0.3, 1.0, 4.0):
        w = WeightedOperator(path_graph(2), [c])
        for t in (0.1, 1.0, 10.0):
            err = max(err, abs(mean_return_probability(w, t)[0] - (1 + np.exp(-2 * c * t)) / 2))
    ok = err <= 1e-10
    return ok, f"min trace gap {worst:.3e}; K2 closed-form error {err:.1e}"


def isoperimetry():
    gen = rng.stream(901)
    for i in range(100):
        n = int(gen.integers(1, 25))
        base = random_connected_graph(n, int(gen.integers(0, n + 1)), gen, multigraph=True)
        open_set = gen.random(base.m) < gen.random()
        net = Network(base.vertex_marks, tuple((u, v, (int(o),), (int(o),))
                                               for (u, v, _, _), o in zip(base.edges, open_set)))
        rep = isoperimetry_report(net, lambda a, b: a[0] == 1)
        if rep.iota_estimate + rep.alpha_estimate != rep.expdeg or \
                rep.iota_estimate != rep.mean_closed_at_root:
            return False, f"identity fails on instance {i}"
    return True, "100 (graph, open set) pairs exact"


def percolation():
    gen = rng.stream(1001)
    grid = np.linspace(0, 1, 11)
    for i in range(1000):
        n = int(gen.integers(1, 30))
        net = random_connected_graph(n, int(gen.integers(0, n + 1)), gen, multigraph=True)
        monotonicity_check(couple(net, 1002, i), 0, grid)
    R = 12
    curve = pc_estimate(ugw_sampler(THREE_REGULAR, R), R, m=10_000, seed=1003,
                        workers=WORKERS)
    oracle = scipy.optimize.brentq(lambda p: branching_survival(p, R) - 0.5, 0.01, 0.99)
    ok = abs(curve.threshold - 0.5) <= 0.05 and abs(curve.threshold - oracle) <= 0.05
    return ok, (f"1000 coupled instances nested; crossing {curve.threshold:.4f} "
                f"(se {curve.threshold_se():.4f}), oracle {oracle:.4f}")


def negative_controls():
    f = uphill_transport()
    center = FiniteRootSampler(path_graph(3), [0, 1, 0], name="center")
    p_center = mtp_monte_carlo_test(center, f, 10_000, seed=1101).p_value
    p_agw = mtp_monte_carlo_test(agw_sampler(MIXED, 2), f, 10_000, seed=1102).p_value
    fixed = uniform_root(random_connected_graph(20, 10, rng.stream(1103)))
    rejections = sum(mtp_monte_carlo_test(fixed, f, 1000, seed=k, permutations=1000)
                     .p_value < 0.05 for k in range(200))
    rate = rejections / 200
    ok = p_center < 0.01 and p_agw < 0.01 and rate <= 0.05
    return ok, (f"center p {p_center:.1e}, agw p {p_agw:.1e}; "
                f"false positives {rejections}/200 = {rate:.3f}")


def explosion():
    cap, t_max, runs = 100_000, 1000.0, 1000
    g, w = weighted_ray(cap, lambda k: (k + 1) ** 2)
    fast = ctrw_explosion_frequency(g, runs, t_max, cap=cap, seed=1201, weights=w)
    g, w = weighted_ray(cap, lambda k: 1.0)
    unit = ctrw_explosion_frequency(g, runs, t_max, cap=cap, seed=1202, weights=w)
    ok = fast["frequency"] >= 0.99 and unit["flagged"] == 0
    return ok, (f"(n+1)^2 ray flagged {fast['flagged']}/{runs}; "
                f"unit chain flagged {unit['flagged']}/{runs}")


CRITERIA = [
    (1, "exact mass transport", 60, exact_mtp),
    (2, "UGW root degree", 60, ugw_degree),
    (3, "configuration model limit", 300, config_convergence),
    (4, "tree speed", 300, tree_speed),
    (5, "degree-biased walks", 120, biased_walks),
    (6, "UST degree and edges", 180, ust_degree),
    (7, "MSF equivalences", 60, msf_equivalence),
    (8, "return probabilities", 120, return_probabilities),
    (9, "isoperimetry identity", 60, isoperimetry),
    (10, "percolation", 300, percolation),
    (11, "negative controls", 300, negative_controls),
    (12, "explosion flagging", 60, explosion),
]


def run_criterion(num, name, budget, fn):
    t0 = time.perf_counter()
    ok, detail = fn()
    elapsed = time.perf_counter() - t0
    line = _line(num, name, ok, elapsed, budget, detail)
    LINES.append(line)
    return ok and elapsed < budget, line


@pytest.mark.parametrize("num,name,budget,fn", CRITERIA, ids=[c[1] for c in CRITERIA])
def test_criterion(num, name, budget, fn):
    passed, line = run_criterion(num, name, budget, fn)
    assert passed, line


if __name__ == "__main__":
    results = []
    for c in CRITERIA:
        passed, line = run_criterion(*c)
        print(line, flush=True)
        results.append(passed)
    sys.exit(0 if all(results) else 1)
