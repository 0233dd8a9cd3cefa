import itertools
import json
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from umtp import rng
from umtp.core import Network
from umtp.forest import (DisconnectedError, DuplicateLabelError, LabeledNetwork,
                         SpanningSubgraph, edge_frequency_check, edge_inclusion_oracle,
                         fmsf_rule, invasion, kruskal_mst, msf_degree_stats,
                         ust_degree_stats, wilson_sampler, wilson_ust, wmsf_rule)
from umtp.gen import (OffspringDistribution, complete_graph, cycle_graph, path_graph,
                      random_connected_graph, ugw_sampler, uniform_root)

# K4 minus an edge; brute-force enumeration gives 8 spanning trees
DIAMOND = Network.from_pairs(4, [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3)])
DIAMOND_INCLUSION = [Fraction(1, 2)] + [Fraction(5, 8)] * 4


def _labeled(net, seed):
    return LabeledNetwork.random(net, seed)


def _random_labeled(seed, max_n=30, multigraph=True):
    gen = rng.stream(seed)
    n = int(gen.integers(2, max_n + 1))
    net = random_connected_graph(n, int(gen.integers(0, 2 * n)), gen, multigraph=multigraph)
    return LabeledNetwork.random(net, seed)


def test_triangle_inclusion():
    assert np.allclose(edge_inclusion_oracle(cycle_graph(3)), 2 / 3)


def test_diamond_oracle_matches_enumeration():
    trees = [c for c in itertools.combinations(range(5), 3)
             if SpanningSubgraph(DIAMOND, frozenset(c)).is_spanning_tree()]
    assert len(trees) == 8
    counted = [Fraction(sum(e in t for t in trees), 8) for e in range(5)]
    assert counted == DIAMOND_INCLUSION
    assert np.allclose(edge_inclusion_oracle(DIAMOND), [float(x) for x in DIAMOND_INCLUSION])


def test_wilson_returns_spanning_trees():
    for i in range(50):
        t = wilson_ust(DIAMOND, seed=1, index=i)
        assert t.is_spanning_tree()


def test_wilson_triangle_uniform():
    draw = wilson_sampler(cycle_graph(3))
    counts = {}
    for i in range(6000):
        t = draw(0, i).edges
        counts[t] = counts.get(t, 0) + 1
    assert len(counts) == 3
    assert all(abs(c / 6000 - 1 / 3) < 4 * np.sqrt(2 / 9 / 6000) for c in counts.values())


def test_wilson_deterministic():
    assert wilson_ust(DIAMOND, seed=4, index=2) == wilson_ust(DIAMOND, seed=4, index=2)


def test_wilson_weighted_frequencies():
    w = [3.0, 1.0, 1.0, 2.0, 0.5]
    out = edge_frequency_check(DIAMOND, 4000, seed=2, weights=w)
    assert out["ok"]


def test_edge_frequency_check_diamond():
    assert edge_frequency_check(DIAMOND, 4000, seed=0)["ok"]


def test_wilson_disconnected():
    with pytest.raises(DisconnectedError):
        wilson_ust(Network.from_pairs(3, [(0, 1)]))
    with pytest.raises(DisconnectedError):
        edge_inclusion_oracle(Network.from_pairs(3, [(0, 1)]))


def test_ust_degree_stats_tree_is_exact():
    # a tree is its own spanning tree, so every draw has mean degree 2 - 2/n
    rep = ust_degree_stats([path_graph(5)], 200, seed=0)[0]
    assert rep["exact"] == pytest.approx(1.6)
    assert abs(rep["mean"] - 1.6) < 4 * rep["se"]


def test_ust_degree_stats_complete():
    rep = ust_degree_stats([complete_graph(6)], 3000, seed=1, ball_radius=1, edge_check=True)[0]
    assert abs(rep["z"]) < 3
    assert rep["edge_check"]["ok"]
    assert sum(rep["histogram"].values()) == 3000


def test_duplicate_labels_rejected():
    with pytest.raises(DuplicateLabelError):
        LabeledNetwork(path_graph(3), (4, 4))
    with pytest.raises(ValueError):
        LabeledNetwork(path_graph(3), (4,))


def test_triangle_drops_heaviest():
    l = LabeledNetwork(cycle_graph(3), (1, 5, 9))
    assert fmsf_rule(l).edges == frozenset({0, 1})


def test_loops_never_kept():
    net = Network.from_pairs(2, [(0, 1), (1, 1)])
    assert fmsf_rule(LabeledNetwork(net, (5, 1))).edges == frozenset({0})


def test_wired_segment_drops_heaviest():
    # both ends wired to infinity: the segment closes a cycle through the boundary
    l = LabeledNetwork(path_graph(5), (3, 1, 4, 2))
    assert fmsf_rule(l).edges == frozenset(range(4))
    for method in ("union-find", "literal"):
        assert wmsf_rule(l, {0, 4}, method).edges == frozenset({0, 1, 3})
        assert wmsf_rule(l, {0}, method).edges == frozenset(range(4))


def test_wmsf_unknown_method():
    with pytest.raises(ValueError):
        wmsf_rule(LabeledNetwork(path_graph(2), (1,)), (), "other")


@given(st.integers(0, 2**31))
def test_free_rule_kruskal_invasion_agree(seed):
    l = _random_labeled(seed)
    f = fmsf_rule(l)
    assert f == kruskal_mst(l)
    assert f.is_spanning_tree()
    for start in (0, l.network.n - 1):
        assert invasion(l, start).subgraph(l.network) == f


@given(st.integers(0, 2**31))
def test_wired_inside_free(seed):
    l = _random_labeled(seed, max_n=15)
    gen = rng.stream(seed, 1)
    boundary = {int(v) for v in gen.integers(0, l.network.n, size=3)}
    a = wmsf_rule(l, boundary)
    assert a == wmsf_rule(l, boundary, "literal")
    assert a.edges <= fmsf_rule(l).edges
    assert a.is_forest()


def test_invasion_prefix_and_shortfall():
    l = LabeledNetwork(path_graph(4), (3, 1, 2))
    tr = invasion(l, 1, steps=2)
    assert tr.vertices == [1, 2, 3] and tr.edges == [1, 2]
    with pytest.raises(ValueError):
        invasion(l, 0, steps=4)


def test_msf_degree_finite_is_mst():
    rep = msf_degree_stats(uniform_root(cycle_graph(6)), 2, 300, seed=0)
    assert rep["mean"] == pytest.approx(5 / 3, abs=4 * rep["se"] + 1e-9)


def test_msf_degree_three_regular():
    rep = msf_degree_stats(ugw_sampler(OffspringDistribution.delta(2), 5), 4, 400, seed=3)
    assert 1.5 < rep["mean"] < 2.6


def test_subgraph_views():
    t = SpanningSubgraph(path_graph(3), {0, 1})
    assert t.degrees() == [1, 2, 1] and t.degree(1) == 2
    assert json.loads(t.to_json()) == {"edges": [0, 1]}
    assert t.subnetwork().m == 2
    assert not SpanningSubgraph(cycle_graph(3), {0, 1, 2}).is_forest()


def test_labeled_csv():
    l = LabeledNetwork(path_graph(3), (7, 2))
    assert l.to_csv().splitlines() == ["edge,label", "0,7", "1,2"]
