import itertools
from fractions import Fraction

import networkx as nx
import pytest
from hypothesis import given, strategies as st
from networkx.algorithms.isomorphism import GraphMatcher
from networkx.generators.atlas import graph_atlas_g

from umtp import rng
from umtp.canon import (CanonicalKey, automorphism_orbits, canonical_form, canonical_key,
                        rooted_distance)
from umtp.core import (IndeterminateDistance, Network, RootedNetwork, SizeCapExceeded, ball,
                       explore_ball)
from umtp.gen import (OffspringDistribution, complete_graph, config_model, cycle_graph,
                      path_graph, star_graph, ugw_sampler)

from .strategies import networks


def _atlas(max_n):
    for G in graph_atlas_g()[1:]:
        if G.number_of_nodes() <= max_n and nx.is_connected(G):
            yield G


def _from_nx(G):
    nodes = sorted(G.nodes())
    idx = {v: i for i, v in enumerate(nodes)}
    return Network.from_pairs(len(nodes), [(idx[u], idx[v]) for u, v in G.edges()])


def _permute(net, perm):
    marks = [None] * net.n
    for v, m in enumerate(net.vertex_marks):
        marks[perm[v]] = m
    return Network(tuple(marks), tuple((perm[u], perm[v], a, b) for u, v, a, b in net.edges))


def test_single_vertex_key_is_fixed():
    g = RootedNetwork(Network(((0,),), ()), 0)
    assert canonical_key(g) == canonical_key(RootedNetwork(Network(((0,),), ()), 0))
    assert canonical_key(g) != canonical_key(RootedNetwork(Network(((1,),), ()), 0))


def test_triangle_all_roots_equal():
    keys = {canonical_key(RootedNetwork.of(cycle_graph(3), v)) for v in range(3)}
    assert len(keys) == 1


def test_path_ends_vs_center():
    k = [canonical_key(RootedNetwork.of(path_graph(3), v)) for v in range(3)]
    assert k[0] == k[2] != k[1]


def test_key_hex_roundtrip():
    k = canonical_key(RootedNetwork.of(star_graph(3), 0))
    assert CanonicalKey.fromhex(k.hex()) == k
    assert k.hex() == k.hex().lower()


@given(networks(max_n=10), st.integers(0, 2**32))
def test_relabeling_invariance(net, seed):
    g = RootedNetwork.of(net, 0)
    key, rel = canonical_form(g)
    perm = rng.stream(seed).permutation(g.n).tolist()
    h = RootedNetwork(_permute(g.network, perm), perm[g.root])
    assert canonical_key(h) == key
    assert rel.root == 0 and canonical_key(rel) == key


def test_keys_match_networkx_rooted_isomorphism():
    # rooted graphs from the atlas (n <= 6); root carried as a node attribute
    rooted = []
    for G in _atlas(6):
        for r in G.nodes():
            H = G.copy()
            nx.set_node_attributes(H, {v: v == r for v in H}, "root")
            rooted.append((H, canonical_key(RootedNetwork.of(_from_nx(G), sorted(G).index(r)))))
    nm = lambda a, b: a["root"] == b["root"]
    groups = {}
    for H, k in rooted:
        groups.setdefault(k, []).append(H)
    for members in groups.values():
        for H in members[1:]:
            assert nx.is_isomorphic(members[0], H, node_match=nm)
    reps = [(m[0], k) for k, m in groups.items()]
    buckets = {}
    for H, k in reps:
        sig = (H.number_of_nodes(), H.number_of_edges(), tuple(sorted(d for _, d in H.degree())),
               next(H.degree(v) for v in H if H.nodes[v]["root"]))
        buckets.setdefault(sig, []).append(H)
    for hs in buckets.values():
        for a, b in itertools.combinations(hs, 2):
            assert not nx.is_isomorphic(a, b, node_match=nm)


def test_marks_separate_keys():
    a = Network(((), ()), ((0, 1, (1,), (2,)),))
    b = Network(((), ()), ((0, 1, (2,), (1,)),))
    assert canonical_key(RootedNetwork(a, 0)) != canonical_key(RootedNetwork(b, 0))
    assert canonical_key(RootedNetwork(a, 0)) == canonical_key(RootedNetwork(b, 1))


def test_multigraph_keys():
    double = Network.from_pairs(2, [(0, 1), (0, 1)])
    single = Network.from_pairs(2, [(0, 1)])
    loop = Network.from_pairs(1, [(0, 0)])
    keys = {canonical_key(RootedNetwork(x, 0)) for x in (double, single, loop)}
    assert len(keys) == 3


def test_distance_identical_is_zero():
    g = RootedNetwork.of(cycle_graph(4), 0)
    assert rooted_distance(g, g) == 0


def test_distance_vertex_vs_edge():
    v = RootedNetwork(Network(((),), ()), 0)
    e = RootedNetwork(path_graph(2), 0)
    assert rooted_distance(v, e) == Fraction(1, 2)


def test_distance_tree_vs_high_girth():
    tree, _ = explore_ball(ugw_sampler(OffspringDistribution.delta(2), 6).explore(0, 0), 6)
    # a vertex of a large random 3-regular graph whose radius-6 ball has no cycle
    big = config_model(20_000, OffspringDistribution.delta(2), seed=3)
    for v in range(big.n):
        g = ball(RootedNetwork(big, v), 7)
        if ball(g, 6).network.m == ball(g, 6).n - 1:
            break
    other = g
    with pytest.raises(IndeterminateDistance) as info:
        rooted_distance(tree, other)
    assert info.value.alpha_lower >= 6
    assert info.value.distance_upper <= Fraction(1, 7)


def test_distance_real_marks_tolerance():
    from umtp.core import real_mark
    a = RootedNetwork(Network(((), ()), ((0, 1, real_mark(0.0), real_mark(0.0)),)), 0)
    b = RootedNetwork(Network(((), ()), ((0, 1, real_mark(0.25), real_mark(0.25)),)), 0)
    # marks within 1/r for r < 4; the tie at r = 4 fails
    assert rooted_distance(a, b) == Fraction(1, 1 + 4)


@given(st.lists(networks(max_n=6, max_extra=4), min_size=3, max_size=3))
def test_distance_symmetry_and_ultrametric(nets):
    gs = [RootedNetwork.of(n, 0) for n in nets]
    d = lambda a, b: rooted_distance(a, b)
    for a, b in itertools.permutations(gs, 2):
        assert d(a, b) == d(b, a) >= 0
    a, b, c = gs
    assert d(a, c) <= max(d(a, b), d(b, c))


def test_orbits_path():
    rep = automorphism_orbits(path_graph(3))
    assert sorted(map(sorted, rep.orbits)) == [[0, 2], [1]]
    assert rep.automorphism_count == 2


def test_orbits_triangle():
    rep = automorphism_orbits(cycle_graph(3))
    assert len(rep.orbits) == 1 and rep.automorphism_count == 6


def test_orbits_marked_path():
    net = Network(((0,), (1,), (2,)), ((0, 1, (), ()), (1, 2, (), ())))
    rep = automorphism_orbits(net)
    assert len(rep.orbits) == 3 and rep.automorphism_count == 1


def test_orbit_cap():
    with pytest.raises(SizeCapExceeded):
        automorphism_orbits(path_graph(17))


def test_complete_graph_automorphisms():
    assert automorphism_orbits(complete_graph(8)).automorphism_count == 40320


def test_automorphisms_match_networkx():
    for G in _atlas(6):
        net = _from_nx(G)
        rep = automorphism_orbits(net)
        count = sum(1 for _ in GraphMatcher(G, G).isomorphisms_iter())
        assert rep.automorphism_count == count
        for orb in rep.orbits:
            assert len(orb) * rep.stabilizer_order[orb[0]] == count


@given(networks(max_n=8, max_extra=5))
def test_orbit_stabilizer_identity(net):
    rep = automorphism_orbits(net)
    assert sum(len(o) for o in rep.orbits) == net.n
    for orb in rep.orbits:
        assert len(orb) * rep.stabilizer_order[orb[0]] == rep.automorphism_count
        keys = {canonical_key(RootedNetwork.of(net, x)) for x in orb}
        assert len(keys) == 1
