import numpy as np
import pytest

from wstlab import netcore, resist
from wstlab.expcli import random_test_network
from wstlab.netcore import build_network, gen_complete
from wstlab.resist import (ResistanceSolver, effective_resistance_to_set,
                           nash_williams_bound, partition_function_log)
from wstlab.sample import enumerate_spanning_trees


@pytest.fixture(scope="module")
def triangle():
    return build_network(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])


def test_single_edge_resistance():
    net = build_network(2, [(0, 1, 7.0)])
    s = ResistanceSolver(net)
    assert s.effective_resistance(0, 1) == pytest.approx(1 / 7, abs=1e-14)


def test_triangle_resistances(triangle):
    s = ResistanceSolver(triangle)
    assert s.effective_resistance(0, 1) == pytest.approx(5 / 11, abs=1e-12)
    assert s.effective_resistance(1, 2) == pytest.approx(4 / 11, abs=1e-12)
    assert s.effective_resistance(0, 2) == pytest.approx(3 / 11, abs=1e-12)
    for v in range(3):
        assert s.effective_resistance(v, v) == 0.0


def test_resistance_to_set(triangle):
    s = ResistanceSolver(triangle)
    # singleton coincides with the pairwise value
    assert effective_resistance_to_set(s, 0, {1}) == pytest.approx(
        s.effective_resistance(0, 1), abs=1e-12)
    # unit path, contract both ends: two unit edges in parallel
    path = build_network(3, [(0, 1, 1.0), (1, 2, 1.0)])
    sp = ResistanceSolver(path)
    assert effective_resistance_to_set(sp, 1, {0, 2}) == pytest.approx(0.5, abs=1e-12)
    # K4 with S = {1,2}: the contraction oracle gives 3/8 (two parallel unit
    # edges to the supernode plus the series detour through vertex 3)
    k4 = gen_complete(4)
    s4 = ResistanceSolver(k4)
    assert effective_resistance_to_set(s4, 0, {1, 2}) == pytest.approx(3 / 8, abs=1e-12)
    with pytest.raises(ValueError):
        effective_resistance_to_set(s4, 0, set())
    with pytest.raises(ValueError):
        effective_resistance_to_set(s4, 0, {0, 1})


def test_kirchhoff_probabilities(triangle):
    s = ResistanceSolver(triangle)
    assert s.kirchhoff_edge_probability((0, 1)) == pytest.approx(5 / 11, abs=1e-12)
    assert np.allclose(s.kirchhoff_probabilities(),
                       [5 / 11, 8 / 11, 9 / 11], atol=1e-12)
    # bridge edge is in every spanning tree
    star = build_network(4, [(0, 1, 2.0), (0, 2, 5.0), (0, 3, 0.5)])
    ss = ResistanceSolver(star)
    for e in range(star.m):
        assert ss.kirchhoff_edge_probability(e) == pytest.approx(1.0, abs=1e-12)
    # K4 unit: 16 trees, every edge in half of them
    k4 = ResistanceSolver(gen_complete(4))
    assert np.allclose(k4.kirchhoff_probabilities(), 0.5, atol=1e-12)


def test_foster_sum(triangle):
    s = ResistanceSolver(triangle)
    assert s.foster_sum() == pytest.approx(2.0, abs=1e-12)
    tree = build_network(5, [(0, 1, 3.0), (1, 2, 0.2), (1, 3, 9.0), (3, 4, 1.0)])
    assert ResistanceSolver(tree).foster_sum() == pytest.approx(4.0, abs=1e-12)
    assert ResistanceSolver(gen_complete(4)).foster_sum() == pytest.approx(3.0, abs=1e-12)


def test_commute_time(triangle):
    s = ResistanceSolver(triangle)
    assert s.commute_time(0, 1) == pytest.approx(60 / 11, abs=1e-12)
    edge = ResistanceSolver(build_network(2, [(0, 1, 1.0)]))
    assert edge.commute_time(0, 1) == pytest.approx(2.0, abs=1e-14)
    k3 = ResistanceSolver(gen_complete(3))
    assert k3.commute_time(0, 2) == pytest.approx(4.0, abs=1e-12)
    with pytest.raises(ValueError):
        s.commute_time(1, 1)


def test_partition_function_log(triangle):
    assert partition_function_log(triangle) == pytest.approx(np.log(11.0), abs=1e-12)
    assert partition_function_log(gen_complete(4)) == pytest.approx(
        np.log(16.0), abs=1e-12)
    tree = build_network(4, [(0, 1, 2.0), (1, 2, 5.0), (1, 3, 0.25)])
    assert partition_function_log(tree) == pytest.approx(
        np.log(2.0) + np.log(5.0) + np.log(0.25), abs=1e-12)


def test_matrix_tree_vs_enumeration_small_graphs():
    from itertools import combinations
    from wstlab.oracles import _connected, small_connected_graphs
    rng = np.random.default_rng(3)
    nets = []
    for n, edges in small_connected_graphs(max_n=5):
        c = rng.uniform(0.1, 10.0, size=len(edges))
        nets.append(build_network(n, [(u, v, w) for (u, v), w in zip(edges, c)]))
    # plus random labeled 6-vertex connected graphs
    pairs = list(combinations(range(6), 2))
    made = 0
    while made < 120:
        mask = rng.random(len(pairs)) < rng.uniform(0.35, 0.9)
        edges = [pairs[i] for i in range(len(pairs)) if mask[i]]
        if len(edges) < 5 or not _connected(6, edges):
            continue
        c = rng.uniform(0.1, 10.0, size=len(edges))
        nets.append(build_network(6, [(u, v, w) for (u, v), w in zip(edges, c)]))
        made += 1
    for net in nets:
        z_enum = sum(w for _, w in enumerate_spanning_trees(net))
        z_mtt = np.exp(partition_function_log(net))
        assert z_mtt == pytest.approx(z_enum, rel=1e-9)


def test_nash_williams_bound(triangle):
    s = ResistanceSolver(triangle)
    # split-edge cutset bound: 1/(C_0 + c) + 1/(C_1 + c) = 1/5 + 1/4
    b01 = nash_williams_bound(triangle, 0, 1)
    assert b01 == pytest.approx(9 / 20, abs=1e-14)
    # the coarse form is weaker but also valid
    assert 1 / 8 + 1 / 6 <= s.effective_resistance(0, 1) + 1e-14
    assert b01 <= s.effective_resistance(0, 1) + 1e-12
    # single edge: bound is tight
    edge = build_network(2, [(0, 1, 4.0)])
    assert nash_williams_bound(edge, 0, 1) == pytest.approx(1 / 4, abs=1e-14)
    # unit complete graph: coarse bound 1/(n-1) below the true 2/n
    for n in (5, 9):
        k = gen_complete(n)
        sk = ResistanceSolver(k)
        r = sk.effective_resistance(0, 1)
        assert r == pytest.approx(2 / n, abs=1e-12)
        assert 1 / (n - 1) <= r + 1e-14
        assert nash_williams_bound(k, 0, 1) <= r + 1e-12


def test_lower_bound_holds_on_random_networks():
    rng = np.random.default_rng(17)
    for _ in range(30):
        net = random_test_network(rng, int(rng.integers(5, 40)))
        s = ResistanceSolver(net)
        reff = s.edge_resistances()
        cu = net.vertex_strength[net.edge_u]
        cv = net.vertex_strength[net.edge_v]
        assert np.all(reff >= 0.5 / cu + 0.5 / cv - 1e-10)


def test_metric_and_rayleigh_properties():
    rng = np.random.default_rng(23)
    for _ in range(10):
        n = int(rng.integers(6, 25))
        net = random_test_network(rng, n)
        s = ResistanceSolver(net)
        for _ in range(30):
            u, v, w = rng.integers(0, n, size=3)
            ruw = s.effective_resistance(int(u), int(w))
            ruv = s.effective_resistance(int(u), int(v))
            rvw = s.effective_resistance(int(v), int(w))
            assert ruw <= ruv + rvw + 1e-10
        e = int(rng.integers(0, net.m))
        c2 = net.conductance.copy()
        c2[e] *= 2.0
        s2 = ResistanceSolver(net.with_conductances(c2))
        for _ in range(15):
            u, v = rng.integers(0, n, size=2)
            assert (s2.effective_resistance(int(u), int(v))
                    <= s.effective_resistance(int(u), int(v)) + 1e-10)


def test_foster_identity_random_networks_medium():
    rng = np.random.default_rng(29)
    for n in (50, 200, 600):
        net = random_test_network(rng, n)
        s = ResistanceSolver(net)
        assert abs(s.foster_sum() - (n - 1)) <= 1e-8 * (n - 1)


def test_iterative_mode_agrees_with_dense():
    rng = np.random.default_rng(31)
    net = random_test_network(rng, 60)
    dense = ResistanceSolver(net, mode="dense")
    it = ResistanceSolver(net, mode="iterative", tol=1e-11)
    for _ in range(12):
        u, v = rng.integers(0, 60, size=2)
        assert it.effective_resistance(int(u), int(v)) == pytest.approx(
            dense.effective_resistance(int(u), int(v)), rel=1e-7, abs=1e-10)
    assert abs(it.foster_sum() - 59) <= 1e-6 * 59


def test_set_resistance_approximation_shrinks_with_n():
    # On unit complete graphs the resistance from one marked vertex to the
    # remaining k-1 marked ones approaches 1/s_k + 1/sum_{j<k} s_j.
    gaps = []
    k = 4
    for n in (30, 90, 270):
        net = gen_complete(n)
        s = ResistanceSolver(net)
        strengths = np.full(k, float(n - 1))
        predicted = 1.0 / strengths[-1] + 1.0 / strengths[:-1].sum()
        actual = effective_resistance_to_set(s, k - 1, set(range(k - 1)))
        gaps.append(abs(actual - predicted))
    assert gaps[0] > gaps[1] > gaps[2]
    # weighted variant: distinct per-class strengths
    rng = np.random.default_rng(5)
    gaps_w = []
    for n in (30, 90, 270):
        iu, iv = np.triu_indices(n, k=1)
        c = np.ones(len(iu))
        weights = [2.0, 0.5, 1.5, 1.0]
        for cls in range(k):
            touch = (iu == cls) | (iv == cls)
            c[touch] *= weights[cls]
        net = netcore.ElectricNetwork(n, iu.astype(np.int64), iv.astype(np.int64), c)
        s = ResistanceSolver(net)
        strengths = net.vertex_strength[:k]
        predicted = 1.0 / strengths[-1] + 1.0 / strengths[:-1].sum()
        actual = effective_resistance_to_set(s, k - 1, set(range(k - 1)))
        gaps_w.append(abs(actual - predicted))
    assert gaps_w[0] > gaps_w[2]


def test_solver_guards():
    net = gen_complete(5)
    with pytest.raises(ValueError):
        ResistanceSolver(net, mode="magic")
    s = ResistanceSolver(net)
    with pytest.raises(netcore.NetworkError):
        s.kirchhoff_edge_probability(99)
