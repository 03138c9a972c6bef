"""Brute-force oracles: exhaustive small-graph corpora, enumeration laws,
and exact conditional-law comparisons.

These are the independent side of every dual-route check in the package:
samplers are validated against enumeration, Kirchhoff probabilities against
tree counting, and the conditioned sampler against the directly restricted
law.  Nothing here shares code with the fast paths it is checking.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations, permutations

import numpy as np

from . import _kernels, netcore
from .netcore import ElectricNetwork
from .sample import (enumerate_spanning_trees, quotient_network, walk_tables)

TALLY_EDGE_CAP = 20


def small_connected_graphs(max_n: int = 5, min_n: int = 2):
    """Every connected simple graph on min_n..max_n vertices, one labeled
    representative per isomorphism class, from exhaustive enumeration."""
    for n in range(min_n, max_n + 1):
        pairs = list(combinations(range(n), 2))
        seen = set()
        for mask in range(1 << len(pairs)):
            edges = [pairs[i] for i in range(len(pairs)) if mask >> i & 1]
            if len(edges) < n - 1 or not _connected(n, edges):
                continue
            key = min(
                tuple(sorted((min(p[u], p[v]), max(p[u], p[v])) for u, v in edges))
                for p in permutations(range(n)))
            if key in seen:
                continue
            seen.add(key)
            yield n, edges


def _connected(n, edges):
    if n == 1:
        return True
    uf = list(range(n))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    comps = n
    for u, v in edges:
        ru, rv = find(u), find(v)
        if ru != rv:
            uf[ru] = rv
            comps -= 1
    return comps == 1


@dataclass
class OracleRun:
    """Samplers tallied against the exact enumeration law on one network."""
    net: ElectricNetwork
    tree_masks: np.ndarray
    exact_probs: np.ndarray
    counts: dict
    samples: int
    z: float = 0.0

    def tv(self, sampler: str) -> float:
        emp = self.counts[sampler] / self.samples
        return 0.5 * float(np.abs(emp - self.exact_probs).sum())

    def edge_marginals_exact(self) -> np.ndarray:
        member = self._membership()
        return member.T @ self.exact_probs

    def edge_marginals_empirical(self, sampler: str) -> np.ndarray:
        member = self._membership()
        return member.T @ (self.counts[sampler] / self.samples)

    def _membership(self) -> np.ndarray:
        m = self.net.m
        out = np.zeros((len(self.tree_masks), m))
        for i, mask in enumerate(self.tree_masks):
            for e in range(m):
                if mask >> e & 1:
                    out[i, e] = 1.0
        return out

    def enumeration_total_weight(self) -> float:
        """sum over trees of the conductance product (the partition function)."""
        return float(self.z)


def oracle_run(net: ElectricNetwork, samples: int, rng,
               samplers=("wilson", "aldous_broder")) -> OracleRun:
    """Tally both samplers against the enumerated law via edge bitmasks."""
    if net.m > TALLY_EDGE_CAP:
        raise ValueError(f"bitmask tally limited to m <= {TALLY_EDGE_CAP}")
    listed = enumerate_spanning_trees(net)
    masks = []
    weights = []
    for tree, w in listed:
        mask = 0
        for e in tree.edge_indices:
            mask |= 1 << int(e)
        masks.append(mask)
        weights.append(w)
    order = np.argsort(masks)
    masks = np.asarray(masks, dtype=np.int64)[order]
    weights = np.asarray(weights)[order]
    z = weights.sum()
    probs = weights / z

    tables = walk_tables(net)
    counts = {}
    budget = max(10_000_000, samples * 10_000)
    for name in samplers:
        kern = (_kernels.wilson_tally if name == "wilson"
                else _kernels.aldous_broder_tally)
        tally = np.zeros(1 << net.m, dtype=np.int64)
        steps = kern(tables.indptr, tables.nbr_vertex, tables.nbr_edge,
                     tables.cumw, net.n, rng, samples, tally, budget)
        if steps < 0:
            raise RuntimeError("tally sampler exceeded its step budget")
        observed = np.flatnonzero(tally)
        if not np.isin(observed, masks).all():
            raise AssertionError("sampler produced a non-spanning-tree mask")
        counts[name] = tally[masks].astype(np.float64)
        if counts[name].sum() != samples:
            raise AssertionError("tally lost samples")
    return OracleRun(net=net, tree_masks=masks, exact_probs=probs,
                     counts=counts, samples=samples, z=z)


# ---------------------------------------------------------------------------
# exact conditional-law comparison (spatial Markov property)
# ---------------------------------------------------------------------------

def conditional_law_by_restriction(net: ElectricNetwork, A: set, B: set) -> dict:
    """Enumerate trees of G, keep those containing A and avoiding B,
    renormalize.  The direct definition of the conditional law."""
    out = {}
    z = 0.0
    for tree, w in enumerate_spanning_trees(net):
        s = tree.index_set
        if A <= s and not (B & s):
            out[s] = w
            z += w
    if z == 0:
        raise ValueError("conditioning event has probability zero")
    return {k: v / z for k, v in out.items()}


def conditional_law_by_quotient(net: ElectricNetwork, A: set, B: set) -> dict:
    """The law the quotient construction induces: sample on (G/A) minus B,
    expand merged parallel classes proportionally to conductance, union A."""
    quotient, members, _ = quotient_network(net, A, B)
    base = frozenset(A)
    if quotient is None:
        return {base: 1.0}
    out = {}
    z = 0.0
    for qtree, _ in enumerate_spanning_trees(quotient):
        choices = [members[int(qe)] for qe in qtree.edge_indices]
        stack = [(0, [], 1.0)]
        while stack:
            depth, chosen, w = stack.pop()
            if depth == len(choices):
                key = base | frozenset(chosen)
                out[key] = out.get(key, 0.0) + w
                z += w
                continue
            for orig in choices[depth]:
                stack.append((depth + 1, chosen + [orig],
                              w * float(net.conductance[orig])))
    return {k: v / z for k, v in out.items()}


def conditional_law_exact_gap(seed: int = 0, trials: int = 12,
                              max_n: int = 5) -> float:
    """Worst absolute probability gap between the restricted law and the
    quotient law over random graphs and conditioning sets."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9004,)))
    corpora = [gc for gc in small_connected_graphs(max_n=max_n) if gc[0] >= 3]
    worst = 0.0
    done = 0
    attempt = 0
    while done < trials and attempt < 50 * trials:
        attempt += 1
        n, edges = corpora[int(rng.integers(0, len(corpora)))]
        c = rng.uniform(0.1, 10.0, size=len(edges))
        net = netcore.build_network(n, [(u, v, w) for (u, v), w in zip(edges, c)])
        m = net.m
        A = set()
        B = set()
        for e in range(m):
            r = rng.random()
            if r < 0.25:
                A.add(e)
            elif r < 0.45:
                B.add(e)
        try:
            law_a = conditional_law_by_restriction(net, A, B)
            law_b = conditional_law_by_quotient(net, A, B)
        except ValueError:
            continue
        keys = set(law_a) | set(law_b)
        gap = max(abs(law_a.get(k, 0.0) - law_b.get(k, 0.0)) for k in keys)
        worst = max(worst, gap)
        done += 1
    if done < trials:
        raise RuntimeError("could not draw enough valid conditioning instances")
    return worst


# ---------------------------------------------------------------------------
# negative association
# ---------------------------------------------------------------------------

def negative_association_worst_violation(seed: int = 0, max_n: int = 4,
                                         weightings: int = 2,
                                         max_subset: int = 3) -> float:
    """max over graphs, conductances, and edge subsets S (|S| in {2,3}) of
    P(S subset of T) - prod_e P(e in T); nonpositive when negative
    association holds."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9005,)))
    worst = -np.inf
    for n, edges in small_connected_graphs(max_n=max_n):
        for _ in range(weightings):
            c = rng.uniform(0.1, 10.0, size=len(edges))
            net = netcore.build_network(n, [(u, v, w)
                                            for (u, v), w in zip(edges, c)])
            listed = enumerate_spanning_trees(net)
            z = sum(w for _, w in listed)
            single = np.zeros(net.m)
            for tree, w in listed:
                for e in tree.edge_indices:
                    single[e] += w / z
            for size in range(2, max_subset + 1):
                for S in combinations(range(net.m), size):
                    joint = sum(w for tree, w in listed
                                if set(S) <= tree.index_set) / z
                    worst = max(worst, joint - float(np.prod(single[list(S)])))
    return float(worst)
