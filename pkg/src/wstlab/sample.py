"""Exact spanning-tree samplers and oracles.

Wilson and Aldous-Broder draw from P(T) proportional to the product of edge
conductances over T; Kruskal gives minimum / maximum spanning trees; a
contraction-deletion enumerator serves as the brute-force oracle on small
graphs; and the spatial Markov property turns conditioning on forced-in /
forced-out edge sets into plain sampling on a quotient network.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from . import _kernels
from .netcore import DisconnectedError, ElectricNetwork, NetworkError

MAX_WALK_STEPS = 10_000_000_000

ENUMERATION_VERTEX_CAP = 12


class SamplerStallError(RuntimeError):
    """Walk exceeded the step budget; the chain is effectively stuck."""


class TreeError(ValueError):
    """Edge set is not a spanning tree of the network."""


# ---------------------------------------------------------------------------
# reproducible randomness
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RngStream:
    """Named stream of randomness: (seed, stream) determines every draw.

    Distinct stream ids derived from one master seed give independent-quality
    streams via ``numpy.random.SeedSequence`` spawn keys; the generator object
    carries the position counter.
    """
    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.default_rng(
            np.random.SeedSequence(self.seed, spawn_key=(self.stream,)))

    def substream(self, k: int) -> "RngStream":
        # flat substream layout: one level of spawn keys per replica
        return RngStream(self.seed, (self.stream << 20) + 1 + k)


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    return np.random.default_rng(rng)


# ---------------------------------------------------------------------------
# spanning trees
# ---------------------------------------------------------------------------

class SpanningTree:
    """Edge-index subset of a network that spans all vertices acyclically.

    Carries a parent array rooted at vertex 0 (derived at construction, which
    also verifies edge count, acyclicity, and spanning).
    """

    __slots__ = ("n", "edge_indices", "edge_u", "edge_v", "parent",
                 "parent_edge", "_index_set")

    def __init__(self, net: ElectricNetwork, edge_indices,
                 _parent=None, _parent_edge=None):
        idx = np.sort(np.asarray(edge_indices, dtype=np.int64))
        if len(idx) != net.n - 1:
            raise TreeError(f"spanning tree needs {net.n - 1} edges, got {len(idx)}")
        if len(idx) and (len(np.unique(idx)) != len(idx) or idx[0] < 0
                         or idx[-1] >= net.m):
            raise TreeError("edge indices must be distinct valid indices")
        self.n = net.n
        self.edge_indices = idx
        self.edge_u = net.edge_u[idx]
        self.edge_v = net.edge_v[idx]
        if _parent is not None:
            self.parent = _parent
            self.parent_edge = _parent_edge
        else:
            self.parent, self.parent_edge = _orient(self.n, self.edge_u,
                                                    self.edge_v, idx)
        self._index_set = None

    @property
    def index_set(self) -> frozenset:
        if self._index_set is None:
            self._index_set = frozenset(int(i) for i in self.edge_indices)
        return self._index_set

    def contains_edge(self, edge_index: int) -> bool:
        return int(edge_index) in self.index_set

    def adjacency(self):
        """Children lists plus parent, for tree-metric traversals."""
        children = [[] for _ in range(self.n)]
        for v in range(self.n):
            p = self.parent[v]
            if p >= 0:
                children[p].append(v)
        return children

    def depths(self) -> np.ndarray:
        return _kernels.tree_depths(self.parent, self.n)

    def __eq__(self, other):
        return (isinstance(other, SpanningTree)
                and np.array_equal(self.edge_indices, other.edge_indices))

    def __hash__(self):
        return hash(self.edge_indices.tobytes())

    def __repr__(self):
        return f"SpanningTree(n={self.n}, edges={list(self.edge_indices)})"


def _orient(n, eu, ev, idx):
    """Root the edge set at vertex 0; rejects cycles and non-spanning sets."""
    adj_v = [[] for _ in range(n)]
    for k in range(len(idx)):
        a, b, e = int(eu[k]), int(ev[k]), int(idx[k])
        adj_v[a].append((b, e))
        adj_v[b].append((a, e))
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=bool)
    seen[0] = True
    queue = [0]
    count = 1
    while queue:
        u = queue.pop()
        for v, e in adj_v[u]:
            if not seen[v]:
                seen[v] = True
                parent[v] = u
                parent_edge[v] = e
                count += 1
                queue.append(v)
    if count != n:
        raise TreeError("edge set does not span all vertices")
    return parent, parent_edge


def tree_to_line(tree: SpanningTree, net: ElectricNetwork | None = None,
                 expand: bool = False) -> str:
    """One-line tree format: space-separated edge indices, optionally with
    a (u,v) expansion for debugging."""
    parts = [str(int(i)) for i in tree.edge_indices]
    if expand:
        parts += [f"({u},{v})" for u, v in zip(tree.edge_u, tree.edge_v)]
    return " ".join(parts)


# ---------------------------------------------------------------------------
# walk tables
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkTables:
    """Per-vertex cumulative transition probabilities aligned to the CSR."""
    indptr: np.ndarray
    nbr_vertex: np.ndarray
    nbr_edge: np.ndarray
    cumw: np.ndarray


def walk_tables(net: ElectricNetwork, log_conductance=None) -> WalkTables:
    """Build normalized transition tables, optionally from log conductances.

    Log inputs are max-subtracted per vertex before exponentiation, so
    arbitrarily large conductance ratios cannot underflow the row total.
    """
    if net.m == 0:
        empty = np.zeros(0)
        return WalkTables(net.indptr, net.nbr_vertex, net.nbr_edge, empty)
    start = np.asarray(net.indptr[:-1])
    end = np.asarray(net.indptr[1:])
    sizes = end - start
    if np.any(sizes == 0):
        raise DisconnectedError("isolated vertex has no transitions")
    if log_conductance is None:
        w = net.conductance[net.nbr_edge]
    else:
        lw = np.asarray(log_conductance, dtype=np.float64)[net.nbr_edge]
        rowmax = np.maximum.reduceat(lw, start)
        w = np.exp(lw - np.repeat(rowmax, sizes))
    cs = np.cumsum(w)
    before_row = np.concatenate(([0.0], cs))[start]
    total = cs[end - 1] - before_row
    cumw = (cs - np.repeat(before_row, sizes)) / np.repeat(total, sizes)
    cumw[end - 1] = 1.0  # guard searchsorted against roundoff at the top end
    return WalkTables(net.indptr, net.nbr_vertex, net.nbr_edge, cumw)


# ---------------------------------------------------------------------------
# samplers
# ---------------------------------------------------------------------------

def wilson_sample(net: ElectricNetwork, rng, tables: WalkTables | None = None,
                  max_steps: int = MAX_WALK_STEPS) -> SpanningTree:
    """Exact draw from P(T) proportional to the product of conductances.

    Loop-erased random walks rooted at vertex 0; the walk steps from v to u
    with probability c(v,u)/C_v.
    """
    rng = as_generator(rng)
    t = tables or walk_tables(net)
    parent, parent_edge, steps = _kernels.wilson_parents(
        t.indptr, t.nbr_vertex, t.nbr_edge, t.cumw, net.n, rng, max_steps)
    if steps < 0:
        raise SamplerStallError(f"Wilson walk exceeded {max_steps} steps")
    return SpanningTree(net, parent_edge[1:], _parent=parent,
                        _parent_edge=parent_edge)


def aldous_broder_sample(net: ElectricNetwork, rng,
                         tables: WalkTables | None = None,
                         max_steps: int = MAX_WALK_STEPS) -> SpanningTree:
    """Same target law as wilson_sample via first-entry edges of a cover walk."""
    rng = as_generator(rng)
    t = tables or walk_tables(net)
    parent, parent_edge, steps = _kernels.aldous_broder_parents(
        t.indptr, t.nbr_vertex, t.nbr_edge, t.cumw, net.n, rng, max_steps)
    if steps < 0:
        raise SamplerStallError(f"cover walk exceeded {max_steps} steps")
    return SpanningTree(net, parent_edge[1:], _parent=parent,
                        _parent_edge=parent_edge)


def kruskal_min(net: ElectricNetwork, labels) -> SpanningTree:
    """Minimum spanning tree under per-edge labels; ties broken by edge index."""
    labels = np.asarray(labels, dtype=np.float64)
    if labels.shape != (net.m,):
        raise ValueError(f"need {net.m} labels")
    if not np.all(np.isfinite(labels)):
        raise ValueError("labels must be finite")
    order = np.argsort(labels, kind="stable")
    keep = _kernels.kruskal_select(order, net.edge_u, net.edge_v, net.n)
    return SpanningTree(net, np.flatnonzero(keep))


def max_st(net: ElectricNetwork) -> SpanningTree:
    """Spanning tree maximizing the product of conductances.

    Kruskal on descending c(e); equal conductances resolve to the
    lexicographically-first tree by stable edge index.
    """
    order = np.argsort(-net.conductance, kind="stable")
    keep = _kernels.kruskal_select(order, net.edge_u, net.edge_v, net.n)
    return SpanningTree(net, np.flatnonzero(keep))


# ---------------------------------------------------------------------------
# exhaustive enumeration (the oracle)
# ---------------------------------------------------------------------------

def enumerate_spanning_trees(net: ElectricNetwork, vertex_cap: int = ENUMERATION_VERTEX_CAP):
    """All spanning trees with their conductance products, by
    contraction-deletion.  Guarded to small graphs."""
    if net.n > vertex_cap:
        raise ValueError(f"enumeration guarded to n <= {vertex_cap}")
    edge_lists = _enumerate_tree_indices(
        net.n, list(zip(range(net.m), net.edge_u, net.edge_v)))
    out = []
    for idx in edge_lists:
        w = float(np.prod(net.conductance[np.asarray(idx, dtype=np.int64)])) \
            if idx else 1.0
        out.append((SpanningTree(net, idx), w))
    return out


def _enumerate_tree_indices(n_vertices, edges, cap=None):
    """Spanning trees of a multigraph given as (id, a, b) triples.

    Returns lists of edge ids.  `cap` bounds the number of trees produced;
    exceeding it raises RuntimeError.
    """
    sink: list = []

    def rec(nv, es, acc):
        if cap is not None and len(sink) > cap:
            raise RuntimeError("spanning tree count exceeded cap")
        if nv == 1:
            sink.append(list(acc))
            return
        if len(es) < nv - 1:
            return
        if not _mg_connected(nv, es):
            return
        eid, a, b = es[0]
        rest = es[1:]
        # contract (a <- b)
        contracted = []
        for fid, x, y in rest:
            x2 = a if x == b else x
            y2 = a if y == b else y
            if x2 != y2:
                contracted.append((fid, x2 if x2 < y2 else y2,
                                   y2 if x2 < y2 else x2))
        relabeled, nv2 = _mg_relabel(nv, contracted, drop=b)
        acc.append(eid)
        rec(nv2, relabeled, acc)
        acc.pop()
        # delete
        rec(nv, rest, acc)

    rec(n_vertices, [(i, min(a, b), max(a, b)) for i, a, b in edges], [])
    return sink


def _mg_connected(nv, es):
    if nv == 1:
        return True
    uf = list(range(nv))

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    comps = nv
    for _, a, b in es:
        ra, rb = find(a), find(b)
        if ra != rb:
            uf[ra] = rb
            comps -= 1
            if comps == 1:
                return True
    return comps == 1


def _mg_relabel(nv, es, drop):
    remap = list(range(nv))
    for v in range(drop + 1, nv):
        remap[v] = v - 1
    return [(i, min(remap[a], remap[b]), max(remap[a], remap[b]))
            for i, a, b in es], nv - 1


# ---------------------------------------------------------------------------
# conditioned sampling via the spatial Markov property
# ---------------------------------------------------------------------------

def conditioned_sample(net: ElectricNetwork, forced_in, forced_out,
                       rng) -> SpanningTree:
    """Sample the tree law conditioned on {A in T} and {B disjoint from T}.

    Contract the forced-in edges A, delete the forced-out edges B, sample the
    unconditioned law on the quotient, and return the union with A.  A must
    be acyclic, disjoint from B, and deleting B must keep the graph
    connected.
    """
    rng = as_generator(rng)
    A = _normalize_edges(net, forced_in)
    B = _normalize_edges(net, forced_out)
    if A & B:
        raise ValueError("forced-in and forced-out edge sets must be disjoint")
    quotient, merged_members, comp_of = quotient_network(net, A, B)
    if quotient is None:
        chosen: list[int] = []
    else:
        qtree = wilson_sample(quotient, rng)
        chosen = []
        for qe in qtree.edge_indices:
            members = merged_members[qe]
            if len(members) == 1:
                chosen.append(members[0])
            else:
                w = net.conductance[np.asarray(members)]
                chosen.append(int(rng.choice(members, p=w / w.sum())))
    return SpanningTree(net, sorted(A) + chosen)


def _normalize_edges(net, edges):
    out = set()
    for e in edges:
        if isinstance(e, (tuple, list)):
            out.add(net.edge_index(e[0], e[1]))
        else:
            out.add(int(e))
    return out


def quotient_network(net: ElectricNetwork, contract: set, delete: set):
    """(G/A) minus B with parallel edges merged by conductance sum.

    Returns (quotient network or None when A spans, member lists mapping each
    quotient edge back to original edge indices, component id per vertex).
    Raises on cyclic A or when deletion disconnects.
    """
    uf = np.arange(net.n)

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for e in sorted(contract):
        ra, rb = find(net.edge_u[e]), find(net.edge_v[e])
        if ra == rb:
            raise ValueError("forced-in edge set contains a cycle")
        uf[ra] = rb
    roots = np.array([find(v) for v in range(net.n)])
    uniq, comp_of = np.unique(roots, return_inverse=True)
    k = len(uniq)
    groups: dict = {}
    for e in range(net.m):
        if e in contract or e in delete:
            continue
        a, b = comp_of[net.edge_u[e]], comp_of[net.edge_v[e]]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        groups.setdefault(key, []).append(e)
    if k == 1:
        return None, [], comp_of
    keys = sorted(groups)
    if len(keys) < k - 1:
        raise DisconnectedError("deleting the forced-out edges disconnects the graph")
    eu = np.array([a for a, _ in keys], dtype=np.int64)
    ev = np.array([b for _, b in keys], dtype=np.int64)
    c = np.array([net.conductance[np.asarray(groups[key])].sum() for key in keys])
    adj = csr_matrix((np.ones(2 * len(keys)),
                      (np.concatenate([eu, ev]), np.concatenate([ev, eu]))),
                     shape=(k, k))
    ncomp, _ = connected_components(adj, directed=False)
    if ncomp != 1:
        raise DisconnectedError("deleting the forced-out edges disconnects the graph")
    quotient = ElectricNetwork(k, eu, ev, c, _validated=True)
    return quotient, [groups[key] for key in keys], comp_of
