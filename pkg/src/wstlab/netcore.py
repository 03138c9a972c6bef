"""Electric-network data model, graph generators, and balance checkers.

An electric network is a simple connected undirected graph together with a
strictly positive conductance per edge.  Everything downstream (resistance
solvers, spanning-tree samplers, census machinery) consumes the
:class:`ElectricNetwork` built here.  Networks are immutable after
construction, so they can be shared freely between workers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components


class NetworkError(ValueError):
    """Base class for malformed network input."""


class SelfLoopError(NetworkError):
    pass


class DuplicateEdgeError(NetworkError):
    pass


class NonpositiveConductanceError(NetworkError):
    pass


class DisconnectedError(NetworkError):
    """Input graph is not connected (distinct from malformed input)."""


class ElectricNetwork:
    """Simple connected graph with positive edge conductances.

    Edges are stored with ``u < v`` in a stable index order; every per-edge
    array in the package is indexed by that order.  ``vertex_strength[v]``
    caches ``C_v``, the sum of conductances incident to ``v``.
    """

    __slots__ = (
        "n", "m", "edge_u", "edge_v", "conductance", "vertex_strength",
        "indptr", "nbr_vertex", "nbr_edge", "_edge_id",
    )

    def __init__(self, n: int, edge_u, edge_v, conductance, _validated: bool = False):
        edge_u = np.asarray(edge_u, dtype=np.int64)
        edge_v = np.asarray(edge_v, dtype=np.int64)
        conductance = np.asarray(conductance, dtype=np.float64)
        if not _validated:
            _validate(n, edge_u, edge_v, conductance)
        self.n = int(n)
        self.m = len(edge_u)
        self.edge_u = edge_u
        self.edge_v = edge_v
        self.conductance = conductance
        self.vertex_strength = _strengths(n, edge_u, edge_v, conductance)
        self.indptr, self.nbr_vertex, self.nbr_edge = _adjacency(n, edge_u, edge_v)
        self._edge_id = None  # built lazily; rarely needed on big networks
        for a in (self.edge_u, self.edge_v, self.conductance,
                  self.vertex_strength, self.indptr, self.nbr_vertex, self.nbr_edge):
            a.setflags(write=False)

    # -- lookups -------------------------------------------------------

    def _edge_lookup(self):
        if self._edge_id is None:
            self._edge_id = {(int(u), int(v)): i
                             for i, (u, v) in enumerate(zip(self.edge_u, self.edge_v))}
        return self._edge_id

    def edge_index(self, u: int, v: int) -> int:
        """Index of edge (u, v); raises KeyError for non-edges."""
        if u > v:
            u, v = v, u
        return self._edge_lookup()[(int(u), int(v))]

    def has_edge(self, u: int, v: int) -> bool:
        if u > v:
            u, v = v, u
        return (int(u), int(v)) in self._edge_lookup()

    def neighbors(self, v: int) -> np.ndarray:
        return self.nbr_vertex[self.indptr[v]:self.indptr[v + 1]]

    def incident_edges(self, v: int) -> np.ndarray:
        return self.nbr_edge[self.indptr[v]:self.indptr[v + 1]]

    def degree(self, v: int) -> int:
        return int(self.indptr[v + 1] - self.indptr[v])

    def total_strength(self) -> float:
        """``sum_v C_v`` (twice the total conductance)."""
        return float(self.vertex_strength.sum())

    def edge_pairs(self):
        """Iterate (u, v, c) in stable edge order."""
        return zip(self.edge_u, self.edge_v, self.conductance)

    def with_conductances(self, conductance) -> "ElectricNetwork":
        """Same topology, new per-edge conductances."""
        c = np.asarray(conductance, dtype=np.float64)
        if c.shape != (self.m,):
            raise NetworkError(f"expected {self.m} conductances, got {c.shape}")
        if not np.all(np.isfinite(c)) or np.any(c <= 0):
            raise NonpositiveConductanceError("conductances must be positive and finite")
        return ElectricNetwork(self.n, self.edge_u, self.edge_v, c, _validated=True)

    def strength_consistent(self, rtol: float = 1e-12) -> bool:
        """Check the cached strengths against a fresh sum over edges."""
        fresh = _strengths(self.n, self.edge_u, self.edge_v, self.conductance)
        return bool(np.allclose(fresh, self.vertex_strength, rtol=rtol, atol=0.0))

    def __repr__(self):
        return f"ElectricNetwork(n={self.n}, m={self.m})"


def _validate(n, edge_u, edge_v, conductance):
    n = int(n)
    if n < 1:
        raise NetworkError("need at least one vertex")
    if len(edge_u) != len(edge_v) or len(edge_u) != len(conductance):
        raise NetworkError("edge arrays must have equal length")
    if len(edge_u) and (edge_u.min() < 0 or edge_v.min() < 0
                        or edge_u.max() >= n or edge_v.max() >= n):
        raise NetworkError("edge endpoint out of range")
    if np.any(edge_u == edge_v):
        raise SelfLoopError("self-loops are not allowed")
    if np.any(edge_u > edge_v):
        raise NetworkError("edges must be stored with u < v")
    if not np.all(np.isfinite(conductance)) or np.any(conductance <= 0):
        raise NonpositiveConductanceError("every conductance must be positive and finite")
    keys = edge_u * n + edge_v
    if len(np.unique(keys)) != len(keys):
        raise DuplicateEdgeError("parallel edges are not allowed")
    if n > 1:
        adj = csr_matrix((np.ones(2 * len(edge_u)),
                          (np.concatenate([edge_u, edge_v]),
                           np.concatenate([edge_v, edge_u]))), shape=(n, n))
        ncomp, _ = connected_components(adj, directed=False)
        if ncomp != 1:
            raise DisconnectedError(f"graph has {ncomp} components")
    elif len(edge_u):
        raise NetworkError("single-vertex graph cannot have edges")


def _strengths(n, edge_u, edge_v, conductance):
    s = np.zeros(n, dtype=np.float64)
    np.add.at(s, edge_u, conductance)
    np.add.at(s, edge_v, conductance)
    return s


def _adjacency(n, edge_u, edge_v):
    # CSR over both edge directions; within a vertex, neighbors appear in
    # stable edge-index order so RNG consumption is reproducible.
    m = len(edge_u)
    src = np.concatenate([edge_u, edge_v])
    dst = np.concatenate([edge_v, edge_u])
    eid = np.concatenate([np.arange(m), np.arange(m)])
    order = np.lexsort((eid, src))
    counts = np.bincount(src, minlength=n)
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    return indptr, dst[order], eid[order]


# ---------------------------------------------------------------------------
# construction and generators
# ---------------------------------------------------------------------------

def build_network(n: int, weighted_edges) -> ElectricNetwork:
    """Build a validated network from (u, v, c) triples.

    Endpoints are normalized to u < v.  Rejects self-loops, duplicates,
    non-positive conductances, and (with a distinct error) disconnected input.
    """
    if weighted_edges:
        eu, ev, c = [], [], []
        for u, v, w in weighted_edges:
            if u > v:
                u, v = v, u
            eu.append(u)
            ev.append(v)
            c.append(w)
    else:
        eu, ev, c = [], [], []
    return ElectricNetwork(n, np.array(eu, dtype=np.int64),
                           np.array(ev, dtype=np.int64),
                           np.array(c, dtype=np.float64))


def gen_complete(n: int, conductance: float = 1.0) -> ElectricNetwork:
    """Complete graph K_n with uniform conductance."""
    if n < 2:
        raise NetworkError("complete graph needs n >= 2")
    if conductance <= 0:
        raise NonpositiveConductanceError("conductance must be positive")
    iu, iv = np.triu_indices(n, k=1)
    c = np.full(len(iu), float(conductance))
    return ElectricNetwork(n, iu.astype(np.int64), iv.astype(np.int64), c,
                           _validated=True)


def gen_regular_plus_pendants(base: ElectricNetwork, m: int, f: int,
                              seed) -> ElectricNetwork:
    """Attach m extra vertices to a base network, f unit edges each.

    Each new vertex connects to f distinct old vertices chosen uniformly
    without replacement, which keeps the result simple.
    """
    if f == 0:
        raise NetworkError("f = 0 would disconnect the new vertices")
    if f > base.n:
        raise NetworkError("f cannot exceed the number of base vertices")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    eu = list(base.edge_u)
    ev = list(base.edge_v)
    c = list(base.conductance)
    for j in range(m):
        new_v = base.n + j
        targets = rng.choice(base.n, size=f, replace=False)
        for t in np.sort(targets):
            eu.append(int(t))
            ev.append(new_v)
            c.append(1.0)
    return ElectricNetwork(base.n + m, np.array(eu), np.array(ev), np.array(c))


def gen_glued_triangle_chain(n: int) -> ElectricNetwork:
    """Chain of n unit-conductance triangles glued along a path.

    Vertices 0..n form the spine; vertex n+i is the apex of triangle i.
    Triangle i (1-based) has edges (i-1, i), (i-1, n+i), (i, n+i).
    """
    if n < 1:
        raise NetworkError("need at least one triangle")
    eu, ev = [], []
    for i in range(1, n + 1):
        a_prev, a_cur, b = i - 1, i, n + i
        eu += [a_prev, a_prev, a_cur]
        ev += [a_cur, b, b]
    c = np.ones(3 * n)
    return ElectricNetwork(2 * n + 1, np.array(eu), np.array(ev), c)


def gen_expander_chain_with_leaves(d: int, copies: int, leaves: int = 0) -> ElectricNetwork:
    """Chain of K_{d+1} cliques joined by single bridges, plus pendant leaves.

    Leaves attach round-robin over the clique vertices for determinism.
    All conductances are 1.
    """
    if d < 2:
        raise NetworkError("clique size parameter d must be >= 2")
    if copies < 1:
        raise NetworkError("need at least one clique")
    if leaves < 0:
        raise NetworkError("leaves must be nonnegative")
    k = d + 1
    eu, ev = [], []
    for b in range(copies):
        off = b * k
        for i in range(k):
            for j in range(i + 1, k):
                eu.append(off + i)
                ev.append(off + j)
        if b + 1 < copies:
            # bridge: last vertex of this clique to first of the next
            eu.append(off + k - 1)
            ev.append(off + k)
    core = copies * k
    for ell in range(leaves):
        eu.append(ell % core)
        ev.append(core + ell)
    c = np.ones(len(eu))
    return ElectricNetwork(core + leaves, np.array(eu), np.array(ev), c)


# ---------------------------------------------------------------------------
# balance / regularity checkers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BalanceReport:
    """Finite-parameter evaluation of the almost-balanced conditions.

    The three inequalities, evaluated at concrete (gamma, K, delta):
      1. at least a (1 - delta) fraction of vertices have C_v in [gamma, K*gamma];
      2. the strength carried by the remaining vertices is at most delta*gamma*n;
      3. every single edge conductance is at most delta*gamma.

    ``total_strength_ratio`` reports ``sum_v C_v / (gamma * n)`` so callers can
    also judge the total-strength form of near-regularity.
    """
    gamma: float
    K: float
    delta: float
    frac_typical: float
    atypical_strength_ratio: float
    max_edge_ratio: float
    passes: tuple
    typical_mask: np.ndarray
    total_strength_ratio: float

    @property
    def all_pass(self) -> bool:
        return all(self.passes)


def balance_report(net: ElectricNetwork, gamma: float, K: float,
                   delta: float) -> BalanceReport:
    """Evaluate the three balance conditions at concrete parameters."""
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    if K <= 1:
        raise ValueError("K must exceed 1")
    if not (0 < delta < 1):
        raise ValueError("delta must lie in (0, 1)")
    C = net.vertex_strength
    mask = (C >= gamma) & (C <= K * gamma)
    frac = float(mask.mean())
    atyp = float(C[~mask].sum() / (gamma * net.n))
    max_edge = float(net.conductance.max() / gamma) if net.m else 0.0
    passes = (frac >= 1.0 - delta, atyp <= delta, max_edge <= delta)
    return BalanceReport(gamma=float(gamma), K=float(K), delta=float(delta),
                         frac_typical=frac, atypical_strength_ratio=atyp,
                         max_edge_ratio=max_edge, passes=passes,
                         typical_mask=mask,
                         total_strength_ratio=float(C.sum() / (gamma * net.n)))


# ---------------------------------------------------------------------------
# plain-text network files: first line "n m", then one "u v c" line per edge
# ---------------------------------------------------------------------------

def write_network(net: ElectricNetwork, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"{net.n} {net.m}\n")
        for u, v, c in net.edge_pairs():
            fh.write(f"{u} {v} {float(c)!r}\n")


def read_network(path) -> ElectricNetwork:
    with open(path) as fh:
        header = fh.readline().split()
        if len(header) != 2:
            raise NetworkError("first line must be 'n m'")
        n, m = int(header[0]), int(header[1])
        triples = []
        for _ in range(m):
            parts = fh.readline().split()
            if len(parts) != 3:
                raise NetworkError("edge lines must be 'u v c'")
            triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
    return build_network(n, triples)
