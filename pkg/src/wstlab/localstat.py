"""Local-limit statistics: canonical rooted patterns, ball censuses, the
conditioned-branching-process reference law, and the compatible-tuple sum
that expresses r-ball probabilities through per-tuple weights.

A radius-r pattern is a finite rooted tree up to root-preserving isomorphism
together with the radius it represents.  ``k`` is its vertex count, ``t`` the
number of vertices strictly inside the ball (depth at most r-1), and ``stab``
the number of root-preserving automorphisms.  The reference probability of a
pattern under the limit law is exp(-t) * (k - t) / stab.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .netcore import ElectricNetwork
from .sample import SpanningTree, as_generator, walk_tables, wilson_sample

BALL_SIZE_CAP = 10_000


@dataclass(frozen=True)
class RootedTreePattern:
    """Canonical rooted tree pattern for a fixed ball radius."""
    k: int
    parent: tuple
    r: int
    t: int
    stab: int
    encoding: str

    def __eq__(self, other):
        return (isinstance(other, RootedTreePattern)
                and self.encoding == other.encoding and self.r == other.r)

    def __hash__(self):
        return hash((self.encoding, self.r))

    def __repr__(self):
        return (f"RootedTreePattern(k={self.k}, t={self.t}, stab={self.stab}, "
                f"r={self.r}, enc={self.encoding})")


def canonicalize(adjacency, root: int = 0, r: int | None = None) -> RootedTreePattern:
    """Canonical pattern of a rooted tree given as undirected adjacency lists.

    Two inputs map to equal patterns exactly when a root-preserving
    isomorphism exists.  When r is omitted it defaults to the tree height, so
    standalone trees canonicalize without reference to any ball.
    """
    n = len(adjacency)
    children, depth = _bfs_orient(adjacency, root)
    enc, stab = _ahu(children, depth, n, root)
    height = int(depth.max()) if n else 0
    if r is None:
        r = height
    if height > r:
        raise ValueError(f"tree has height {height}, deeper than radius {r}")
    parent = _canonical_parent_order(children, enc, root, n)
    t = int(np.sum(depth <= r - 1))
    return RootedTreePattern(k=n, parent=tuple(parent), r=int(r), t=t,
                             stab=int(stab[root]), encoding=enc[root])


def _bfs_orient(adjacency, root):
    n = len(adjacency)
    depth = np.full(n, -1, dtype=np.int64)
    depth[root] = 0
    children = [[] for _ in range(n)]
    order = [root]
    head = 0
    edge_count = sum(len(a) for a in adjacency) // 2
    while head < len(order):
        u = order[head]
        head += 1
        for v in adjacency[u]:
            if depth[v] < 0:
                depth[v] = depth[u] + 1
                children[u].append(v)
                order.append(v)
    if len(order) != n or edge_count != n - 1:
        raise ValueError("input is not a tree")
    return children, depth


def _ahu(children, depth, n, root):
    """Iterative canonical encodings and stabilizer sizes, leaves upward."""
    enc = [""] * n
    stab = [1] * n
    by_depth = sorted(range(n), key=lambda v: -depth[v])
    for v in by_depth:
        kids = sorted(children[v], key=lambda c: enc[c])
        parts = [enc[c] for c in kids]
        s = 1
        run = 1
        for i, c in enumerate(kids):
            s *= stab[c]
            if i > 0 and enc[c] == enc[kids[i - 1]]:
                run += 1
            else:
                run = 1
            if i + 1 == len(kids) or enc[kids[i + 1]] != enc[c]:
                s *= math.factorial(run)
        enc[v] = "(" + "".join(parts) + ")"
        stab[v] = s
    return enc, stab


def _canonical_parent_order(children, enc, root, n):
    """BFS parent list with children visited in canonical (encoding) order."""
    parent = [-1] * n
    new_id = {root: 0}
    order = [root]
    head = 0
    while head < len(order):
        u = order[head]
        head += 1
        for c in sorted(children[u], key=lambda x: enc[x]):
            new_id[c] = len(order)
            parent.append(0)
            parent[new_id[c]] = new_id[u]
            order.append(c)
    return parent[:n]


def ball(tree: SpanningTree, v: int, r: int,
         size_cap: int = BALL_SIZE_CAP) -> RootedTreePattern | None:
    """Canonical pattern of the radius-r ball around v in the tree metric.

    Returns None when the ball exceeds size_cap vertices (the census counts
    such truncations instead of failing).
    """
    children = tree.adjacency()
    return ball_from_adjacency(children, tree.parent, v, r, size_cap)


def ball_from_adjacency(children, parent, v, r, size_cap=BALL_SIZE_CAP):
    # collect the ball by BFS over tree neighbors (parent + children)
    ids = {v: 0}
    depth = [0]
    frontier = [v]
    adj = [[]]
    d = 0
    while frontier and d < r:
        nxt = []
        for u in frontier:
            nbrs = list(children[u])
            if parent[u] >= 0:
                nbrs.append(int(parent[u]))
            for w in nbrs:
                if w in ids:
                    continue
                ids[w] = len(adj)
                adj.append([])
                depth.append(d + 1)
                adj[ids[u]].append(ids[w])
                adj[ids[w]].append(ids[u])
                nxt.append(w)
                if len(adj) > size_cap:
                    return None
        frontier = nxt
        d += 1
    return canonicalize(adj, root=0, r=r)


def star_pattern(j: int, r: int = 1) -> RootedTreePattern:
    """Root with j children at radius r (the radius-1 ball shapes)."""
    adj = [[c for c in range(1, j + 1)]] + [[0]] * j
    return canonicalize(adj, root=0, r=r)


def pattern_from_parent(parent_list, r: int) -> RootedTreePattern:
    """Pattern from an explicit parent list (parent of vertex 0 is -1)."""
    n = len(parent_list)
    adj = [[] for _ in range(n)]
    for v in range(1, n):
        p = parent_list[v]
        adj[v].append(p)
        adj[p].append(v)
    return canonicalize(adj, root=0, r=r)


def pgw_reference_probability(pattern: RootedTreePattern) -> float:
    """Limit-law probability exp(-t) * (k - t) / stab of a radius-r pattern.

    Patterns with k == t (no boundary vertices at positive radius) have
    probability zero under the survival-conditioned limit.
    """
    if pattern.k == pattern.t:
        return 0.0
    return math.exp(-pattern.t) * (pattern.k - pattern.t) / pattern.stab


def pgw_in_support(pattern: RootedTreePattern) -> bool:
    return pattern.r == 0 or pattern.k > pattern.t


# ---------------------------------------------------------------------------
# census
# ---------------------------------------------------------------------------

@dataclass
class LocalCensus:
    """Empirical distribution of r-ball patterns around uniform roots."""
    r: int
    samples: int = 0
    truncation_count: int = 0
    roots_per_tree: int = 1
    counts: dict = field(default_factory=dict)

    def record(self, pattern: RootedTreePattern | None):
        self.samples += 1
        if pattern is None:
            self.truncation_count += 1
        else:
            self.counts[pattern] = self.counts.get(pattern, 0) + 1

    def empirical_probability(self, pattern) -> float:
        return self.counts.get(pattern, 0) / self.samples if self.samples else 0.0

    def merge(self, other: "LocalCensus") -> "LocalCensus":
        if other.r != self.r:
            raise ValueError("cannot merge censuses at different radii")
        out = LocalCensus(r=self.r, samples=self.samples + other.samples,
                          truncation_count=self.truncation_count + other.truncation_count,
                          roots_per_tree=self.roots_per_tree,
                          counts=dict(self.counts))
        for pat, c in other.counts.items():
            out.counts[pat] = out.counts.get(pat, 0) + c
        return out

    def check_consistency(self):
        assert sum(self.counts.values()) + self.truncation_count == self.samples


def census(net: ElectricNetwork, r: int, replicas: int, rng,
           sampler=None, roots_per_tree: int = 1,
           size_cap: int = BALL_SIZE_CAP) -> LocalCensus:
    """Sample trees, then canonical r-balls around uniform roots.

    ``sampler(rng) -> SpanningTree`` defaults to the Wilson draw on the plain
    network.  More than one root per tree trades independence for speed; the
    census records the choice.
    """
    if replicas < 1:
        raise ValueError("need at least one replica")
    rng = as_generator(rng)
    if sampler is None:
        tables = walk_tables(net)
        sampler = lambda g: wilson_sample(net, g, tables=tables)
    out = LocalCensus(r=r, roots_per_tree=roots_per_tree)
    for _ in range(replicas):
        tree = sampler(rng)
        children = tree.adjacency()
        roots = rng.integers(0, tree.n, size=roots_per_tree)
        for v in roots:
            out.record(ball_from_adjacency(children, tree.parent, int(v), r,
                                           size_cap))
    out.check_consistency()
    return out


def census_tv(a: LocalCensus, b: LocalCensus) -> float:
    """Total variation over the union of observed patterns (truncations count
    as one extra category)."""
    pats = set(a.counts) | set(b.counts)
    tv = sum(abs(a.empirical_probability(p) - b.empirical_probability(p))
             for p in pats)
    tv += abs(a.truncation_count / max(a.samples, 1)
              - b.truncation_count / max(b.samples, 1))
    return 0.5 * tv


def census_vs_reference_tv(c: LocalCensus, reference=pgw_reference_probability) -> float:
    """TV between the empirical census and a full reference law.

    Unobserved reference mass enters as 1 - sum of reference over observed
    patterns; truncated balls count against the reference.
    """
    seen_ref = 0.0
    tv = 0.0
    for pat in c.counts:
        ref = reference(pat)
        seen_ref += ref
        tv += abs(c.empirical_probability(pat) - ref)
    tv += c.truncation_count / max(c.samples, 1)
    tv += max(0.0, 1.0 - seen_ref)
    return 0.5 * tv


# ---------------------------------------------------------------------------
# the compatible-tuple representation
# ---------------------------------------------------------------------------

def b_value(net: ElectricNetwork, v: int) -> float:
    """Weighted neighbor sum b(v) = sum over u ~ v of c(u,v)/C_u."""
    sl = slice(net.indptr[v], net.indptr[v + 1])
    return float(np.sum(net.conductance[net.nbr_edge[sl]]
                        / net.vertex_strength[net.nbr_vertex[sl]]))


def b_values(net: ElectricNetwork) -> np.ndarray:
    contrib = net.conductance[net.nbr_edge] / net.vertex_strength[net.nbr_vertex]
    out = np.zeros(net.n)
    np.add.at(out, np.repeat(np.arange(net.n), np.diff(net.indptr)), contrib)
    return out


def typical_neighbor_sums(net: ElectricNetwork, edge_resistances, gamma: float,
                          K: float) -> np.ndarray:
    """Diagnostic per-vertex sums behind the 'typical neighbors' notion.

    Returns, for each vertex, the Kirchhoff mass of its incident edges whose
    effective resistance exceeds 4/gamma plus the conductance ratio toward
    atypical-strength neighbors.  Compare against a user threshold such as
    sqrt(delta); no acceptance claim is attached.
    """
    reff = np.asarray(edge_resistances)
    C = net.vertex_strength
    typical = (C >= gamma) & (C <= K * gamma)
    out = np.zeros(net.n)
    for v in range(net.n):
        sl = slice(net.indptr[v], net.indptr[v + 1])
        es = net.nbr_edge[sl]
        us = net.nbr_vertex[sl]
        ce = net.conductance[es]
        big_r = reff[es] > 4.0 / gamma
        out[v] = float(np.sum(ce[big_r] * reff[es][big_r])
                       + np.sum(ce[~typical[us]] / gamma))
    return out


def f_value(net: ElectricNetwork, vertices, pattern: RootedTreePattern) -> float:
    """Per-tuple weight F of a pattern-compatible ordered vertex tuple."""
    verts = [int(v) for v in vertices]
    _check_compatible(net, verts, pattern)
    C = net.vertex_strength
    t, k = pattern.t, pattern.k
    expo = math.exp(-sum(b_value(net, verts[j]) for j in range(t)))
    num = sum(C[verts[j]] for j in range(t, k))
    den = float(np.prod([C[v] for v in verts]))
    return expo * num / (net.n * den)


def _check_compatible(net, verts, pattern):
    if len(verts) != pattern.k:
        raise ValueError(f"tuple length {len(verts)} does not match k={pattern.k}")
    if len(set(verts)) != len(verts):
        raise ValueError("compatible tuples must have distinct vertices")
    for j in range(1, pattern.k):
        if not net.has_edge(verts[pattern.parent[j]], verts[j]):
            raise ValueError(f"pattern edge ({pattern.parent[j]},{j}) missing in the network")


def random_t_tuple(net: ElectricNetwork, pattern: RootedTreePattern, rng):
    """One random pattern tuple and its exact draw probability.

    The root follows the stationary law (proportional to C_v); each later
    vertex is a conductance-proportional neighbor of its pattern parent.
    Repeats are allowed in the draw.
    """
    verts, edges, q = _draw_tuples(net, pattern, 1, as_generator(rng))
    return [int(v) for v in verts[0]], float(q[0])


def _draw_tuples(net, pattern, n_draws, rng):
    tables = walk_tables(net)
    cumpi = np.cumsum(net.vertex_strength)
    cumpi /= cumpi[-1]
    cumpi[-1] = 1.0
    parents = np.asarray(pattern.parent, dtype=np.int64)
    verts, edges = _kernels.draw_t_tuples(tables.indptr, tables.nbr_vertex,
                                          tables.nbr_edge, tables.cumw, cumpi,
                                          parents, n_draws, rng)
    total_c = net.vertex_strength.sum()
    q = net.vertex_strength[verts[:, 0]] / total_c
    for j in range(1, pattern.k):
        ce = net.conductance[edges[:, j - 1]]
        q *= ce / net.vertex_strength[verts[:, parents[j]]]
    return verts, edges, q


@dataclass(frozen=True)
class TheoremSumResult:
    estimate: float
    stderr: float
    n_terms: int
    mode: str


def theorem_sum(net: ElectricNetwork, pattern: RootedTreePattern, gamma: float,
                K: float, mode: str = "exhaustive", rng=None,
                samples: int = 100_000,
                assignment_cap: int = 2_000_000) -> TheoremSumResult:
    """The compatible-tuple sum approximating the r-ball probability.

    Sums F(tuple)/stab times the product of pattern-edge conductances over
    tuples drawn from the typical-strength vertex set W = {v : C_v in
    [gamma, K*gamma]}.  Exhaustive mode walks every compatible assignment
    (guarded by assignment_cap); Monte-Carlo mode importance-samples with the
    random-tuple proposal and reports a standard error.
    """
    C = net.vertex_strength
    wmask = (C >= gamma) & (C <= K * gamma)
    if mode == "exhaustive":
        total, visited = _sum_exhaustive(net, pattern, wmask, assignment_cap)
        return TheoremSumResult(estimate=total, stderr=0.0, n_terms=visited,
                                mode="exhaustive")
    if mode != "monte_carlo":
        raise ValueError("mode must be 'exhaustive' or 'monte_carlo'")
    rng = as_generator(rng)
    verts, edges, q = _draw_tuples(net, pattern, samples, rng)
    k, t = pattern.k, pattern.t
    ok = wmask[verts].all(axis=1)
    for a in range(k):             # distinctness, k is tiny
        for b in range(a + 1, k):
            ok &= verts[:, a] != verts[:, b]
    bv = b_values(net)
    expo = np.exp(-bv[verts[:, :t]].sum(axis=1))
    num = C[verts[:, t:]].sum(axis=1) if k > t else np.zeros(samples)
    den = np.prod(C[verts], axis=1)
    fvals = expo * num / (net.n * den)
    prod_c = np.prod(net.conductance[edges[:, :k - 1]], axis=1) if k > 1 \
        else np.ones(samples)
    weights = np.where(ok, fvals * prod_c / (q * pattern.stab), 0.0)
    est = float(weights.mean())
    se = float(weights.std(ddof=1) / np.sqrt(samples)) if samples > 1 else np.inf
    return TheoremSumResult(estimate=est, stderr=se, n_terms=samples,
                            mode="monte_carlo")


def _sum_exhaustive(net, pattern, wmask, cap):
    k = pattern.k
    parents = pattern.parent
    C = net.vertex_strength
    bv = b_values(net)
    t = pattern.t
    candidates0 = np.flatnonzero(wmask)
    total = 0.0
    visited = 0
    assign = [0] * k
    in_use = set()

    def rec(j, prod_c):
        nonlocal total, visited
        if j == k:
            expo = math.exp(-sum(bv[assign[i]] for i in range(t)))
            num = sum(C[assign[i]] for i in range(t, k))
            den = float(np.prod([C[v] for v in assign]))
            total += expo * num / (net.n * den) * prod_c / pattern.stab
            return
        if j == 0:
            pool = candidates0
        else:
            p = assign[parents[j]]
            pool = net.neighbors(p)
        for v in pool:
            v = int(v)
            if not wmask[v] or v in in_use:
                continue
            visited += 1
            if visited > cap:
                raise ValueError(f"exhaustive mode exceeded {cap} assignments; "
                                 "use monte_carlo mode")
            if j == 0:
                c_step = 1.0
            else:
                c_step = float(net.conductance[net.edge_index(assign[parents[j]], v)])
            assign[j] = v
            in_use.add(v)
            rec(j + 1, prod_c * c_step)
            in_use.discard(v)

    rec(0, 1.0)
    return total, visited
