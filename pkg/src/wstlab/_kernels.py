"""Numba kernels for the hot loops: random walks, union-find, path scans.

All kernels take a ``numpy.random.Generator`` where randomness is needed, so
draw sequences are reproducible from (seed, stream) alone.
"""

import numba as nb
import numpy as np


@nb.njit(inline="always")
def _pick_neighbor(indptr, cumw, u, r):
    lo = indptr[u]
    hi = indptr[u + 1]
    # binary search for the first cumulative weight exceeding r
    return lo + np.searchsorted(cumw[lo:hi], r, side="right")


@nb.njit
def wilson_parents(indptr, nbr_vertex, nbr_edge, cumw, n, rng, max_steps):
    """Loop-erased random walk sampler rooted at vertex 0.

    Returns (parent, parent_edge, steps); parent[0] == -1.  The classic
    in-place loop erasure is used: successive random successors overwrite
    earlier ones until the walk hits the current tree.  steps == -1 signals
    the circuit breaker fired.
    """
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    in_tree = np.zeros(n, dtype=nb.boolean)
    in_tree[0] = True
    steps = 0
    for start in range(1, n):
        u = start
        while not in_tree[u]:
            j = _pick_neighbor(indptr, cumw, u, rng.random())
            parent[u] = nbr_vertex[j]
            parent_edge[u] = nbr_edge[j]
            u = parent[u]
            steps += 1
            if steps > max_steps:
                return parent, parent_edge, -1
        u = start
        while not in_tree[u]:
            in_tree[u] = True
            u = parent[u]
    return parent, parent_edge, steps


@nb.njit
def aldous_broder_parents(indptr, nbr_vertex, nbr_edge, cumw, n, rng, max_steps):
    """First-entry tree of a covering random walk started at vertex 0."""
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=nb.boolean)
    seen[0] = True
    remaining = n - 1
    u = 0
    steps = 0
    while remaining > 0:
        j = _pick_neighbor(indptr, cumw, u, rng.random())
        v = nbr_vertex[j]
        if not seen[v]:
            seen[v] = True
            parent[v] = u
            parent_edge[v] = nbr_edge[j]
            remaining -= 1
        u = v
        steps += 1
        if steps > max_steps:
            return parent, parent_edge, -1
    return parent, parent_edge, steps


@nb.njit
def wilson_tally(indptr, nbr_vertex, nbr_edge, cumw, n, rng, n_samples,
                 counts, max_steps):
    """Draw n_samples Wilson trees, tallying edge-bitmask occurrences.

    counts has length 2**m; each sampled tree increments the slot of its
    edge-index bitmask.  Only sensible for m <= ~20.  Returns total steps,
    or -1 if the breaker fired.
    """
    parent = np.full(n, -1, dtype=np.int64)
    parent_edge = np.full(n, -1, dtype=np.int64)
    in_tree = np.zeros(n, dtype=nb.boolean)
    total = 0
    for _ in range(n_samples):
        for v in range(n):
            in_tree[v] = False
        in_tree[0] = True
        for start in range(1, n):
            u = start
            while not in_tree[u]:
                j = _pick_neighbor(indptr, cumw, u, rng.random())
                parent[u] = nbr_vertex[j]
                parent_edge[u] = nbr_edge[j]
                u = parent[u]
                total += 1
                if total > max_steps:
                    return -1
            u = start
            while not in_tree[u]:
                in_tree[u] = True
                u = parent[u]
        mask = 0
        for v in range(1, n):
            mask |= 1 << parent_edge[v]
        counts[mask] += 1
    return total


@nb.njit
def aldous_broder_tally(indptr, nbr_vertex, nbr_edge, cumw, n, rng, n_samples,
                        counts, max_steps):
    """Aldous-Broder analogue of wilson_tally."""
    parent_edge = np.full(n, -1, dtype=np.int64)
    seen = np.zeros(n, dtype=nb.boolean)
    total = 0
    for _ in range(n_samples):
        for v in range(n):
            seen[v] = False
        seen[0] = True
        remaining = n - 1
        u = 0
        while remaining > 0:
            j = _pick_neighbor(indptr, cumw, u, rng.random())
            v = nbr_vertex[j]
            if not seen[v]:
                seen[v] = True
                parent_edge[v] = nbr_edge[j]
                remaining -= 1
            u = v
            total += 1
            if total > max_steps:
                return -1
        mask = 0
        for v in range(1, n):
            mask |= 1 << parent_edge[v]
        counts[mask] += 1
    return total


@nb.njit
def uf_find(uf_parent, x):
    root = x
    while uf_parent[root] != root:
        root = uf_parent[root]
    while uf_parent[x] != root:
        nxt = uf_parent[x]
        uf_parent[x] = root
        x = nxt
    return root


@nb.njit
def kruskal_select(order, edge_u, edge_v, n):
    """Mark the edges Kruskal keeps when scanning in the given order."""
    uf = np.arange(n)
    keep = np.zeros(len(order), dtype=nb.boolean)
    taken = 0
    for idx in order:
        ru = uf_find(uf, edge_u[idx])
        rv = uf_find(uf, edge_v[idx])
        if ru != rv:
            uf[ru] = rv
            keep[idx] = True
            taken += 1
            if taken == n - 1:
                break
    return keep


@nb.njit
def merge_label_table(order, edge_u, edge_v, labels, n):
    """All-pairs table of the label at which Kruskal first joins each pair.

    For an external edge e = (u, v) this is exactly m_e, the maximum label on
    the minimum-spanning-tree path between u and v.  O(n^2) total via member
    lists; intended for n up to a few thousand.
    """
    table = np.zeros((n, n), dtype=np.float64)
    uf = np.arange(n)
    head = np.arange(n)
    tail = np.arange(n)
    nxt = np.full(n, -1, dtype=np.int64)
    size = np.ones(n, dtype=np.int64)
    merged = 0
    for idx in order:
        ru = uf_find(uf, edge_u[idx])
        rv = uf_find(uf, edge_v[idx])
        if ru == rv:
            continue
        if size[ru] > size[rv]:
            ru, rv = rv, ru
        lab = labels[idx]
        a = head[ru]
        while a != -1:
            b = head[rv]
            while b != -1:
                table[a, b] = lab
                table[b, a] = lab
                b = nxt[b]
            a = nxt[a]
        # splice member list of ru onto rv
        nxt[tail[rv]] = head[ru]
        tail[rv] = tail[ru]
        size[rv] += size[ru]
        uf[ru] = rv
        merged += 1
        if merged == n - 1:
            break
    return table


@nb.njit
def tree_depths(parent, n):
    """Depth of each vertex under the given parent array (root has -1)."""
    depth = np.full(n, -1, dtype=np.int64)
    stack = np.empty(n, dtype=np.int64)
    for v in range(n):
        if depth[v] >= 0:
            continue
        k = 0
        u = v
        while u != -1 and depth[u] < 0:
            stack[k] = u
            u = parent[u]
            k += 1
        base = 0 if u == -1 else depth[u] + 1
        # stack[k-1] hangs off the known region; v = stack[0] is deepest
        for i in range(k):
            depth[stack[i]] = base + (k - 1 - i)
    return depth


@nb.njit
def mst_cut_sums(parent, depth, parent_edge_scaled, vertex_edge_of, ext_u,
                 ext_v, ext_scaled, sums):
    """Accumulate sums[f] += exp(-(s_e - s_f)) over tree-path membership.

    parent_edge_scaled[x] is beta*U of the tree edge (x, parent[x]) with
    vertex_edge_of[x] its edge index; ext_scaled[j] is beta*U of the j-th
    external edge, whose tree path is walked via depths.  Feeds the
    certified bound 1 - p_f <= sums[f] for tree edges.
    """
    for j in range(len(ext_u)):
        a = ext_u[j]
        b = ext_v[j]
        se = ext_scaled[j]
        da = depth[a]
        db = depth[b]
        while da > db:
            sums[vertex_edge_of[a]] += np.exp(-(se - parent_edge_scaled[a]))
            a = parent[a]
            da -= 1
        while db > da:
            sums[vertex_edge_of[b]] += np.exp(-(se - parent_edge_scaled[b]))
            b = parent[b]
            db -= 1
        while a != b:
            sums[vertex_edge_of[a]] += np.exp(-(se - parent_edge_scaled[a]))
            a = parent[a]
            sums[vertex_edge_of[b]] += np.exp(-(se - parent_edge_scaled[b]))
            b = parent[b]


@nb.njit
def draw_t_tuples(indptr, nbr_vertex, nbr_edge, cumw, cumpi, parents, n_draws, rng):
    """Batch of random pattern tuples: root from the stationary law, then a
    conductance-proportional neighbor per pattern edge.  Returns the vertex
    matrix and the edge indices actually stepped along."""
    k = len(parents)
    verts = np.empty((n_draws, k), dtype=np.int64)
    edges = np.empty((n_draws, max(k - 1, 1)), dtype=np.int64)
    for i in range(n_draws):
        verts[i, 0] = np.searchsorted(cumpi, rng.random(), side="right")
        for j in range(1, k):
            p = verts[i, parents[j]]
            slot = _pick_neighbor(indptr, cumw, p, rng.random())
            verts[i, j] = nbr_vertex[slot]
            edges[i, j - 1] = nbr_edge[slot]
    return verts, edges


@nb.njit
def per_row_two_smallest(indptr, vals, n):
    """Per CSR row: smallest value, second smallest, and argmin slot."""
    out_min = np.full(n, np.inf)
    out_second = np.full(n, np.inf)
    out_arg = np.full(n, -1, dtype=np.int64)
    for v in range(n):
        for j in range(indptr[v], indptr[v + 1]):
            x = vals[j]
            if x < out_min[v]:
                out_second[v] = out_min[v]
                out_min[v] = x
                out_arg[v] = j
            elif x < out_second[v]:
                out_second[v] = x
    return out_min, out_second, out_arg


@nb.njit
def path_max_label(parent, depth, parent_edge_label, a, b):
    """Maximum parent-edge label along the tree path between a and b."""
    best = -np.inf
    da = depth[a]
    db = depth[b]
    while da > db:
        if parent_edge_label[a] > best:
            best = parent_edge_label[a]
        a = parent[a]
        da -= 1
    while db > da:
        if parent_edge_label[b] > best:
            best = parent_edge_label[b]
        b = parent[b]
        db -= 1
    while a != b:
        if parent_edge_label[a] > best:
            best = parent_edge_label[a]
        a = parent[a]
        if parent_edge_label[b] > best:
            best = parent_edge_label[b]
        b = parent[b]
    return best
