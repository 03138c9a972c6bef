"""Effective resistances, Kirchhoff edge marginals, and related identities.

The solver factors the reduced weighted Laplacian (ground row/column removed;
ground is vertex 0 unless overridden) once and answers potential queries
against it.  Dense Cholesky is the default and is exactly reproducible;
conjugate-gradient mode exists for networks too large to factor densely.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg
import scipy.sparse
import scipy.sparse.linalg

from .netcore import ElectricNetwork, NetworkError

DENSE_VERTEX_LIMIT = 4000


class SolverError(RuntimeError):
    """Factorization or solve failed beyond the requested tolerance."""


def _laplacian_dense(net: ElectricNetwork) -> np.ndarray:
    L = np.zeros((net.n, net.n))
    eu, ev, c = net.edge_u, net.edge_v, net.conductance
    L[eu, ev] -= c
    L[ev, eu] -= c
    L[np.arange(net.n), np.arange(net.n)] = net.vertex_strength
    return L


def _laplacian_sparse(net: ElectricNetwork) -> scipy.sparse.csr_matrix:
    eu, ev, c = net.edge_u, net.edge_v, net.conductance
    rows = np.concatenate([eu, ev, np.arange(net.n)])
    cols = np.concatenate([ev, eu, np.arange(net.n)])
    vals = np.concatenate([-c, -c, net.vertex_strength])
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(net.n, net.n))


class ResistanceSolver:
    """Potential solver for one electric network.

    Immutable after construction; concurrent queries against one factorization
    are safe.  ``clamp_events`` counts Kirchhoff probabilities that fell
    outside [0, 1] by roundoff and were clamped.
    """

    def __init__(self, net: ElectricNetwork, mode: str = "dense",
                 tol: float = 1e-10, ground: int = 0):
        if mode not in ("dense", "iterative"):
            raise ValueError("mode must be 'dense' or 'iterative'")
        if mode == "dense" and net.n > DENSE_VERTEX_LIMIT:
            raise SolverError(f"dense mode guarded to n <= {DENSE_VERTEX_LIMIT}")
        self.net = net
        self.mode = mode
        self.tol = float(tol)
        self.ground = int(ground)
        self.clamp_events = 0
        keep = np.ones(net.n, dtype=bool)
        keep[self.ground] = False
        self._keep = keep
        self._ridx = np.full(net.n, -1, dtype=np.int64)
        self._ridx[keep] = np.arange(net.n - 1)
        self._minv = None
        self._edge_reff = None
        if mode == "dense":
            L = _laplacian_dense(net)
            self._lred = L[np.ix_(keep, keep)]
            try:
                self._chol = scipy.linalg.cho_factor(self._lred, lower=True)
            except scipy.linalg.LinAlgError as exc:
                raise SolverError(f"Cholesky factorization failed: {exc}") from exc
        else:
            L = _laplacian_sparse(net)
            self._lred = L[keep][:, keep].tocsr()
            d = self._lred.diagonal()
            self._precond = scipy.sparse.linalg.LinearOperator(
                self._lred.shape, matvec=lambda x: x / d)

    # -- core solves ---------------------------------------------------

    def _solve_reduced(self, b: np.ndarray) -> np.ndarray:
        if self.mode == "dense":
            phi = scipy.linalg.cho_solve(self._chol, b)
        else:
            phi, info = scipy.sparse.linalg.cg(
                self._lred, b, rtol=self.tol, atol=0.0, M=self._precond,
                maxiter=20 * self.net.n)
            if info != 0:
                raise SolverError(f"conjugate gradient did not converge (info={info})")
        nb = np.linalg.norm(b)
        if nb > 0:
            residual = np.linalg.norm(self._lred @ phi - b)
            if residual > max(self.tol, 1e-9) * nb:
                raise SolverError(
                    f"solve residual {residual:.3e} exceeds tolerance against ||b||={nb:.3e}")
        return phi

    def potentials(self, source: int, sink: int) -> np.ndarray:
        """Potential vector for unit current injected at source, out at sink;
        the ground vertex is pinned to potential 0."""
        n = self.net.n
        b = np.zeros(n)
        b[source] += 1.0
        b[sink] -= 1.0
        phi = np.zeros(n)
        phi[self._keep] = self._solve_reduced(b[self._keep])
        return phi

    def effective_resistance(self, u: int, v: int) -> float:
        if u == v:
            return 0.0
        if self._minv is not None:
            return float(self._pair_resistance(np.array([u]), np.array([v]))[0])
        phi = self.potentials(u, v)
        return float(phi[u] - phi[v])

    # -- batched edge quantities ----------------------------------------

    def _inverse(self) -> np.ndarray:
        if self._minv is None:
            if self.mode != "dense":
                raise SolverError("batched inverse requires dense mode")
            self._minv = scipy.linalg.cho_solve(self._chol,
                                                np.eye(self.net.n - 1))
        return self._minv

    def _pair_resistance(self, us, vs) -> np.ndarray:
        minv = self._inverse()
        ru = self._ridx[us]
        rv = self._ridx[vs]
        out = np.empty(len(us))
        both = (ru >= 0) & (rv >= 0)
        out[both] = (minv[ru[both], ru[both]] + minv[rv[both], rv[both]]
                     - 2.0 * minv[ru[both], rv[both]])
        only_u = (ru >= 0) & (rv < 0)
        out[only_u] = minv[ru[only_u], ru[only_u]]
        only_v = (rv >= 0) & (ru < 0)
        out[only_v] = minv[rv[only_v], rv[only_v]]
        out[(ru < 0) & (rv < 0)] = 0.0
        return out

    def edge_resistances(self) -> np.ndarray:
        """R_eff across every edge, in stable edge order."""
        if self._edge_reff is None:
            net = self.net
            if self.mode == "dense":
                r = self._pair_resistance(net.edge_u, net.edge_v)
            else:
                r = np.array([self.effective_resistance(int(u), int(v))
                              for u, v in zip(net.edge_u, net.edge_v)])
            self._edge_reff = r
        return self._edge_reff

    def kirchhoff_edge_probability(self, e) -> float:
        """P(e in WST) = c(e) R_eff(e), clamped to [0, 1] on roundoff."""
        idx = self._edge_arg(e)
        p = float(self.net.conductance[idx]
                  * self.effective_resistance(int(self.net.edge_u[idx]),
                                              int(self.net.edge_v[idx])))
        if p < 0.0 or p > 1.0:
            self.clamp_events += 1
            p = min(1.0, max(0.0, p))
        return p

    def kirchhoff_probabilities(self) -> np.ndarray:
        p = self.net.conductance * self.edge_resistances()
        out_of_range = (p < 0.0) | (p > 1.0)
        self.clamp_events += int(out_of_range.sum())
        return np.clip(p, 0.0, 1.0)

    def foster_sum(self) -> float:
        """sum_e c(e) R_eff(e); equals n - 1 for any connected network."""
        return float(np.dot(self.net.conductance, self.edge_resistances()))

    def commute_time(self, a: int, x: int) -> float:
        """Expected round-trip time between a and x for the network walk."""
        if a == x:
            raise ValueError("commute time needs two distinct vertices")
        total_c = float(self.net.conductance.sum())
        return 2.0 * total_c * self.effective_resistance(a, x)

    def validate_foster(self, rtol: float = 1e-8) -> float:
        """Relative Foster defect; raises SolverError when out of tolerance."""
        defect = abs(self.foster_sum() - (self.net.n - 1)) / max(1, self.net.n - 1)
        if defect > rtol:
            raise SolverError(f"Foster identity violated: relative defect {defect:.3e}")
        return defect

    def _edge_arg(self, e) -> int:
        if isinstance(e, (tuple, list)):
            return self.net.edge_index(e[0], e[1])
        idx = int(e)
        if not (0 <= idx < self.net.m):
            raise NetworkError(f"edge index {idx} out of range")
        return idx


def effective_resistance(solver: ResistanceSolver, u: int, v: int) -> float:
    return solver.effective_resistance(u, v)


def effective_resistance_to_set(solver: ResistanceSolver, u: int, S) -> float:
    """R_eff(u <-> S) by contracting S to a supernode and re-solving."""
    S = {int(s) for s in S}
    if not S:
        raise ValueError("S must be nonempty")
    if u in S:
        raise ValueError("u must not belong to S")
    if len(S) == 1:
        return solver.effective_resistance(u, next(iter(S)))
    contracted, vmap = _contract_vertex_set(solver.net, S)
    sub = ResistanceSolver(contracted, mode=solver.mode, tol=solver.tol)
    return sub.effective_resistance(vmap[u], vmap[next(iter(S))])


def _contract_vertex_set(net: ElectricNetwork, S: set):
    """Merge the vertex set S into one supernode, dropping internal edges and
    summing parallel conductances."""
    vmap = np.full(net.n, -1, dtype=np.int64)
    fresh = 0
    for v in range(net.n):
        if v not in S:
            vmap[v] = fresh
            fresh += 1
    super_id = fresh
    for v in S:
        vmap[v] = super_id
    agg: dict = {}
    for u, v, c in net.edge_pairs():
        a, b = vmap[u], vmap[v]
        if a == b:
            continue
        key = (min(a, b), max(a, b))
        agg[key] = agg.get(key, 0.0) + float(c)
    keys = sorted(agg)
    eu = np.array([a for a, _ in keys], dtype=np.int64)
    ev = np.array([b for _, b in keys], dtype=np.int64)
    c = np.array([agg[k] for k in keys])
    return ElectricNetwork(super_id + 1, eu, ev, c), vmap


def foster_sum(solver: ResistanceSolver) -> float:
    return solver.foster_sum()


def kirchhoff_edge_probability(solver: ResistanceSolver, e) -> float:
    return solver.kirchhoff_edge_probability(e)


def commute_time(solver: ResistanceSolver, a: int, x: int) -> float:
    return solver.commute_time(a, x)


def partition_function_log(net: ElectricNetwork, ground: int = 0) -> float:
    """log of the spanning-tree partition function sum_T prod_{e in T} c(e).

    Matrix-tree theorem: log det of the reduced weighted Laplacian, evaluated
    through its Cholesky factor so only the log leaves the linear-algebra
    domain.
    """
    if net.n == 1:
        return 0.0
    keep = np.ones(net.n, dtype=bool)
    keep[ground] = False
    L = _laplacian_dense(net)[np.ix_(keep, keep)]
    try:
        chol = scipy.linalg.cholesky(L, lower=True)
    except scipy.linalg.LinAlgError as exc:
        raise SolverError(f"Cholesky factorization failed: {exc}") from exc
    return float(2.0 * np.sum(np.log(np.diag(chol))))


def nash_williams_bound(net: ElectricNetwork, u: int, v: int) -> float:
    """Certified lower bound on R_eff(u <-> v) for an edge (u, v).

    Returns the larger of the coarse bound 1/(2 C_u) + 1/(2 C_v) and the
    split-edge two-cutset bound 1/(C_u + c(u,v)) + 1/(C_v + c(u,v)); both
    never exceed the true effective resistance.
    """
    idx = net.edge_index(u, v)
    c = float(net.conductance[idx])
    cu = float(net.vertex_strength[u])
    cv = float(net.vertex_strength[v])
    coarse = 0.5 / cu + 0.5 / cv
    cutset = 1.0 / (cu + c) + 1.0 / (cv + c)
    return max(coarse, cutset)
