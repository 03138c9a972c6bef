"""The beta-parametrized random-environment model and its MST machinery.

Labels U_e are i.i.d. uniform on [0,1]; the induced conductances are
exp(-beta * U_e), held in log domain throughout because exp(-beta) underflows
64-bit floats already at beta around 745 while experiments push beta far
beyond that.  beta = 0 is the uniform spanning tree; as beta grows the model
interpolates to the minimum spanning tree of the labels.

Two numerical engines live here:

* moderate beta: materialize globally rescaled conductances (Kirchhoff
  quantities are scale invariant) and use the dense resistance solver;
* extreme beta: a scale-separated engine that certifies which edges are in
  or out of the tree up to a tiny tail bound, contracts / deletes them via
  the spatial Markov property, and treats the few undecided edges exactly on
  the remaining small quotient.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .netcore import ElectricNetwork
from .resist import ResistanceSolver, SolverError
from .sample import (SamplerStallError, SpanningTree, WalkTables,
                     _enumerate_tree_indices, as_generator, kruskal_min,
                     walk_tables, wilson_sample)

DENSE_SPAN_LIMIT = 600.0
WALK_STALL_LIMIT = 45.0
MERGE_TABLE_VERTEX_LIMIT = 2048


class TieError(ValueError):
    """Duplicate labels: the maximum-weight spanning tree is not unique."""


class PhaseSplitError(RuntimeError):
    """Scale separation failed: too many edges remain undecided."""


class MarginalError(RuntimeError):
    """No engine could compute edge marginals for this environment."""


@dataclass(frozen=True)
class Environment:
    """Per-edge labels plus inverse temperature; conductances exp(-beta*U)."""
    label: np.ndarray
    beta: float

    def __post_init__(self):
        lab = np.ascontiguousarray(np.asarray(self.label, dtype=np.float64))
        lab.setflags(write=False)
        object.__setattr__(self, "label", lab)
        if self.beta < 0:
            raise ValueError("beta must be nonnegative")

    @property
    def log_conductance(self) -> np.ndarray:
        return -self.beta * self.label

    @property
    def m(self) -> int:
        return len(self.label)


def draw_environment(net: ElectricNetwork, beta: float, rng) -> Environment:
    """i.i.d. uniform labels from the stream; deterministic per (seed, stream)."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    rng = as_generator(rng)
    return Environment(label=rng.random(net.m), beta=float(beta))


def mu(beta: float) -> float:
    """E[exp(-beta * U)] for U uniform on [0,1]: (1 - e^{-beta}) / beta.

    Evaluated through expm1 so the removable singularity at 0 costs no
    precision; mu(0) = 1.
    """
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta == 0.0:
        return 1.0
    return -np.expm1(-beta) / beta


def environment_network(net: ElectricNetwork, env: Environment) -> ElectricNetwork:
    """Materialize conductances exp(-beta*(U - min U)).

    The global label shift rescales every conductance by the same factor,
    which leaves effective-resistance products c(e) * R_eff, and hence every
    Kirchhoff quantity, unchanged while keeping the largest conductance at 1.
    """
    shifted = env.beta * (env.label - env.label.min())
    if shifted.max() > 700.0:
        warnings.warn("conductance span underflows float64 even after rescaling;"
                      " dense results will be unreliable", RuntimeWarning)
    return net.with_conductances(np.exp(-shifted))


def env_walk_tables(net: ElectricNetwork, env: Environment) -> WalkTables:
    """Per-vertex normalized transition tables built in log domain."""
    return walk_tables(net, log_conductance=env.log_conductance)


# ---------------------------------------------------------------------------
# label-side operations
# ---------------------------------------------------------------------------

def mst_path_max(net: ElectricNetwork, mst: SpanningTree, labels, e) -> float:
    """m_e: the maximum label on the MST path between the endpoints of e.

    e must be an external edge of the given minimum spanning tree; the cycle
    property guarantees m_e < label[e], which is asserted.
    """
    labels = np.asarray(labels, dtype=np.float64)
    idx = e if not isinstance(e, (tuple, list)) else net.edge_index(e[0], e[1])
    idx = int(idx)
    if idx in mst.index_set:
        raise ValueError("e lies in the spanning tree; m_e is defined for external edges")
    depths = mst.depths()
    pel = np.where(mst.parent_edge >= 0, labels[mst.parent_edge], -np.inf)
    val = float(_kernels.path_max_label(mst.parent, depths, pel,
                                        int(net.edge_u[idx]), int(net.edge_v[idx])))
    if not val < labels[idx]:
        raise ValueError("cycle property violated: the tree is not the label MST")
    return val


def external_path_maxima(net: ElectricNetwork, labels, mst: SpanningTree | None = None):
    """(external edge indices, their m_e values, the MST) in one pass."""
    labels = np.asarray(labels, dtype=np.float64)
    if mst is None:
        mst = kruskal_min(net, labels)
    in_mst = np.zeros(net.m, dtype=bool)
    in_mst[mst.edge_indices] = True
    ext = np.flatnonzero(~in_mst)
    if net.n <= MERGE_TABLE_VERTEX_LIMIT:
        order = np.argsort(labels, kind="stable")
        table = _kernels.merge_label_table(order, net.edge_u, net.edge_v,
                                           labels, net.n)
        m_e = table[net.edge_u[ext], net.edge_v[ext]]
    else:
        depths = mst.depths()
        pel = np.where(mst.parent_edge >= 0, labels[mst.parent_edge], -np.inf)
        m_e = np.array([_kernels.path_max_label(mst.parent, depths, pel,
                                                int(net.edge_u[e]), int(net.edge_v[e]))
                        for e in ext])
    return ext, m_e, mst


@dataclass(frozen=True)
class SignificantEdges:
    """External edges whose conductance rivals some tree-path edge."""
    indices: np.ndarray
    degenerate_beta_zero: bool
    threshold: float


def significant_edges(net: ElectricNetwork, env: Environment,
                      epsilon: float) -> SignificantEdges:
    """E_sig(epsilon): external edges with c(e)/c(f) >= epsilon for some
    MaxST-path edge f.

    Evaluated in label space as U_e - m_e <= -log(epsilon)/beta, which is the
    same inequality and immune to conductance underflow.  For beta = 0 every
    external edge qualifies for any epsilon <= 1; that degenerate case is
    returned in full with a flag.
    """
    if not (0.0 < epsilon < 1.0):
        raise ValueError("epsilon must lie in (0, 1)")
    _require_distinct(env.label)
    ext, m_e, _ = external_path_maxima(net, env.label)
    if env.beta == 0.0:
        return SignificantEdges(indices=ext, degenerate_beta_zero=True,
                                threshold=np.inf)
    thr = -np.log(epsilon) / env.beta
    keep = (env.label[ext] - m_e) <= thr
    return SignificantEdges(indices=ext[keep], degenerate_beta_zero=False,
                            threshold=float(thr))


def tree_symmetric_difference(t1: SpanningTree, t2: SpanningTree) -> int:
    if t1.n != t2.n:
        raise ValueError("trees live on networks of different sizes")
    return len(t1.index_set.symmetric_difference(t2.index_set))


def _require_distinct(labels):
    if len(np.unique(labels)) != len(labels):
        raise TieError("labels contain ties; the maximum spanning tree is not unique")


# ---------------------------------------------------------------------------
# walk-stall diagnostics
# ---------------------------------------------------------------------------

def walk_stall_score(net: ElectricNetwork, env: Environment) -> float:
    """Barrier exponent of the worst mutual-minimum label pair.

    A pair (u, v) that are each other's smallest incident label traps the
    environment walk; the escape probability per visit is about
    exp(-score).  Scores beyond ~45 make walk samplers useless.
    """
    if env.beta == 0.0 or net.m == 0:
        return 0.0
    vals = env.label[net.nbr_edge]
    vmin, vsecond, varg = _kernels.per_row_two_smallest(net.indptr, vals, net.n)
    partner = np.where(varg >= 0, net.nbr_vertex[varg], -1)
    score = 0.0
    for v in range(net.n):
        u = partner[v]
        if u > v and partner[u] == v and np.isfinite(vsecond[v]) \
                and np.isfinite(vsecond[u]):
            gap = min(vsecond[v] - vmin[v], vsecond[u] - vmin[u])
            score = max(score, env.beta * gap)
    return float(score)


# ---------------------------------------------------------------------------
# the scale-separated engine for extreme beta
# ---------------------------------------------------------------------------

class ScaleSeparatedWst:
    """Exact conditional treatment of an environment deep in the MST phase.

    Certified bounds decide almost every edge: a tree edge f with cut bound
    sum_{e crossing} exp(-beta*(U_e - U_f)) <= tail is forced in, an external
    edge with (n-1)*exp(-beta*(U_e - m_e)) <= tail is forced out.  By the
    spatial Markov property the law conditioned on those forcings is the
    weighted spanning tree law of the contracted/deleted quotient, whose few
    remaining edges are handled by exhaustive enumeration in log domain.
    Total variation distance to the unconditioned law is at most the sum of
    the discarded bounds (the ``error_budget``).
    """

    SCREEN = 80.0

    def __init__(self, net: ElectricNetwork, env: Environment,
                 tail: float = 1e-12, max_quotient_vertices: int = 30,
                 max_trees: int = 200_000):
        if env.beta <= 0:
            raise ValueError("scale separation needs beta > 0")
        _require_distinct(env.label)
        self.net = net
        self.env = env
        self.tail = float(tail)
        beta, labels = env.beta, env.label
        n, m = net.n, net.m

        ext, m_e, mst = external_path_maxima(net, labels)
        self.mst = mst
        slack = beta * (labels[ext] - m_e)
        if np.any(slack < 0):
            raise AssertionError("cycle property violated in slack computation")

        # cut bounds for tree edges, over screened external edges only;
        # everything beyond the screen contributes at most m * exp(-SCREEN)
        residual = m * np.exp(-self.SCREEN)
        screened = ext[slack <= self.SCREEN]
        cut = np.zeros(m)
        depths = mst.depths()
        scaled_pel = np.where(mst.parent_edge >= 0,
                              beta * labels[mst.parent_edge], np.inf)
        vertex_edge_of = mst.parent_edge
        if len(screened):
            _kernels.mst_cut_sums(mst.parent, depths, scaled_pel,
                                  vertex_edge_of, net.edge_u[screened],
                                  net.edge_v[screened],
                                  beta * labels[screened], cut)
        self._cut_bound = cut + residual

        out_bound = np.minimum((n - 1) * np.exp(-slack), 1.0)
        forced_out_mask = out_bound <= self.tail
        self._ext = ext
        self._ext_out_bound = out_bound
        active_ext = ext[~forced_out_mask]

        tree_edges = mst.edge_indices
        tree_active_mask = self._cut_bound[tree_edges] > self.tail
        self.forced_in = tree_edges[~tree_active_mask]
        active_tree = tree_edges[tree_active_mask]
        self.active = np.concatenate([active_tree, active_ext]).astype(np.int64)

        # quotient of the forced-in forest
        comp = _forest_components(n, net.edge_u[self.forced_in],
                                  net.edge_v[self.forced_in])
        n_comp = int(comp.max()) + 1 if n else 0
        if n_comp > max_quotient_vertices:
            raise PhaseSplitError(
                f"{n_comp} quotient vertices exceed the cap {max_quotient_vertices}; "
                "the environment is not deep enough in the MST phase")
        qedges = []
        dropped = []
        for e in self.active:
            a, b = comp[net.edge_u[e]], comp[net.edge_v[e]]
            if a == b:
                dropped.append(e)  # certified negligible; see error budget
                continue
            qedges.append((int(e), int(min(a, b)), int(max(a, b))))
        self._dropped = np.array(dropped, dtype=np.int64)
        self.active = np.array([e for e, _, _ in qedges], dtype=np.int64)
        try:
            trees = _enumerate_tree_indices(n_comp, qedges, cap=max_trees)
        except RuntimeError as exc:
            raise PhaseSplitError(str(exc)) from exc
        if not trees:
            raise PhaseSplitError("quotient carries no spanning tree")
        logw = np.array([-beta * labels[np.asarray(t, dtype=np.int64)].sum()
                         if t else 0.0 for t in trees])
        logw -= logw.max()
        w = np.exp(logw)
        self._tree_probs = w / w.sum()
        self._trees = [np.asarray(sorted(t), dtype=np.int64) for t in trees]

        # exact conditional marginals of the active edges
        act_p = {int(e): 0.0 for e in self.active}
        for t, p in zip(self._trees, self._tree_probs):
            for e in t:
                act_p[int(e)] += p
        self._active_marginal = act_p

        budget = float(self._cut_bound[self.forced_in].sum()
                       + out_bound[forced_out_mask].sum())
        if len(self._dropped):
            budget += float(out_bound[np.searchsorted(ext, self._dropped)].sum())
        self.error_budget = budget

    def edge_marginals(self) -> np.ndarray:
        """P(e in tree) per edge: certified bounds outside the quotient,
        exact enumeration inside; total error at most error_budget."""
        p = np.zeros(self.net.m)
        p[self.forced_in] = 1.0 - np.minimum(self._cut_bound[self.forced_in], 1.0)
        p[self._ext] = np.minimum(self._ext_out_bound, self.tail)
        for e, val in self._active_marginal.items():
            p[e] = val
        foster_defect = abs(p.sum() - (self.net.n - 1))
        if foster_defect > 1e-6 * max(1, self.net.n - 1):
            raise SolverError(f"scale-separated marginals violate Foster by {foster_defect:.3e}")
        return p

    def sample(self, rng) -> SpanningTree:
        rng = as_generator(rng)
        k = rng.choice(len(self._trees), p=self._tree_probs)
        idx = np.concatenate([self.forced_in, self._trees[k]])
        return SpanningTree(self.net, idx)

    def mst_agreement_probability(self) -> float:
        """P(tree == MST) under the conditioned law."""
        target = set(int(e) for e in self.mst.edge_indices) - set(int(e) for e in self.forced_in)
        total = 0.0
        for t, p in zip(self._trees, self._tree_probs):
            if set(int(e) for e in t) == target:
                total += p
        return total


def _forest_components(n: int, edges_u, edges_v) -> np.ndarray:
    uf = np.arange(n)

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    for a, b in zip(edges_u, edges_v):
        ra, rb = find(a), find(b)
        if ra != rb:
            uf[ra] = rb
    roots = np.array([find(v) for v in range(n)])
    _, comp = np.unique(roots, return_inverse=True)
    return comp


# ---------------------------------------------------------------------------
# routed high-level operations
# ---------------------------------------------------------------------------

def edge_tree_marginals(net: ElectricNetwork, env: Environment):
    """P(e in WST(c_beta)) for all edges, with the engine that can do it.

    Returns (marginals, method).  Moderate label spans go through the dense
    Kirchhoff route (validated by the Foster identity); extreme spans go
    through the scale-separated engine.  Raises MarginalError when neither
    applies -- callers flag the row and keep going.
    """
    span = env.beta * (env.label.max() - env.label.min()) if net.m else 0.0
    if span <= DENSE_SPAN_LIMIT:
        solver = ResistanceSolver(environment_network(net, env),
                                  mode="dense" if net.n <= 4000 else "iterative")
        try:
            p = solver.kirchhoff_probabilities()
            solver.validate_foster(rtol=1e-6)
            return p, "kirchhoff-dense"
        except SolverError:
            pass
    try:
        model = ScaleSeparatedWst(net, env)
        return model.edge_marginals(), "scale-separated"
    except PhaseSplitError as exc:
        raise MarginalError(
            f"no marginal engine covers beta={env.beta:g} at this label span: {exc}"
        ) from exc


def sample_environment_tree(net: ElectricNetwork, env: Environment, rng,
                            prepared=None) -> SpanningTree:
    """One exact draw from WST(c_beta), routed by the stall diagnostic."""
    prepared = prepared or prepare_environment_sampler(net, env)
    kind, payload = prepared
    if kind == "walk":
        return wilson_sample(net, rng, tables=payload)
    return payload.sample(rng)


def prepare_environment_sampler(net: ElectricNetwork, env: Environment):
    """Choose and precompute the sampling route for one environment.

    Walk tables when the chain mixes; the scale-separated model when barriers
    make walks stall; SamplerStallError when neither engine applies.
    """
    if walk_stall_score(net, env) <= WALK_STALL_LIMIT:
        return "walk", env_walk_tables(net, env)
    try:
        return "scale", ScaleSeparatedWst(net, env)
    except PhaseSplitError as exc:
        raise SamplerStallError(
            f"environment walk would stall and scale separation failed: {exc}"
        ) from exc


# ---------------------------------------------------------------------------
# environment files: CSV rows edge_index,u,v,label with beta in the header
# ---------------------------------------------------------------------------

def dump_environment(net: ElectricNetwork, env: Environment, path) -> None:
    with open(path, "w") as fh:
        fh.write(f"# beta={env.beta!r}\n")
        fh.write("edge_index,u,v,label\n")
        for i, (u, v, _) in enumerate(net.edge_pairs()):
            fh.write(f"{i},{u},{v},{float(env.label[i])!r}\n")


def load_environment(net: ElectricNetwork, path) -> Environment:
    with open(path) as fh:
        header = fh.readline().strip()
        if not header.startswith("# beta="):
            raise ValueError("environment file must start with '# beta=...'")
        beta = float(header.split("=", 1)[1])
        fh.readline()  # column header
        labels = np.zeros(net.m)
        for line in fh:
            if not line.strip():
                continue
            idx, u, v, lab = line.split(",")
            i = int(idx)
            if net.edge_index(int(u), int(v)) != i:
                raise ValueError(f"edge row {i} does not match the network")
            labels[i] = float(lab)
    return Environment(label=labels, beta=beta)
