"""Experiment drivers and the command-line interface.

Three headline experiments: edge-overlap sweeps across beta, expected
total-length sweeps on the complete graph, and local-census comparisons
against the conditioned-branching-process reference and the MST census.
A verification subcommand runs the identity suites.

Every output row carries (seed, stream range, config hash) so any single row
can be re-run in isolation; replicas consume disjoint streams indexed by
(beta index, replica index), so results do not depend on worker count.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import netcore, resist, sample as smp, env as envmod, localstat
from .netcore import ElectricNetwork
from .resist import ResistanceSolver
from .sample import RngStream, SpanningTree

VERSION = "0.1.0"

ZETA3 = 1.2020569031595943


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

@dataclass
class ExperimentConfig:
    graph: str = "complete:20"
    beta: list = field(default_factory=lambda: [0.0])
    replicas: int = 200
    samples: int = 1          # trees per replica
    radius: int = 1
    seed: int = 0
    out: str | None = None
    solver: str = "dense"
    fmt: str = "csv"
    roots_per_tree: int = 1

    def __post_init__(self):
        if not self.beta:
            raise ValueError("beta grid must be nonempty")
        if any(b < 0 for b in self.beta):
            raise ValueError("beta values must be nonnegative")
        if sorted(self.beta) != list(self.beta):
            raise ValueError("beta grid must be sorted")
        if self.replicas < 1:
            raise ValueError("replicas must be at least 1")
        if self.solver not in ("dense", "iterative"):
            raise ValueError("solver must be dense or iterative")

    def config_hash(self) -> str:
        payload = json.dumps(
            {k: getattr(self, k) for k in
             ("graph", "beta", "replicas", "samples", "radius", "seed",
              "solver", "roots_per_tree")}, sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:16]

    def stream(self, beta_index: int, replica: int) -> RngStream:
        return RngStream(self.seed, beta_index * self.replicas + replica)


def parse_beta_grid(text: str) -> list:
    """Comma list '0,1,5' or range 'a:b:steps[:log]'."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) not in (3, 4):
            raise ValueError("range form is a:b:steps or a:b:steps:log")
        a, b, steps = float(parts[0]), float(parts[1]), int(parts[2])
        if len(parts) == 4:
            if parts[3] != "log":
                raise ValueError(f"unknown spacing {parts[3]!r}")
            if a <= 0:
                raise ValueError("log spacing needs a > 0")
            return list(np.geomspace(a, b, steps))
        return list(np.linspace(a, b, steps))
    return [float(x) for x in text.split(",")]


def load_config_file(path) -> dict:
    """Plain-text key=value configuration; '#' starts a comment."""
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"bad config line: {line!r}")
            key, val = line.split("=", 1)
            out[key.strip()] = val.strip()
    return out


def build_graph(spec: str, seed: int = 0) -> ElectricNetwork:
    """Graph specs: complete:n[:c], triangle-chain:n, expander-chain:d:copies[:leaves],
    pendants:n:m:f (complete base), file:path."""
    kind, _, rest = spec.partition(":")
    args = rest.split(":") if rest else []
    if kind == "complete":
        n = int(args[0])
        c = float(args[1]) if len(args) > 1 else 1.0
        return netcore.gen_complete(n, c)
    if kind == "triangle-chain":
        return netcore.gen_glued_triangle_chain(int(args[0]))
    if kind == "expander-chain":
        leaves = int(args[2]) if len(args) > 2 else 0
        return netcore.gen_expander_chain_with_leaves(int(args[0]), int(args[1]), leaves)
    if kind == "pendants":
        base = netcore.gen_complete(int(args[0]))
        return netcore.gen_regular_plus_pendants(base, int(args[1]), int(args[2]),
                                                 seed=seed)
    if kind == "file":
        return netcore.read_network(rest)
    raise ValueError(f"unknown graph spec {spec!r}")


# ---------------------------------------------------------------------------
# primitive observables
# ---------------------------------------------------------------------------

def overlap_exact(solver: ResistanceSolver) -> float:
    """Expected common-edge count of two independent trees on this network:
    the sum over edges of the squared Kirchhoff probability."""
    p = solver.kirchhoff_probabilities()
    return float(np.sum(p * p))


def overlap_for_environment(net: ElectricNetwork, environment) -> tuple:
    """(overlap, engine name) for one environment; exact inner expectation."""
    p, method = envmod.edge_tree_marginals(net, environment)
    return float(np.sum(p * p)), method


def total_length(tree: SpanningTree, labels) -> float:
    """Sum of labels over tree edges."""
    labels = np.asarray(labels, dtype=np.float64)
    return float(labels[tree.edge_indices].sum())


def component_count_integral(tree: SpanningTree, labels) -> float:
    """Total length recovered from the component-count integral.

    The number of components of the tree thresholded at level t is piecewise
    constant, dropping by one at each edge label, so the integral of
    (components - 1) over [0, 1] telescopes to the label sum exactly.
    """
    lab = np.sort(np.asarray(labels, dtype=np.float64)[tree.edge_indices])
    ts = np.concatenate(([0.0], lab, [1.0]))
    counts = np.arange(len(lab), -1, -1, dtype=np.float64)
    return float(np.dot(np.diff(ts), counts))


def small_beta_length_reference(n: int, beta: float) -> float:
    """Closed-form mean-length curve for the weak-disorder regime on K_n."""
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if beta < 1e-3:
        return n * (0.5 - beta / 12.0)
    den = -math.expm1(-beta)
    num = den - beta * math.exp(-beta)
    return n / beta * num / den


# ---------------------------------------------------------------------------
# sweep rows
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    beta: float
    estimate: float
    stderr: float
    replicas: int
    walltime: float
    seed: int
    stream_lo: int
    stream_hi: int
    config_hash: str
    method: str = ""
    ok: bool = True
    error: str = ""
    aux: dict = field(default_factory=dict)

    def as_record(self) -> dict:
        rec = {"beta": self.beta, "estimate": self.estimate,
               "stderr": self.stderr, "replicas": self.replicas,
               "walltime": round(self.walltime, 3), "seed": self.seed,
               "stream_lo": self.stream_lo, "stream_hi": self.stream_hi,
               "config_hash": self.config_hash, "method": self.method,
               "ok": self.ok, "error": self.error}
        for k in sorted(self.aux):
            rec[k] = self.aux[k]
        return rec


def _row_stats(values):
    values = np.asarray(values, dtype=np.float64)
    est = float(values.mean())
    se = float(values.std(ddof=1) / np.sqrt(len(values))) if len(values) > 1 else 0.0
    return est, se


def overlap_sweep(config: ExperimentConfig, net: ElectricNetwork | None = None):
    """Mean exact overlap per beta, averaged over fresh environments.

    The inner conditional expectation given the labels is computed exactly
    from the squared Kirchhoff probabilities; only the environment average is
    Monte Carlo.  A failing beta row is flagged, not fatal.
    """
    net = net or build_graph(config.graph, seed=config.seed)
    rows = []
    for bi, beta in enumerate(config.beta):
        t0 = time.perf_counter()
        lo = bi * config.replicas
        row = SweepRow(beta=beta, estimate=np.nan, stderr=np.nan,
                       replicas=config.replicas, walltime=0.0,
                       seed=config.seed, stream_lo=lo,
                       stream_hi=lo + config.replicas - 1,
                       config_hash=config.config_hash())
        try:
            if beta == 0.0:
                solver = ResistanceSolver(net.with_conductances(np.ones(net.m)),
                                          mode=config.solver)
                row.estimate, row.stderr = overlap_exact(solver), 0.0
                row.method = "kirchhoff-deterministic"
            else:
                vals = []
                methods = set()
                for rep in range(config.replicas):
                    rng = config.stream(bi, rep).generator()
                    environment = envmod.draw_environment(net, beta, rng)
                    val, method = overlap_for_environment(net, environment)
                    vals.append(val)
                    methods.add(method)
                row.estimate, row.stderr = _row_stats(vals)
                row.method = "+".join(sorted(methods))
            row.aux["overlap_per_n"] = row.estimate / net.n
        except (resist.SolverError, envmod.MarginalError, envmod.TieError) as exc:
            row.ok = False
            row.error = str(exc)
        row.walltime = time.perf_counter() - t0
        rows.append(row)
    return rows


def length_sweep(config: ExperimentConfig, net: ElectricNetwork | None = None):
    """Mean total length of sampled trees per beta, with reference columns.

    Reference curves (the zeta(3) constant and the weak-disorder closed form)
    apply to the complete graph; other graphs get a no-reference flag.
    """
    net = net or build_graph(config.graph, seed=config.seed)
    is_complete = net.m == net.n * (net.n - 1) // 2
    rows = []
    for bi, beta in enumerate(config.beta):
        t0 = time.perf_counter()
        lo = bi * config.replicas
        row = SweepRow(beta=beta, estimate=np.nan, stderr=np.nan,
                       replicas=config.replicas, walltime=0.0,
                       seed=config.seed, stream_lo=lo,
                       stream_hi=lo + config.replicas - 1,
                       config_hash=config.config_hash())
        try:
            means = []
            methods = set()
            for rep in range(config.replicas):
                rng = config.stream(bi, rep).generator()
                environment = envmod.draw_environment(net, beta, rng)
                if beta == 0.0:
                    tables = smp.walk_tables(net.with_conductances(np.ones(net.m)))
                    prepared = ("walk", tables)
                else:
                    prepared = envmod.prepare_environment_sampler(net, environment)
                methods.add(prepared[0])
                lengths = [total_length(
                    envmod.sample_environment_tree(net, environment, rng,
                                                   prepared=prepared),
                    environment.label) for _ in range(config.samples)]
                means.append(float(np.mean(lengths)))
            row.estimate, row.stderr = _row_stats(means)
            row.method = "+".join(sorted(methods))
            row.aux["zeta3"] = ZETA3
            row.aux["has_reference"] = is_complete
            row.aux["small_beta_formula"] = (
                small_beta_length_reference(net.n, beta) if is_complete else np.nan)
            logn = math.log(net.n)
            row.aux["upper_bound_shape"] = net.n * logn / (beta + logn)
        except (smp.SamplerStallError, envmod.TieError, resist.SolverError) as exc:
            row.ok = False
            row.error = str(exc)
        row.walltime = time.perf_counter() - t0
        rows.append(row)
    return rows


# ---------------------------------------------------------------------------
# census comparison
# ---------------------------------------------------------------------------

@dataclass
class CensusCompareRow:
    beta: float
    observations: int
    tv_vs_reference: float
    tv_vs_mst: float
    truncations: int
    walltime: float
    seed: int
    config_hash: str
    pattern_cells: list = field(default_factory=list)
    ok: bool = True
    error: str = ""
    census_obj: object = None

    def as_record(self) -> dict:
        return {k: v for k, v in self.__dict__.items() if k != "census_obj"}


def _environment_census(net, config, beta, bi, r):
    trees_needed = config.replicas * config.samples
    out = localstat.LocalCensus(r=r, roots_per_tree=config.roots_per_tree)
    unit_tables = None
    for rep in range(config.replicas):
        rng = config.stream(bi, rep).generator()
        if beta == 0.0:
            if unit_tables is None:
                unit_tables = smp.walk_tables(net.with_conductances(np.ones(net.m)))
            prepared = ("walk", unit_tables)
            environment = None
        else:
            environment = envmod.draw_environment(net, beta, rng)
            prepared = envmod.prepare_environment_sampler(net, environment)
        for _ in range(config.samples):
            if environment is None:
                tree = smp.wilson_sample(net, rng, tables=prepared[1])
            else:
                tree = envmod.sample_environment_tree(net, environment, rng,
                                                      prepared=prepared)
            children = tree.adjacency()
            roots = rng.integers(0, tree.n, size=config.roots_per_tree)
            for v in roots:
                out.record(localstat.ball_from_adjacency(children, tree.parent,
                                                         int(v), r))
    out.check_consistency()
    assert out.samples == trees_needed * config.roots_per_tree
    return out


def mst_census(net, config, r, stream_offset=1_000_000):
    """Empirical census of the label-MST over fresh label draws."""
    out = localstat.LocalCensus(r=r, roots_per_tree=config.roots_per_tree)
    for rep in range(config.replicas):
        rng = RngStream(config.seed, stream_offset + rep).generator()
        labels = rng.random(net.m)
        tree = smp.kruskal_min(net, labels)
        for _ in range(config.samples):
            children = tree.adjacency()
            roots = rng.integers(0, tree.n, size=config.roots_per_tree)
            for v in roots:
                out.record(localstat.ball_from_adjacency(children, tree.parent,
                                                         int(v), r))
    out.check_consistency()
    return out


def census_compare(config: ExperimentConfig, net: ElectricNetwork | None = None):
    """Per beta: census of the environment tree vs the reference law and vs
    the empirical MST census."""
    if config.radius > 3:
        raise ValueError("census comparison guarded to radius <= 3")
    net = net or build_graph(config.graph, seed=config.seed)
    reference_census = mst_census(net, config, config.radius)
    rows = []
    for bi, beta in enumerate(config.beta):
        t0 = time.perf_counter()
        row = CensusCompareRow(beta=beta, observations=0, tv_vs_reference=np.nan,
                               tv_vs_mst=np.nan, truncations=0, walltime=0.0,
                               seed=config.seed, config_hash=config.config_hash())
        try:
            c = _environment_census(net, config, beta, bi, config.radius)
            row.observations = c.samples
            row.truncations = c.truncation_count
            row.tv_vs_reference = localstat.census_vs_reference_tv(c)
            row.tv_vs_mst = localstat.census_tv(c, reference_census)
            top = sorted(c.counts.items(), key=lambda kv: -kv[1])[:8]
            row.pattern_cells = [
                {"encoding": pat.encoding, "k": pat.k, "t": pat.t,
                 "stab": pat.stab, "count": cnt,
                 "empirical_p": cnt / c.samples,
                 "reference_p": localstat.pgw_reference_probability(pat)}
                for pat, cnt in top]
            row.census_obj = c
        except (smp.SamplerStallError, envmod.TieError, resist.SolverError,
                envmod.MarginalError) as exc:
            row.ok = False
            row.error = str(exc)
        row.walltime = time.perf_counter() - t0
        rows.append(row)
    return rows


def write_census_csv(census_obj: localstat.LocalCensus, path,
                     theorem_sums: dict | None = None,
                     header_lines=()) -> None:
    """Census CSV: pattern_encoding,k,t,stab,count,empirical_p,reference_p,
    theorem_sum_p."""
    with open(path, "w") as fh:
        for line in header_lines:
            fh.write(f"# {line}\n")
        fh.write("pattern_encoding,k,t,stab,count,empirical_p,reference_p,theorem_sum_p\n")
        for pat, cnt in sorted(census_obj.counts.items(),
                               key=lambda kv: (-kv[1], kv[0].encoding)):
            ts = theorem_sums.get(pat, "") if theorem_sums else ""
            fh.write(f"{pat.encoding},{pat.k},{pat.t},{pat.stab},{cnt},"
                     f"{cnt / census_obj.samples!r},"
                     f"{localstat.pgw_reference_probability(pat)!r},{ts}\n")


# ---------------------------------------------------------------------------
# verification suites
# ---------------------------------------------------------------------------

@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    info: str = ""


def random_test_network(rng, n, extra_edge_prob=None) -> ElectricNetwork:
    """Connected random network: spanning-tree backbone plus sprinkled edges,
    conductances uniform in [0.1, 10]."""
    p = extra_edge_prob if extra_edge_prob is not None else min(
        1.0, 2.5 * math.log(max(n, 2)) / n)
    perm = rng.permutation(n)
    attach = (rng.random(n - 1) * np.arange(1, n)).astype(np.int64)
    tu = np.minimum(perm[1:], perm[attach])
    tv = np.maximum(perm[1:], perm[attach])
    iu, iv = np.triu_indices(n, k=1)
    keep = rng.random(len(iu)) < p
    eu = np.concatenate([tu, iu[keep]])
    ev = np.concatenate([tv, iv[keep]])
    key = eu * n + ev
    _, first = np.unique(key, return_index=True)
    eu, ev = eu[first], ev[first]
    c = rng.uniform(0.1, 10.0, size=len(eu))
    order = np.lexsort((ev, eu))
    return ElectricNetwork(n, eu[order], ev[order], c[order])


_random_test_network = random_test_network


def verify_identities(seed=0, n_networks=50) -> list:
    """Foster, lower-bound, metric, and Rayleigh checks on random networks."""
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9001,)))
    checks = []
    worst_foster = 0.0
    worst_nw = 0.0
    worst_metric = 0.0
    worst_rayleigh = 0.0
    for _ in range(n_networks):
        n = int(rng.integers(8, 40))
        net = _random_test_network(rng, n)
        solver = ResistanceSolver(net)
        foster = abs(solver.foster_sum() - (n - 1)) / (n - 1)
        worst_foster = max(worst_foster, foster)
        reff = solver.edge_resistances()
        for e in range(net.m):
            bound = resist.nash_williams_bound(net, int(net.edge_u[e]),
                                               int(net.edge_v[e]))
            worst_nw = max(worst_nw, bound - reff[e])
        for _ in range(20):
            u, v, w = rng.integers(0, n, size=3)
            gap = (solver.effective_resistance(int(u), int(w))
                   - solver.effective_resistance(int(u), int(v))
                   - solver.effective_resistance(int(v), int(w)))
            worst_metric = max(worst_metric, gap)
        e0 = int(rng.integers(0, net.m))
        c2 = net.conductance.copy()
        c2[e0] *= 1.5
        solver2 = ResistanceSolver(net.with_conductances(c2))
        for _ in range(10):
            u, v = rng.integers(0, n, size=2)
            worst_rayleigh = max(worst_rayleigh,
                                 solver2.effective_resistance(int(u), int(v))
                                 - solver.effective_resistance(int(u), int(v)))
    checks.append(Check("foster_relative_defect", worst_foster, 1e-8,
                        worst_foster <= 1e-8))
    checks.append(Check("nash_williams_lower_bound", worst_nw, 1e-10,
                        worst_nw <= 1e-10))
    checks.append(Check("resistance_triangle_inequality", worst_metric, 1e-10,
                        worst_metric <= 1e-10))
    checks.append(Check("rayleigh_monotonicity", worst_rayleigh, 1e-10,
                        worst_rayleigh <= 1e-10))
    return checks


def verify_oracle(seed=0, samples=20_000) -> list:
    """Sampler-vs-enumeration total variation on small fixtures."""
    from .oracles import oracle_run, small_connected_graphs
    rng_master = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(9002,)))
    checks = []
    worst = {"wilson": 0.0, "aldous_broder": 0.0}
    for n, edges in small_connected_graphs(max_n=4):
        c = rng_master.uniform(0.1, 10.0, size=len(edges))
        net = netcore.build_network(n, [(u, v, w) for (u, v), w in zip(edges, c)])
        run = oracle_run(net, samples,
                         np.random.default_rng(
                             np.random.SeedSequence(seed, spawn_key=(9003, n, net.m))))
        for k in worst:
            worst[k] = max(worst[k], run.tv(k))
    tol = 0.02 + 2.0 / math.sqrt(samples)
    for k, v in worst.items():
        checks.append(Check(f"tv_{k}_vs_enumeration", v, tol, v <= tol,
                            info=f"{samples} samples"))
    return checks


def verify_markov(seed=0) -> list:
    from .oracles import conditional_law_exact_gap
    gap = conditional_law_exact_gap(seed)
    return [Check("spatial_markov_conditional_law", gap, 1e-9, gap <= 1e-9,
                  info="exact enumeration comparison, graphs on <= 5 vertices")]


def verify_association(seed=0) -> list:
    from .oracles import negative_association_worst_violation
    worst = negative_association_worst_violation(seed, max_n=4)
    return [Check("negative_association_violation", worst, 1e-11, worst <= 1e-11,
                  info="pairs and triples, all connected graphs on <= 4 vertices")]


def verify_balance(seed=0) -> list:
    checks = []
    net = netcore.gen_complete(100)
    rep = netcore.balance_report(net, gamma=99.0, K=2.0, delta=0.1)
    checks.append(Check("complete_graph_balanced", float(rep.all_pass), 1.0,
                        rep.all_pass))
    rep2 = netcore.balance_report(net, gamma=99.0, K=2.0, delta=0.005)
    checks.append(Check("tight_delta_fails_edge_condition",
                        float(not rep2.passes[2]), 1.0, not rep2.passes[2]))
    # monotonicity in delta
    rng = np.random.default_rng(seed)
    mono_ok = True
    for _ in range(20):
        net = _random_test_network(rng, int(rng.integers(6, 25)))
        gamma = float(np.median(net.vertex_strength))
        r1 = netcore.balance_report(net, gamma, 3.0, 0.2)
        r2 = netcore.balance_report(net, gamma, 3.0, 0.6)
        if all(r1.passes) and not all(r2.passes):
            mono_ok = False
    checks.append(Check("passes_monotone_in_delta", float(mono_ok), 1.0, mono_ok))
    return checks


VERIFY_SUITES = {
    "identities": verify_identities,
    "oracle": verify_oracle,
    "markov": verify_markov,
    "association": verify_association,
    "balance": verify_balance,
}


def verify(suite: str, seed: int = 0) -> list:
    """Run one named identity suite; returns machine-readable checks."""
    if suite == "all":
        out = []
        for name in VERIFY_SUITES:
            out.extend(verify(name, seed))
        return out
    if suite not in VERIFY_SUITES:
        raise ValueError(f"unknown suite {suite!r}; choose from "
                         f"{sorted(VERIFY_SUITES)} or 'all'")
    return VERIFY_SUITES[suite](seed=seed)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _header_lines(config: ExperimentConfig):
    return [f"wstlab v{VERSION}",
            f"seed={config.seed}",
            f"config_hash={config.config_hash()}",
            f"graph={config.graph}"]


def write_rows(rows, path, config: ExperimentConfig, fmt="csv"):
    records = [r.as_record() if hasattr(r, "as_record") else r.__dict__ for r in rows]
    if fmt == "json":
        payload = {"meta": {"version": VERSION, "seed": config.seed,
                            "config_hash": config.config_hash(),
                            "graph": config.graph},
                   "rows": records}
        text = json.dumps(payload, indent=2, default=_json_default) + "\n"
    else:
        cols = []
        for rec in records:
            for k in rec:
                if k not in cols:
                    cols.append(k)
        lines = [f"# {line}" for line in _header_lines(config)]
        lines.append(",".join(cols))
        for rec in records:
            lines.append(",".join(_csv_cell(rec.get(k, "")) for k in cols))
        text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w") as fh:
            fh.write(text)


def _json_default(obj):
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _csv_cell(x):
    if isinstance(x, float):
        return repr(float(x))
    if isinstance(x, (list, dict)):
        return json.dumps(x, default=_json_default).replace(",", ";")
    return str(x)


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--graph", default=None, help="graph spec, e.g. complete:200")
    p.add_argument("--beta", default=None,
                   help="comma list '0,1,5' or range 'a:b:steps[:log]'")
    p.add_argument("--replicas", type=int, default=None)
    p.add_argument("--samples", type=int, default=None)
    p.add_argument("--radius", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--solver", choices=["dense", "iterative"], default=None)
    p.add_argument("--format", dest="fmt", choices=["csv", "json"], default=None)
    p.add_argument("--roots-per-tree", type=int, default=None)
    p.add_argument("--config", default=None, help="key=value config file")


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if args.config:
        base = load_config_file(args.config)
    merged = {
        "graph": args.graph or base.get("graph", "complete:20"),
        "beta": parse_beta_grid(args.beta or base.get("beta", "0")),
        "replicas": args.replicas or int(base.get("replicas", 200)),
        "samples": args.samples or int(base.get("samples", 1)),
        "radius": args.radius or int(base.get("radius", 1)),
        "seed": args.seed if args.seed is not None else int(base.get("seed", 0)),
        "out": args.out or base.get("out"),
        "solver": args.solver or base.get("solver", "dense"),
        "fmt": args.fmt or base.get("format", "csv"),
        "roots_per_tree": args.roots_per_tree or int(base.get("roots_per_tree", 1)),
    }
    return ExperimentConfig(**merged)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="wstlab",
        description="Weighted spanning tree laboratory: samplers, resistance "
                    "identities, and beta-environment experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="emit a network file")
    p_gen.add_argument("--graph", required=True)
    p_gen.add_argument("--seed", type=int, default=0)
    p_gen.add_argument("--out", default=None)

    p_sample = sub.add_parser("sample", help="write one spanning tree to stdout")
    p_sample.add_argument("--graph", required=True)
    p_sample.add_argument("--beta", type=float, default=None,
                          help="draw a random environment at this beta first")
    p_sample.add_argument("--seed", type=int, default=0)
    p_sample.add_argument("--expand", action="store_true",
                          help="append (u,v) endpoints after the edge indices")
    p_sample.add_argument("--env-file", default=None,
                          help="replay a dumped environment instead of drawing one")
    p_sample.add_argument("--dump-env", default=None,
                          help="write the drawn environment to this CSV")

    p_table = sub.add_parser(
        "edge-table", help="per-edge resistance/Kirchhoff table as CSV")
    p_table.add_argument("--graph", required=True)
    p_table.add_argument("--seed", type=int, default=0)
    p_table.add_argument("--solver", choices=["dense", "iterative"],
                         default="dense")
    p_table.add_argument("--out", default=None)

    for name in ("overlap-sweep", "length-sweep"):
        _add_common(sub.add_parser(name))
    p_census = sub.add_parser("census")
    _add_common(p_census)
    p_census.add_argument("--theorem-gamma", type=float, default=None,
                          help="fill theorem_sum_p using this strength floor")
    p_census.add_argument("--theorem-k", type=float, default=None,
                          help="strength band ratio K for theorem_sum_p")

    p_verify = sub.add_parser("verify", help="run an identity suite")
    p_verify.add_argument("--suite", default="all",
                          choices=sorted(VERIFY_SUITES) + ["all"])
    p_verify.add_argument("--seed", type=int, default=0)
    p_verify.add_argument("--format", dest="fmt", choices=["csv", "json"],
                          default="csv")

    args = parser.parse_args(argv)

    if args.command == "gen":
        net = build_graph(args.graph, seed=args.seed)
        if args.out:
            netcore.write_network(net, args.out)
        else:
            netcore.write_network(net, "/dev/stdout")
        return 0

    if args.command == "sample":
        net = build_graph(args.graph, seed=args.seed)
        rng = RngStream(args.seed, 0).generator()
        environment = None
        if args.env_file is not None:
            environment = envmod.load_environment(net, args.env_file)
        elif args.beta is not None:
            environment = envmod.draw_environment(net, args.beta, rng)
        if environment is not None:
            if args.dump_env:
                envmod.dump_environment(net, environment, args.dump_env)
            tree = envmod.sample_environment_tree(net, environment, rng)
        else:
            tree = smp.wilson_sample(net, rng)
        print(smp.tree_to_line(tree, net, expand=args.expand))
        return 0

    if args.command == "edge-table":
        net = build_graph(args.graph, seed=args.seed)
        solver = ResistanceSolver(net, mode=args.solver)
        reff = solver.edge_resistances()
        probs = solver.kirchhoff_probabilities()
        lines = [f"# wstlab v{VERSION}",
                 f"# graph={args.graph}",
                 f"# foster_sum={solver.foster_sum()!r}",
                 "u,v,c,reff,kirchhoff_p"]
        for i, (u, v, c) in enumerate(net.edge_pairs()):
            lines.append(f"{u},{v},{float(c)!r},{float(reff[i])!r},{float(probs[i])!r}")
        text = "\n".join(lines) + "\n"
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
        else:
            sys.stdout.write(text)
        return 0

    if args.command == "verify":
        checks = verify(args.suite, seed=args.seed)
        if args.fmt == "json":
            print(json.dumps([c.__dict__ for c in checks], indent=2))
        else:
            for c in checks:
                status = "PASS" if c.passed else "FAIL"
                print(f"{status} {c.name} value={c.value:.3e} tol={c.tol:.3e} {c.info}")
        return 0 if all(c.passed for c in checks) else 1

    config = _config_from_args(args)
    if args.command == "overlap-sweep":
        rows = overlap_sweep(config)
    elif args.command == "length-sweep":
        rows = length_sweep(config)
    else:
        rows = census_compare(config)
        if config.out:
            net = build_graph(config.graph, seed=config.seed)
            for i, row in enumerate(rows):
                if row.census_obj is None:
                    continue
                sums = None
                if args.theorem_gamma is not None and args.theorem_k is not None:
                    rng = RngStream(config.seed, 10_000_000 + i).generator()
                    sums = {pat: repr(localstat.theorem_sum(
                                net, pat, args.theorem_gamma, args.theorem_k,
                                mode="monte_carlo", rng=rng,
                                samples=50_000).estimate)
                            for pat in row.census_obj.counts}
                write_census_csv(row.census_obj,
                                 f"{config.out}.beta{i}.patterns.csv",
                                 theorem_sums=sums,
                                 header_lines=_header_lines(config)
                                 + [f"beta={row.beta!r}"])
    write_rows(rows, config.out, config, fmt=config.fmt)
    return 0 if all(getattr(r, "ok", True) for r in rows) else 1


if __name__ == "__main__":
    sys.exit(main())
