import json
import math

import numpy as np
import pytest

from wstlab import expcli
from wstlab.expcli import (ExperimentConfig, build_graph, census_compare,
                           component_count_integral, length_sweep,
                           load_config_file, overlap_exact, overlap_sweep,
                           parse_beta_grid, small_beta_length_reference,
                           total_length, verify, write_rows)
from wstlab.netcore import build_network, gen_complete
from wstlab.resist import ResistanceSolver
from wstlab.sample import RngStream, SpanningTree, kruskal_min


@pytest.fixture(scope="module")
def triangle():
    return build_network(3, [(0, 1, 1.0), (1, 2, 2.0), (0, 2, 3.0)])


def test_overlap_exact_values(triangle):
    assert overlap_exact(ResistanceSolver(triangle)) == pytest.approx(
        170 / 121, abs=1e-12)
    tree = build_network(4, [(0, 1, 1.0), (1, 2, 3.0), (2, 3, 0.5)])
    assert overlap_exact(ResistanceSolver(tree)) == pytest.approx(3.0, abs=1e-12)
    assert overlap_exact(ResistanceSolver(gen_complete(4))) == pytest.approx(
        1.5, abs=1e-12)


def test_overlap_bounded_by_tree_size():
    rng = np.random.default_rng(1)
    from wstlab.expcli import random_test_network
    for _ in range(10):
        net = random_test_network(rng, int(rng.integers(4, 30)))
        assert overlap_exact(ResistanceSolver(net)) <= net.n - 1 + 1e-9


def test_total_length_and_integral():
    net = build_network(3, [(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)])
    tree = SpanningTree(net, [0, 1])
    labels = np.array([0.2, 0.5, 0.9])
    assert total_length(tree, labels) == pytest.approx(0.7)
    assert component_count_integral(tree, labels) == pytest.approx(0.7, abs=1e-15)
    assert total_length(tree, np.zeros(3)) == 0.0
    assert component_count_integral(tree, np.ones(3)) == pytest.approx(2.0)
    # MST minimality among all spanning trees
    from wstlab.sample import enumerate_spanning_trees
    k4 = gen_complete(4)
    rng = np.random.default_rng(2)
    for _ in range(20):
        lab = rng.random(k4.m)
        mst_len = total_length(kruskal_min(k4, lab), lab)
        for t, _ in enumerate_spanning_trees(k4):
            assert mst_len <= total_length(t, lab) + 1e-12


def test_integral_identity_random_trees():
    rng = np.random.default_rng(3)
    for _ in range(300):
        n = int(rng.integers(2, 60))
        parent = [-1] + [int(rng.integers(0, j)) for j in range(1, n)]
        triples = [(min(v, parent[v]), max(v, parent[v]), 1.0) for v in range(1, n)]
        net = build_network(n, triples)
        tree = SpanningTree(net, list(range(n - 1)))
        labels = rng.random(n - 1)
        assert abs(total_length(tree, labels)
                   - component_count_integral(tree, labels)) <= 1e-12


def test_small_beta_reference():
    # closed form at beta=5, n=1000
    val = small_beta_length_reference(1000, 5.0)
    direct = 1000 / 5 * (1 - 5 * math.exp(-5) - math.exp(-5)) / (1 - math.exp(-5))
    assert val == pytest.approx(direct, rel=1e-12)
    assert direct == pytest.approx(193.216, abs=0.01)
    # beta -> 0 limit is the uniform mean (n/2), approached smoothly
    assert small_beta_length_reference(100, 0.0) == pytest.approx(50.0)
    assert small_beta_length_reference(100, 1e-6) == pytest.approx(50.0, abs=1e-3)
    assert small_beta_length_reference(100, 2e-3) == pytest.approx(
        small_beta_length_reference(100, 1.999e-3), rel=1e-4)


def test_parse_beta_grid():
    assert parse_beta_grid("0,1,5") == [0.0, 1.0, 5.0]
    lin = parse_beta_grid("0:10:3")
    assert lin == [0.0, 5.0, 10.0]
    lg = parse_beta_grid("1:100:3:log")
    assert lg == pytest.approx([1.0, 10.0, 100.0])
    with pytest.raises(ValueError):
        parse_beta_grid("1:100:3:cubic")


def test_config_validation_and_hash():
    cfg = ExperimentConfig(graph="complete:10", beta=[0.0, 1.0], replicas=3)
    assert len(cfg.config_hash()) == 16
    with pytest.raises(ValueError):
        ExperimentConfig(beta=[])
    with pytest.raises(ValueError):
        ExperimentConfig(beta=[2.0, 1.0])
    with pytest.raises(ValueError):
        ExperimentConfig(beta=[-1.0])
    with pytest.raises(ValueError):
        ExperimentConfig(beta=[0.0], replicas=0)


def test_config_file_and_override(tmp_path):
    path = tmp_path / "exp.cfg"
    path.write_text("graph = complete:12\nbeta = 0,2\nreplicas = 4\n# comment\n")
    loaded = load_config_file(path)
    assert loaded["graph"] == "complete:12"
    import argparse
    args = argparse.Namespace(config=str(path), graph=None, beta=None,
                              replicas=7, samples=None, radius=None, seed=None,
                              out=None, solver=None, fmt=None,
                              roots_per_tree=None)
    cfg = expcli._config_from_args(args)
    assert cfg.graph == "complete:12"
    assert cfg.replicas == 7          # flag overrides file
    assert cfg.beta == [0.0, 2.0]


def test_build_graph_specs(tmp_path):
    assert build_graph("complete:6").n == 6
    assert build_graph("complete:6:2.5").conductance[0] == 2.5
    assert build_graph("triangle-chain:3").n == 7
    assert build_graph("expander-chain:3:2").m == 13
    assert build_graph("pendants:5:2:1", seed=1).n == 7
    net = gen_complete(4)
    from wstlab.netcore import write_network
    p = tmp_path / "g.txt"
    write_network(net, p)
    assert build_graph(f"file:{p}").m == 6
    with pytest.raises(ValueError):
        build_graph("torus:5")


def test_overlap_sweep_rows(triangle):
    cfg = ExperimentConfig(graph="unused", beta=[0.0, 1.0, 3.0], replicas=6,
                           seed=9)
    rows = overlap_sweep(cfg, net=triangle)
    assert [r.beta for r in rows] == [0.0, 1.0, 3.0]
    assert all(r.ok for r in rows)
    # beta = 0 row is the deterministic unit-conductance value
    s = ResistanceSolver(triangle.with_conductances(np.ones(3)))
    assert rows[0].estimate == overlap_exact(s)
    assert rows[0].stderr == 0.0
    assert rows[1].stream_lo == 6 and rows[1].stream_hi == 11
    # rerun gives bit-identical estimates
    rows2 = overlap_sweep(cfg, net=triangle)
    assert [r.estimate for r in rows] == [r.estimate for r in rows2]


def test_length_sweep_rows():
    net = gen_complete(12)
    cfg = ExperimentConfig(graph="complete:12", beta=[0.0, 2.0], replicas=5,
                           samples=2, seed=3)
    rows = length_sweep(cfg, net=net)
    assert all(r.ok for r in rows)
    assert rows[0].aux["has_reference"]
    assert rows[0].aux["zeta3"] == pytest.approx(1.2020569, abs=1e-7)
    # beta = 0: labels are independent of the tree, mean length near (n-1)/2
    assert rows[0].estimate == pytest.approx(5.5, abs=1.2)
    # non-complete graph gets the no-reference flag
    chain = build_graph("triangle-chain:4")
    rows2 = length_sweep(ExperimentConfig(graph="triangle-chain:4",
                                          beta=[1.0], replicas=3, seed=1),
                         net=chain)
    assert rows2[0].ok and not rows2[0].aux["has_reference"]


def test_census_compare_rows():
    cfg = ExperimentConfig(graph="complete:40", beta=[0.0, 1e7], replicas=40,
                           samples=1, radius=1, seed=4, roots_per_tree=5)
    rows = census_compare(cfg, net=gen_complete(40))
    assert all(r.ok for r in rows)
    assert rows[0].observations == 200
    # r = 0 comparison is always exactly zero TV
    cfg0 = ExperimentConfig(graph="complete:40", beta=[0.0], replicas=10,
                            samples=1, radius=0, seed=4)
    row0 = census_compare(cfg0, net=gen_complete(40))[0]
    assert row0.tv_vs_mst == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        census_compare(ExperimentConfig(graph="complete:10", beta=[0.0],
                                        replicas=1, radius=4))


def test_write_rows_csv_and_json(tmp_path, triangle):
    cfg = ExperimentConfig(graph="triangle", beta=[0.0, 1.0], replicas=4, seed=2)
    rows = overlap_sweep(cfg, net=triangle)
    csv_path = tmp_path / "rows.csv"
    write_rows(rows, csv_path, cfg, fmt="csv")
    text = csv_path.read_text()
    assert text.startswith("# wstlab v")
    assert "config_hash" in text
    json_path = tmp_path / "rows.json"
    write_rows(rows, json_path, cfg, fmt="json")
    payload = json.loads(json_path.read_text())
    assert payload["meta"]["seed"] == 2
    assert len(payload["rows"]) == 2


def test_csv_reproducibility_modulo_walltime(tmp_path, triangle):
    cfg = ExperimentConfig(graph="triangle", beta=[0.0, 2.0], replicas=5, seed=8)
    paths = []
    for i in range(2):
        p = tmp_path / f"run{i}.csv"
        write_rows(overlap_sweep(cfg, net=triangle), p, cfg, fmt="csv")
        paths.append(p)

    def strip_walltime(path):
        lines = path.read_text().splitlines()
        head = [ln for ln in lines if ln.startswith("#")]
        cols = lines[len(head)].split(",")
        wt = cols.index("walltime")
        body = [",".join(c for i, c in enumerate(ln.split(",")) if i != wt)
                for ln in lines[len(head):]]
        return head, body

    assert strip_walltime(paths[0]) == strip_walltime(paths[1])


def test_verify_suites_pass():
    for suite in ("identities", "oracle", "markov", "association", "balance"):
        checks = verify(suite, seed=0)
        assert checks, suite
        assert all(c.passed for c in checks), [c for c in checks if not c.passed]


def test_verify_unknown_suite():
    with pytest.raises(ValueError):
        verify("nonsense")


def test_cli_end_to_end(tmp_path, capsys):
    net_path = tmp_path / "net.txt"
    assert expcli.main(["gen", "--graph", "complete:5", "--out", str(net_path)]) == 0
    assert build_graph(f"file:{net_path}").m == 10

    assert expcli.main(["sample", "--graph", "complete:5", "--seed", "3",
                        "--expand"]) == 0
    line = capsys.readouterr().out.strip()
    assert len(line.split()) == 8  # 4 indices + 4 endpoint pairs

    out = tmp_path / "sweep.csv"
    assert expcli.main(["overlap-sweep", "--graph", "complete:8",
                        "--beta", "0,1", "--replicas", "3", "--seed", "1",
                        "--out", str(out)]) == 0
    assert out.read_text().count("\n") >= 3

    assert expcli.main(["verify", "--suite", "balance"]) == 0
    assert "PASS" in capsys.readouterr().out

    cfg_file = tmp_path / "c.cfg"
    cfg_file.write_text("graph=complete:6\nbeta=0\nreplicas=2\n")
    out2 = tmp_path / "len.csv"
    assert expcli.main(["length-sweep", "--config", str(cfg_file),
                        "--out", str(out2)]) == 0
    assert "estimate" in out2.read_text()


def test_cli_census_smoke(tmp_path):
    out = tmp_path / "census.csv"
    rc = expcli.main(["census", "--graph", "complete:25", "--beta", "0",
                      "--replicas", "20", "--radius", "1", "--seed", "2",
                      "--roots-per-tree", "4", "--out", str(out)])
    assert rc == 0
    assert "tv_vs_reference" in out.read_text()
