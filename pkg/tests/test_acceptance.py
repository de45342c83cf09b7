"""End-to-end acceptance suite; one test per criterion, each printing a
PASS line with its runtime (visible with pytest -s)."""

import csv
import time
from statistics import median

import numpy as np
import pytest

import stagecause as sc
from stagecause.cli import main as cli_main
from stagecause.experiment import ExperimentConfig, run_experiment
from stagecause.model import StagedTree, independent_staging, uniform_variables

import oracles


class Budget:
    def __init__(self, name, seconds):
        self.name = name
        self.seconds = seconds

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    def __exit__(self, exc_type, *rest):
        elapsed = time.perf_counter() - self.t0
        if exc_type is not None:
            print(f"ACCEPTANCE {self.name}: FAIL after {elapsed:.2f} s")
            return False
        ok = elapsed < self.seconds
        status = "PASS" if ok else "FAIL (over budget)"
        print(f"ACCEPTANCE {self.name}: {status} ({elapsed:.2f} s, budget {self.seconds} s)")
        assert ok, f"{self.name} exceeded its runtime budget"
        return False


@pytest.fixture
def fixture_pair(pair_123_132):
    return pair_123_132


def test_criterion_01_cid_fixture(fixture_pair):
    with Budget("01 cid-fixture", 1.0):
        t, s = fixture_pair
        rep = sc.cid(t, s)
        assert rep.total == 0.5
        assert rep.wrong_contexts(2) == {(1, 0), (1, 1)}
        assert (0, 1) not in rep.wrong_contexts(2)   # do(X1=0, X2=1) correct
        assert (1, 1) in rep.wrong_contexts(2)       # do(X1=1, X2=1) wrong
        assert rep.values()[1] == 0.0                # X2 interventions correct
        oracle = sc.cid_oracle(t, s, draws=500, seed=0, tol=1e-7)
        assert oracle.total == 0.5
        for i in range(3):
            assert oracle.wrong_contexts(i) == rep.wrong_contexts(i)


def test_criterion_02_proposition_properties():
    with Budget("02 equivalence-properties", 10.0):
        rng = np.random.default_rng(20)
        # (i) permuting stage ids is a causally equivalent relabeling
        for _ in range(25):
            t = oracles.random_structure(rng)
            staging = []
            for labels in t.staging:
                m = int(labels.max()) + 1
                perm = rng.permutation(m)
                staging.append(perm[labels])
            s = StagedTree(t.variables, t.order, tuple(staging))
            assert sc.cid(t, s).total == 0.0
            assert sc.cid(s, t).total == 0.0
        # (iii) same order, t coarsens s
        for _ in range(25):
            s = oracles.random_structure(rng)
            staging_t = []
            for labels in s.staging:
                labels = labels.copy()
                m = int(labels.max()) + 1
                if m > 1:
                    a, b = rng.choice(m, size=2, replace=False)
                    labels[labels == b] = a
                staging_t.append(np.unique(labels, return_inverse=True)[1])
            t = StagedTree(s.variables, s.order, tuple(staging_t))
            assert sc.cid(t, s).total == 0.0
        # (iv) fully independent truth against 200 random models
        for case in range(200):
            p = int(rng.integers(2, 5))
            levels = int(rng.integers(2, 4))
            vs = uniform_variables(p, levels)
            t = StagedTree(vs, tuple(range(p)), independent_staging((levels,) * p))
            s = oracles.reordered_structure(rng, t)
            assert sc.cid(t, s).total == 0.0


def test_criterion_03_oracle_equivalence():
    with Budget("03 oracle-equivalence", 60.0):
        rng = np.random.default_rng(30)
        for case in range(100):
            t = oracles.random_structure(rng, max_levels=3)
            s = oracles.reordered_structure(rng, t)
            combinatorial = sc.cid(t, s)
            numeric = sc.cid_oracle(t, s, draws=500, seed=case, tol=1e-7)
            for i in range(t.p):
                assert numeric.wrong_contexts(i) == combinatorial.wrong_contexts(i)


def test_criterion_04_dp_optimality():
    with Budget("04 dp-optimality", 60.0):
        rng = np.random.default_rng(40)
        for case in range(50):
            p = int(rng.integers(2, 5))
            truth = sc.random_staged_tree(
                sc.GenConfig(p, int(rng.integers(2, 4)), int(rng.integers(1, 4)), seed=case)
            )
            data = sc.sample(truth, int(rng.integers(80, 400)), seed=case + 1)
            cache = sc.ScoreCache()
            dp = sc.best_order_dp(data, cache=cache, fit_params=False)
            ex = sc.best_order_exhaustive(data, cache=cache, fit_params=False)
            assert dp.score == min(s for _, s in ex.all_scores)


def test_criterion_05_round_trip_543():
    with Budget("05 dag-round-trip", 30.0):
        all_dags = sc.enumerate_dags(4)
        assert len(all_dags) == 543
        for edges in all_dags:
            g = sc.Dag(4, edges)
            tree = sc.dag_to_staged_tree(g, g.topological_order(), 2)
            assert sc.staged_tree_to_minimal_dag(tree).edges == g.edges


def test_criterion_06_uniform_dag_sampler():
    with Budget("06 uniform-sampler", 30.0):
        assert len(sc.enumerate_dags(3)) == 25
        draws = 25_000
        counts: dict = {}
        for seed in range(draws):
            g = sc.random_dag_uniform(3, seed=seed)
            counts[g.edges] = counts.get(g.edges, 0) + 1
        assert len(counts) == 25
        sigma = np.sqrt((1 / 25) * (24 / 25) / draws)
        for edges, c in counts.items():
            assert abs(c / draws - 1 / 25) < 3 * sigma, sorted(edges)


def test_criterion_07_cid_sid_correlation():
    with Budget("07 cid-sid-correlation", 300.0):
        rows, summary = sc.cid_vs_sid_experiment(500, p=5, seed=70)
        assert len(rows) == 500
        assert summary["pearson"] > 0
        assert summary["spearman"] > 0
        print(
            f"  pearson={summary['pearson']:.3f} spearman={summary['spearman']:.3f}",
        )
        # identical pairs sit at the origin
        for seed in range(20):
            g = sc.random_dag_uniform(5, seed=seed)
            t = sc.dag_to_staged_tree(g, g.topological_order(), 2)
            assert sc.sid(g, g) == 0
            assert sc.cid(t, t).total == 0.0


def test_criterion_08_recovery_trend(tmp_path):
    with Budget("08 recovery-trend", 1800.0):
        cfg = ExperimentConfig(
            p_values=(5,), l_values=(4,), k_values=(2, 3, 4),
            n_values=(100, 250, 500, 1000, 2500, 5000, 10000),
            reps=20, seed=80,
        )
        out = run_experiment(cfg, tmp_path / "trend.csv")
        with open(out, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 3 * 7 * 20 * 2

        def med(metric, method, n, k=None):
            vals = [
                float(r[metric])
                for r in rows
                if r["method"] == method and int(r["n"]) == n
                and (k is None or int(r["k"]) == k)
            ]
            return median(vals)

        for method in ("bhc", "kmeans"):
            assert med("cid", method, 10000) < med("cid", method, 100)
            assert med("kd", method, 10000) < med("kd", method, 100)
            print(
                f"  {method}: median CID {med('cid', method, 100):.2f} @N=100 -> "
                f"{med('cid', method, 10000):.2f} @N=10000; "
                f"median KD {med('kd', method, 100):.1f} -> {med('kd', method, 10000):.1f}"
            )
        assert med("cid", "kmeans", 10000, k=2) <= med("cid", "kmeans", 1000, k=2)


def test_criterion_09_bivariate_identifiability(ternary_cause_tree):
    with Budget("09 causal-order-identifiability", 120.0):
        wins = 0
        for seed in range(20):
            data = sc.sample(ternary_cause_tree, 5000, seed=seed)
            ex = sc.best_order_exhaustive(data, method="bhc", fit_params=False)
            scores = dict(ex.all_scores)
            dp = sc.best_order_dp(data, method="bhc", cache=ex.cache, fit_params=False)
            # column 0 is the ternary cause; order (0, 1) is the causal one
            if dp.order == (0, 1) and scores[(0, 1)] < scores[(1, 0)]:
                wins += 1
        print(f"  causal order selected in {wins}/20 runs")
        assert wins >= 18


def test_criterion_10_numerical_invariants():
    with Budget("10 numerical-invariants", 60.0):
        rng = np.random.default_rng(100)
        for case in range(1000):
            p = int(rng.integers(2, 5))
            tree = sc.random_staged_tree(
                sc.GenConfig(p, int(rng.integers(2, 5)), int(rng.integers(1, 5)), seed=case)
            )
            assert abs(sc.joint_table(tree).sum() - 1.0) < 1e-8
        for case in range(200):
            p = int(rng.integers(2, 5))
            tree = sc.random_staged_tree(
                sc.GenConfig(p, int(rng.integers(2, 4)), int(rng.integers(1, 4)),
                             seed=10_000 + case)
            )
            i = int(rng.integers(1, p))
            n_targets = int(rng.integers(0, i + 1))
            targets = {
                int(j): int(rng.integers(tree.cards[j]))
                for j in rng.choice(i, size=n_targets, replace=False)
            }
            got = sc.interventional(tree, i, sc.Intervention(targets))
            want = oracles.interventional_from_table(tree, i, targets)
            assert np.abs(got - want).max() < 1e-10


def test_criterion_11_experiment_determinism(tmp_path):
    with Budget("11 experiment-determinism", 120.0):
        cfg_yaml = tmp_path / "cfg.yaml"
        cfg_yaml.write_text(
            "p: [2, 3]\nl: [2]\nk: [2]\nn: [100, 250]\nreps: 2\nseed: 11\n", "utf-8"
        )
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        assert cli_main(["experiment", "--config", str(cfg_yaml), "--out", str(a),
                         "--quiet"]) == 0
        assert cli_main(["experiment", "--config", str(cfg_yaml), "--out", str(b),
                         "--quiet"]) == 0
        assert a.read_bytes() == b.read_bytes()
