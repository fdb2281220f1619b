import json
from fractions import Fraction

import pytest

from treecast.experiments import (
    CSV_HEADER,
    ExperimentConfig,
    ResultRow,
    emit,
    exact_joint_of_leaves,
    read_csv,
    run_a5_accuracy,
    run_equivalence_suite,
    run_ks_scan,
    run_noise_scan,
    suite_failures,
)
from treecast.generators import generate_binary_batch
from treecast.trees import TreeShape


class TestConfig:
    def test_unknown_keys_rejected(self):
        doc = {"experiment": "ks-scan", "seed": 1, "trails": 100}
        with pytest.raises(ValueError, match="trails"):
            ExperimentConfig.from_json(json.dumps(doc))

    def test_trials_floor(self):
        with pytest.raises(ValueError, match="trials"):
            ExperimentConfig(experiment="ks-scan", trials=99)

    def test_empty_grid_rejected(self):
        with pytest.raises(ValueError, match="grid"):
            ExperimentConfig(experiment="ks-scan", k=())

    def test_schema_version(self):
        with pytest.raises(ValueError, match="schema_version"):
            ExperimentConfig(experiment="ks-scan", schema_version=2)

    def test_from_json_roundtrip(self):
        doc = {
            "schema_version": 1,
            "experiment": "noise-scan",
            "seed": 7,
            "trials": 500,
            "k": [2],
            "theta": ["9/10"],
            "d": [1, 2],
            "s": ["0", "1/10"],
        }
        cfg = ExperimentConfig.from_json(json.dumps(doc))
        assert cfg.thetas() == [Fraction(9, 10)]
        assert cfg.s_values() == [Fraction(0), Fraction(1, 10)]


class TestEmit:
    def _rows(self):
        cfg_seed = 3
        return [
            ResultRow(
                experiment="ks-scan", k=2, theta_or_channel="1/2", d=4, s="0",
                estimator="majority", trials=100, accuracy=0.625,
                stderr=0.048412291827592711, advantage=0.125, seed=cfg_seed,
            )
        ]

    def test_empty_rejected(self, tmp_path):
        with pytest.raises(ValueError):
            emit([], str(tmp_path / "x.csv"))

    def test_header_and_roundtrip(self, tmp_path):
        path = str(tmp_path / "rows.csv")
        emit(self._rows(), path)
        with open(path) as fh:
            text = fh.read()
        assert text.splitlines()[0] == CSV_HEADER
        rows = read_csv(path)
        path2 = str(tmp_path / "rows2.csv")
        emit(rows, path2)
        with open(path2) as fh:
            assert fh.read() == text

    def test_json_emit(self, tmp_path):
        path = str(tmp_path / "rows.json")
        emit(self._rows(), path, fmt="json")
        doc = json.loads(open(path).read())
        assert doc[0]["estimator"] == "majority"
        assert set(doc[0]) == set(CSV_HEADER.split(","))

    def test_unwritable_path(self):
        with pytest.raises(OSError):
            emit(self._rows(), "/nonexistent-dir/rows.csv")


class TestKsScan:
    def test_extreme_thetas(self):
        cfg = ExperimentConfig(
            experiment="ks-scan", seed=5, trials=400, k=(2,), theta=("0", "1"), d=(4,), jobs=1
        )
        rows = run_ks_scan(cfg)
        by = {(r.theta_or_channel, r.estimator): r for r in rows}
        for est in ("majority", "linearized-bp", "bp-rounding"):
            r0 = by[("0", est)]
            assert abs(r0.accuracy - 0.5) <= 3 * max(r0.stderr, 1e-6)
            assert by[("1", est)].accuracy == 1.0

    def test_jobs_do_not_change_rows(self, tmp_path):
        cfg1 = ExperimentConfig(
            experiment="ks-scan", seed=9, trials=200, k=(2,), theta=("1/2", "4/5"), d=(3, 4), jobs=1
        )
        cfg2 = ExperimentConfig(
            experiment="ks-scan", seed=9, trials=200, k=(2,), theta=("1/2", "4/5"), d=(3, 4), jobs=2
        )
        rows1 = run_ks_scan(cfg1)
        rows2 = run_ks_scan(cfg2)
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        emit(rows1, p1)
        emit(rows2, p2)
        assert open(p1).read() == open(p2).read()

    def test_rerun_is_byte_identical(self, tmp_path):
        cfg = ExperimentConfig(
            experiment="ks-scan", seed=11, trials=200, k=(2,), theta=("3/5",), d=(4,), jobs=1
        )
        p1, p2 = str(tmp_path / "a.csv"), str(tmp_path / "b.csv")
        emit(run_ks_scan(cfg), p1)
        emit(run_ks_scan(cfg), p2)
        assert open(p1).read() == open(p2).read()

    def test_no_estimator_beats_bp_rounding(self):
        # Bayes-rounding optimality within Monte Carlo error on shared trees.
        cfg = ExperimentConfig(
            experiment="ks-scan", seed=13, trials=2000, k=(2, 3), theta=("3/5", "4/5"),
            d=(4,), jobs=1,
        )
        rows = run_ks_scan(cfg)
        by = {(r.k, r.theta_or_channel, r.estimator): r for r in rows}
        for k in (2, 3):
            for theta in ("3/5", "4/5"):
                bp = by[(k, theta, "bp-rounding")]
                for other in ("majority", "linearized-bp"):
                    o = by[(k, theta, other)]
                    band = 3 * (bp.stderr**2 + o.stderr**2) ** 0.5
                    assert o.accuracy <= bp.accuracy + band


class TestNoiseScan:
    def test_exact_small_tree_scan(self):
        cfg = ExperimentConfig(
            experiment="noise-scan", seed=3, trials=400, k=(2,), theta=("9/10",),
            d=(1, 2), s=("0", "1/5", "1/2"), jobs=1,
        )
        report = run_noise_scan(cfg)
        assert all(r.estimator == "p-sd-exact" for r in report.rows)
        assert all(report.monotone_in_s.values())
        half = [r for r in report.rows if r.s == "1/2"]
        assert all(r.accuracy == 0.5 for r in half)


class TestEquivalenceSuite:
    def test_default_suite_passes(self):
        results = run_equivalence_suite(seed=2, statistical_trials=20_000)
        assert not suite_failures(results)

    def test_corrupted_generator_is_caught_and_named(self):
        def corrupted(shape, theta, seed, trials, method="direct", roots=None):
            # theta off by 0.05 on the path generator only
            if method == "path":
                theta = Fraction(theta) - Fraction(1, 20)
            return generate_binary_batch(shape, theta, seed, trials, method=method, roots=roots)

        results = run_equivalence_suite(
            seed=2, statistical_trials=60_000, batch_sampler=corrupted
        )
        bad = suite_failures(results)
        assert bad
        assert any("path" in r.name for r in bad)
        assert all("path" in r.name for r in bad if r.name.startswith("chi-square"))


class TestExactLeafJoint:
    def test_matches_oracle_on_small_tree(self):
        from treecast.channels import Channel
        from treecast.oracle import enumerate_joint

        shape = TreeShape(k=2, d=2)
        theta = Fraction(4, 5)
        sel = (0, 1, 3)
        joint = enumerate_joint(shape, Channel.binary(theta))
        for root in (0, 1):
            law = exact_joint_of_leaves(shape, theta, sel, root)
            assert sum(law.values()) == 1
            for cfg, p in law.items():
                direct = sum(
                    pr
                    for full, pr in joint.cond[root].items()
                    if tuple(full[i] for i in sel) == cfg
                )
                assert p == direct


class TestA5Accuracy:
    def test_small_run(self):
        cfg = ExperimentConfig(
            experiment="a5-accuracy", seed=5, trials=100, k=(3000,), d=(2,), jobs=1
        )
        rows = run_a5_accuracy(cfg)
        assert len(rows) == 1
        assert rows[0].accuracy >= 0.9
