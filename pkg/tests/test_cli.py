import json

from treecast.cli import EXIT_IO, EXIT_OK, EXIT_USAGE, main


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_unknown_subcommand_is_usage_error(capsys):
    code, _, err = run(capsys, "frobnicate")
    assert code == EXIT_USAGE


def test_unknown_flag_is_usage_error(capsys):
    code, _, _ = run(capsys, "--bogus", "verify")
    assert code == EXIT_USAGE


def test_gen_reproducible_dumps(tmp_path, capsys):
    p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
    a = run(capsys, "--seed", "7", "--out", p1, "gen", "--k", "2", "--d", "3", "--theta", "0.5")
    b = run(capsys, "--seed", "7", "--out", p2, "gen", "--k", "2", "--d", "3", "--theta", "0.5")
    assert a[0] == b[0] == EXIT_OK
    assert open(p1, "rb").read() == open(p2, "rb").read()


def test_gen_binary_dump_roundtrip(tmp_path, capsys):
    path = str(tmp_path / "tree.bin")
    code, _, _ = run(
        capsys, "--seed", "3", "--out", path, "--format", "bin",
        "gen", "--k", "3", "--d", "2", "--theta", "3/4",
    )
    assert code == EXIT_OK
    from treecast.labels import LabelArray

    arr = LabelArray.from_bytes(open(path, "rb").read())
    assert arr.shape.k == 3 and arr.shape.d == 2


def test_bp_matches_library_on_dump(tmp_path, capsys):
    path = str(tmp_path / "tree.json")
    run(capsys, "--seed", "5", "--out", path, "gen", "--k", "2", "--d", "2", "--theta", "1/2")
    code, out, _ = run(capsys, "--mode", "rational", "bp", "--leaves", path, "--theta", "1/2")
    assert code == EXIT_OK
    doc = json.loads(out)
    from fractions import Fraction

    from treecast.bp import LeafLikelihood, bp_posterior
    from treecast.channels import Channel
    from treecast.labels import LabelArray

    arr = LabelArray.from_json(open(path).read())
    want = bp_posterior(
        arr.shape,
        Channel.binary(Fraction(1, 2)),
        LeafLikelihood.from_labels(arr.leaves, 2),
        mode="rational",
    )
    assert doc["argmax"] == want.argmax
    assert [Fraction(m) for m in doc["masses"]] == list(want.masses)


def test_detect_runs(capsys):
    code, out, _ = run(
        capsys, "--seed", "2", "detect", "--k", "2", "--d", "4", "--theta", "0.9",
        "--trials", "300", "--estimator", "majority",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["trials"] == 300
    assert doc["accuracy"] > 0.8


def test_detect_appends_to_experiment_csv(tmp_path, capsys):
    path = str(tmp_path / "rows.csv")
    for estimator in ("majority", "linearized-bp"):
        code, _, _ = run(
            capsys, "--seed", "2", "--out", path, "detect", "--k", "2", "--d", "4",
            "--theta", "0.9", "--trials", "200", "--estimator", estimator,
        )
        assert code == EXIT_OK
    from treecast.experiments import read_csv

    rows = read_csv(path)
    assert [r.estimator for r in rows] == ["majority", "linearized-bp"]
    assert all(r.trials == 200 for r in rows)


def test_scan_ks_writes_csv(tmp_path, capsys):
    path = str(tmp_path / "rows.csv")
    code, _, _ = run(
        capsys, "--seed", "4", "--out", path, "--jobs", "1",
        "scan-ks", "--k", "2", "--theta", "0,1", "--d", "3", "--trials", "150",
    )
    assert code == EXIT_OK
    lines = open(path).read().splitlines()
    assert lines[0].startswith("experiment,k,theta_or_channel")
    assert len(lines) == 1 + 6  # two theta values x three estimators


def test_compile_gadget_check(capsys):
    code, out, _ = run(capsys, "compile-gadget", "--formula", "(and x1 (not x2))", "--check")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["tracks_all_assignments"] is True
    assert len(doc["entries"]) == 36


def test_compile_barrington_check(capsys):
    code, out, _ = run(capsys, "compile-barrington", "--formula", "(or x1 x2)", "--check")
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["matches_truth_table"] is True


def test_reduce_word(capsys):
    code, out, _ = run(
        capsys, "--seed", "6", "reduce-word", "--length", "24", "--promise", "target",
        "--trials", "300",
    )
    assert code == EXIT_OK
    doc = json.loads(out)
    assert doc["correct"] is True


def test_io_error_exit_code(tmp_path, capsys):
    code, _, _ = run(
        capsys, "--seed", "1", "--out", "/no-such-dir/x.json",
        "gen", "--k", "2", "--d", "1", "--theta", "1/2",
    )
    assert code == EXIT_IO


def test_bad_theta_usage_error(capsys):
    code, _, _ = run(capsys, "gen", "--k", "2", "--d", "1", "--theta", "2")
    assert code == EXIT_USAGE


def test_verify_quick_exits_zero(capsys):
    code, out, _ = run(capsys, "--seed", "3", "verify", "--quick")
    assert code == EXIT_OK
    assert "checks passed" in out
    assert "FAIL" not in out
