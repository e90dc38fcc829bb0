import pytest

from aesfuse.cli import main, read_predictions
from synthgen import generate_corpus, write_simple_corpus

# the tiny fixture corpus legitimately produces a constant feature column
pytestmark = pytest.mark.filterwarnings("ignore:zero-variance feature")


@pytest.fixture(scope="module")
def workspace(tmp_path_factory):
    """Small corpus plus every upstream artifact the train command needs."""
    root = tmp_path_factory.mktemp("cli")
    corpus = generate_corpus(n=40, seed=31)
    paths = {
        "corpus": root / "corpus.tsv",
        "partition": root / "partition.tsv",
        "semantic": root / "semantic.tsv",
        "nsp": root / "nsp.tsv",
        "features": root / "features.tsv",
        "stats": root / "stats.tsv",
        "syn_space": root / "syn_space.tsv",
        "stat_space": root / "stat_space.tsv",
    }
    write_simple_corpus(corpus, paths["corpus"])
    base = ["--corpus", str(paths["corpus"]), "--format", "simple"]
    assert main(["make-folds", *base, "--seed", "5", "--out", str(paths["partition"])]) == 0
    assert main([
        "stub-export", *base, "--dim", "16", "--seed", "3",
        "--out-semantic", str(paths["semantic"]), "--out-nsp", str(paths["nsp"]),
        "--out-manifest", str(root / "sentences.jsonl"),
    ]) == 0
    assert main(["extract-features", *base, "--out", str(paths["features"])]) == 0
    assert main([
        "coherence-stats", *base, "--nsp", str(paths["nsp"]), "--out", str(paths["stats"]),
    ]) == 0
    assert main([
        "build-embeddings", *base, "--space", "syntactic", "--prompt", "1", "--fold", "0",
        "--partition", str(paths["partition"]), "--features", str(paths["features"]),
        "--transe-epochs", "100", "--seed", "2", "--out", str(paths["syn_space"]),
    ]) == 0
    assert main([
        "build-embeddings", *base, "--space", "cohe-stat", "--prompt", "1", "--fold", "0",
        "--partition", str(paths["partition"]), "--nsp", str(paths["nsp"]),
        "--transe-epochs", "100", "--seed", "2", "--out", str(paths["stat_space"]),
    ]) == 0
    paths["root"] = root
    paths["base"] = base
    return paths


def _train(workspace, model, out, epochs="4", seed="1", extra=()):
    argv = [
        "train", *workspace["base"], "--model", model, "--prompt", "1", "--fold", "0",
        "--partition", str(workspace["partition"]), "--semantic", str(workspace["semantic"]),
        "--nsp", str(workspace["nsp"]), "--features", str(workspace["features"]),
        "--syn-space", str(workspace["syn_space"]), "--stat-space", str(workspace["stat_space"]),
        "--epochs", epochs, "--seed", seed, "--out", str(out), *extra,
    ]
    return main(argv)


def test_upstream_artifacts_exist(workspace):
    for key in ("partition", "semantic", "nsp", "features", "stats", "syn_space", "stat_space"):
        assert workspace[key].exists()


@pytest.mark.parametrize("model", ["semantic", "cohe", "cohe-stat", "syntactic", "concat"])
def test_train_each_model(workspace, model):
    out = workspace["root"] / f"run_{model}"
    assert _train(workspace, model, out) == 0
    assert (out / "checkpoint.tsv").exists()
    assert (out / "trainlog.tsv").exists()
    meta, rows = read_predictions(out / "predictions.tsv")
    assert meta["model"] == model
    splits = {r[1] for r in rows}
    assert splits == {"train", "dev", "test"}
    assert len(rows) == 40
    for _, _, gold, pnorm, praw in rows:
        assert 0.0 <= pnorm <= 1.0
        assert 0 <= praw <= 10
        assert 0 <= gold <= 10


def test_train_deterministic_bytes(workspace):
    out1 = workspace["root"] / "det_a"
    out2 = workspace["root"] / "det_b"
    assert _train(workspace, "syntactic", out1, seed="9") == 0
    assert _train(workspace, "syntactic", out2, seed="9") == 0
    for name in ("checkpoint.tsv", "trainlog.tsv", "predictions.tsv"):
        assert (out1 / name).read_bytes() == (out2 / name).read_bytes(), name


def test_combine_strategies(workspace):
    preds = [str(workspace["root"] / f"run_{m}" / "predictions.tsv")
             for m in ("semantic", "cohe", "syntactic")]
    for strategy in ("add", "linear", "ensemble"):
        out = workspace["root"] / f"combined_{strategy}.tsv"
        assert main(["combine", "--strategy", strategy, "--pred", *preds,
                     "--out", str(out)]) == 0
        meta, rows = read_predictions(out)
        assert meta["model"] == strategy
        assert len(rows) == 40


def test_combine_mismatched_files_exit_2(workspace, tmp_path):
    good = workspace["root"] / "run_semantic" / "predictions.tsv"
    clipped = tmp_path / "clipped.tsv"
    lines = good.read_text().splitlines()
    clipped.write_text("\n".join(lines[:-1]) + "\n", encoding="utf-8")
    code = main(["combine", "--strategy", "add",
                 "--pred", str(good), str(good), str(clipped),
                 "--out", str(tmp_path / "x.tsv")])
    assert code == 2


def test_evaluate(workspace, capsys):
    pred = workspace["root"] / "run_semantic" / "predictions.tsv"
    assert main(["evaluate", "--pred", str(pred)]) == 0
    out = capsys.readouterr().out
    assert out.startswith("qwk=")


def test_evaluate_missing_file_exit_2(tmp_path):
    assert main(["evaluate", "--pred", str(tmp_path / "nope.tsv")]) == 2


def test_unknown_flag_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["train", "--nonsense", "1"])
    assert exc.value.code == 2


def test_unknown_model_rejected(workspace):
    with pytest.raises(SystemExit) as exc:
        _train(workspace, "bogus", workspace["root"] / "x")
    assert exc.value.code == 2


def test_report_table(workspace, capsys):
    assert main(["report", "--runs", str(workspace["root"]),
                 "--baseline", "semantic",
                 "--corpus", str(workspace["corpus"]), "--format", "simple",
                 "--features", str(workspace["features"]),
                 "--out", str(workspace["root"] / "report.tsv")]) == 0
    out = capsys.readouterr().out
    head = out.splitlines()[0]
    assert "Avg QWK" in head and "1-2-8 Avg" in head
    assert "semantic" in out
    assert "feature\tspearman_rho" in out
    assert (workspace["root"] / "report.tsv").exists()


def test_config_file_supplies_options(workspace, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(
        f"corpus={workspace['corpus']}\nformat=simple\nseed=4\n"
        f"out={tmp_path / 'part.tsv'}\n",
        encoding="utf-8",
    )
    assert main(["make-folds", "--config", str(config)]) == 0
    assert (tmp_path / "part.tsv").exists()


def test_flag_overrides_config(workspace, tmp_path):
    config = tmp_path / "run.conf"
    config.write_text(f"corpus={workspace['corpus']}\nformat=simple\nseed=4\n", encoding="utf-8")
    out_a = tmp_path / "a.tsv"
    out_b = tmp_path / "b.tsv"
    assert main(["make-folds", "--config", str(config), "--out", str(out_a)]) == 0
    assert main(["make-folds", "--config", str(config), "--seed", "4", "--out", str(out_b)]) == 0
    assert out_a.read_bytes() == out_b.read_bytes()


def test_build_embeddings_deterministic(workspace, tmp_path):
    out = tmp_path / "space_again.tsv"
    assert main([
        "build-embeddings", *workspace["base"], "--space", "syntactic",
        "--prompt", "1", "--fold", "0",
        "--partition", str(workspace["partition"]), "--features", str(workspace["features"]),
        "--transe-epochs", "100", "--seed", "2", "--out", str(out),
    ]) == 0
    assert out.read_bytes() == workspace["syn_space"].read_bytes()
