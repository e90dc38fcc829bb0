"""Acceptance suite: one test per release criterion, each printing a
PASS/FAIL line with its runtime. Run with `pytest tests/test_acceptance.py -v -s`
to see the lines live. Every tolerance and runtime budget is asserted.
"""

import functools
import math
import time
import warnings

import numpy as np
import pytest

from aesfuse.cli import main as cli_main
from aesfuse.coherence import coherence_stats, pad_vector
from aesfuse.combine import add_combine, ensemble, linear_combine
from aesfuse.corpus import ASAP_PROMPTS, PromptSpec
from aesfuse.dense_embedding import (
    CorrelationGraph,
    GraphEdge,
    TranseConfig,
    bin_centers,
    gaussian_bin_init,
    soft_bin_memberships,
    train_transe,
)
from aesfuse.evaluation import (
    RunResult,
    UndefinedMetric,
    assemble_report,
    format_report_table,
    paired_ttest,
    qwk,
)
from aesfuse.scoring import (
    ScoringNetwork,
    TrainConfig,
    combined_grad,
    combined_loss,
    listnet_loss,
    mse_loss,
)
from synthgen import generate_corpus, run_pipeline, write_simple_corpus


def criterion(name, budget=None):
    """Print one [ACCEPTANCE] pass/fail line; enforce the runtime budget."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            start = time.perf_counter()
            try:
                fn(*args, **kwargs)
                elapsed = time.perf_counter() - start
                if budget is not None and elapsed >= budget:
                    raise AssertionError(f"runtime {elapsed:.1f}s exceeds budget {budget}s")
            except BaseException:
                elapsed = time.perf_counter() - start
                print(f"[ACCEPTANCE] {name}: FAIL ({elapsed:.2f}s)")
                raise
            print(f"[ACCEPTANCE] {name}: PASS ({elapsed:.2f}s)")

        return wrapper

    return decorate


# ---------------------------------------------------------------------------
# 1. Metric oracle


def _qwk_pairwise_oracle(gold, pred, lo, hi):
    """Independent implementation from the definition: observed mean
    disagreement over matched pairs vs expected over all pairs."""
    g = np.asarray(gold, dtype=np.float64)
    p = np.asarray(pred, dtype=np.float64)
    scale = (hi - lo) ** 2
    observed = np.mean((g - p) ** 2) / scale
    expected = np.mean((g[:, None] - p[None, :]) ** 2) / scale
    if expected == 0.0:
        raise UndefinedMetric("degenerate")
    return 1.0 - observed / expected


@criterion("metric oracle: qwk vs independent implementation", budget=1.0)
def test_metric_oracle():
    rng = np.random.default_rng(1000)
    ranges = [(lo, hi) for (_, lo, hi) in ASAP_PROMPTS.values()]
    for i in range(1000):
        lo, hi = ranges[i % len(ranges)]
        n = int(rng.integers(2, 40))
        gold = rng.integers(lo, hi + 1, n)
        pred = rng.integers(lo, hi + 1, n)
        try:
            ours = qwk(gold, pred, lo, hi)
        except UndefinedMetric:
            continue
        assert abs(ours - _qwk_pairwise_oracle(gold, pred, lo, hi)) <= 1e-12
    gold = np.array([2, 5, 7, 12, 3, 2, 8])
    assert qwk(gold, gold, 2, 12) == 1.0  # exactly
    assert qwk([0, 1], [1, 0], 0, 1) == -1.0


# ---------------------------------------------------------------------------
# 2. Loss correctness


@criterion("loss correctness: listnet fixture, endpoints, shift invariance")
def test_loss_correctness():
    assert abs(listnet_loss([0.0, 1.0], [0.0, 0.0]) - math.log(2)) <= 1e-12
    rng = np.random.default_rng(1001)
    for _ in range(50):
        gold = rng.random(8)
        pred = rng.random(8)
        assert combined_loss(gold, pred, 1.0) == mse_loss(gold, pred)
        assert combined_loss(gold, pred, 0.0) == listnet_loss(gold, pred)
        for c in (1.0, -2.0, 50.0):
            assert abs(listnet_loss(gold, pred + c) - listnet_loss(gold, pred)) <= 1e-9


# ---------------------------------------------------------------------------
# 3. Gradient check (full network, 64-bit, central differences)


@criterion("gradient check: full network, rel err < 1e-4", budget=30.0)
def test_gradient_check_full_network():
    dims = {"semantic": 24, "coherence": 9, "syntactic": 10}
    config = TrainConfig(seed=77, dropout=0.0, channels=tuple(dims))
    rng = np.random.default_rng(1002)
    inputs = {name: rng.normal(size=(8, d)) for name, d in dims.items()}
    gold = rng.random(8)
    # central differences at 64-bit: roundoff ~ eps*|loss|/h, so gradients
    # below ~1e-6 are compared against that floor rather than themselves
    h = 1e-5
    for alpha in (0.0, 0.5, 1.0):
        net = ScoringNetwork(dims, config)
        pred = net.forward(inputs, train_mode=False)
        net.zero_grads()
        net.backward(combined_grad(gold, pred, alpha))
        probe_rng = np.random.default_rng(123)
        for layer in net.layers():
            for p, g in zip(layer.params(), layer.grads()):
                for idx in probe_rng.integers(0, p.size, size=min(25, p.size)):
                    orig = p.flat[idx]
                    p.flat[idx] = orig + h
                    up = combined_loss(gold, net.forward(inputs, train_mode=False), alpha)
                    p.flat[idx] = orig - h
                    down = combined_loss(gold, net.forward(inputs, train_mode=False), alpha)
                    p.flat[idx] = orig
                    numeric = (up - down) / (2 * h)
                    analytic = g.flat[idx]
                    scale = max(abs(numeric), abs(analytic), 1e-6)
                    assert abs(numeric - analytic) / scale < 1e-4, (alpha, idx)


# ---------------------------------------------------------------------------
# 4. Coherence statistics


@criterion("coherence stats: padding invariance, AM >= GM, fixture")
def test_coherence_statistics():
    rng = np.random.default_rng(1003)
    for _ in range(10_000):
        n = int(rng.integers(1, 15))
        v = rng.random(n)
        st = coherence_stats(v)
        padded = pad_vector(v, n + int(rng.integers(1, 6)) + 1)
        st_pad = coherence_stats(padded[:n])
        assert st_pad.as_array().tolist() == st.as_array().tolist()  # exact
        assert st.perplexity <= st.mean + 1e-12  # AM-GM
    st = coherence_stats([0.2, 0.4, 0.9])
    assert abs(st.mean - 0.5) <= 1e-6
    assert abs(st.perplexity - 0.416017) <= 1e-6


# ---------------------------------------------------------------------------
# 5. Gaussian binning


@criterion("gaussian binning: membership normalization and argmax")
def test_gaussian_binning():
    rng = np.random.default_rng(1004)
    for k in (5, 10):
        centers = bin_centers(k)
        sigma = (6.0 / k) / 2.0
        values = np.concatenate([rng.normal(0, 2, size=100_000), [-40.0, 40.0]])
        m = soft_bin_memberships(values, centers, sigma)
        assert np.all(np.abs(m.sum(axis=1) - 1.0) <= 1e-12)
        peaked = soft_bin_memberships(centers, centers, sigma)
        assert np.array_equal(np.argmax(peaked, axis=1), np.arange(k))


# ---------------------------------------------------------------------------
# 6. TransE structure recovery


@criterion("translational embedding: two-clique recovery in >= 95/100 seeds", budget=60.0)
def test_transe_two_clique_recovery():
    edges = []
    for clique in (range(5), range(5, 10)):
        for i in clique:
            for j in clique:
                if i < j:
                    edges.append(GraphEdge(i, j, 3, 0.9))
                    edges.append(GraphEdge(j, i, 3, 0.9))
    graph = CorrelationGraph(n_features=10, edges=edges, tau=0.2)
    wins = 0
    for seed in range(100):
        rng = np.random.default_rng(2000 + seed)
        init = gaussian_bin_init(rng.normal(size=(120, 10)), k=10)
        matrix = train_transe(graph, init, TranseConfig(seed=seed, epochs=500))
        ent = matrix.entity_embeddings
        intra, inter = [], []
        for i in range(10):
            for j in range(i + 1, 10):
                d = float(np.linalg.norm(ent[i] - ent[j]))
                (intra if (i < 5) == (j < 5) else inter).append(d)
        wins += np.mean(intra) < np.mean(inter)
    assert wins >= 95, f"recovered structure in only {wins}/100 seeds"


# ---------------------------------------------------------------------------
# 7. End-to-end desk scale


@criterion("end-to-end: syntactic-enhanced >= 0.70 QWK, beats stub baseline", budget=600.0)
def test_end_to_end_desk_scale():
    corpus = generate_corpus(n=400, seed=101)
    results = run_pipeline(
        corpus,
        {"syntactic": ("semantic", "syntactic"), "semantic": ("semantic",)},
        epochs=50,
        transe_epochs=300,
    )
    syn = results["syntactic"]
    base = results["semantic"]
    assert len(syn) == len(base) == 5
    assert float(np.mean(syn)) >= 0.70, f"syntactic mean QWK {np.mean(syn):.3f}"
    gap = float(np.mean(syn) - np.mean(base))
    assert gap >= 0.10, f"gap {gap:.3f}"
    result = paired_ttest(syn, base)
    assert result.p < 0.05, f"p={result.p}"


# ---------------------------------------------------------------------------
# 8. Combination algebra


@criterion("combination algebra: ensemble, add, linear residual dominance")
def test_combination_algebra():
    assert ensemble((8, 9, 9), PromptSpec(7, 0, 30)) == 9
    assert abs(add_combine(np.array([[0.2, 0.4, 0.9]]))[0] - 0.5) <= 1e-12
    rng = np.random.default_rng(1005)
    for _ in range(100):
        n = int(rng.integers(4, 50))
        dev = rng.random((n, 3))
        gold = rng.random(n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            fused, _ = linear_combine(dev, gold, dev)
        lin_res = float(np.sum((fused - gold) ** 2))
        add_res = float(np.sum((add_combine(dev) - gold) ** 2))
        assert lin_res <= add_res + 1e-9


# ---------------------------------------------------------------------------
# 9. Report arithmetic


@criterion("report arithmetic: published per-prompt row reproduces printed averages")
def test_report_arithmetic():
    row = {1: 0.83, 2: 0.711, 3: 0.689, 4: 0.773, 5: 0.797, 6: 0.784, 7: 0.812, 8: 0.733}
    runs = [RunResult("cohe", p, f, v) for p, v in row.items() for f in range(5)]
    report = assemble_report(runs, baseline=None)
    assert f"{report.avg_long['cohe']:.3f}" == "0.758"
    assert f"{report.avg_qwk['cohe']:.3f}" == "0.766"
    printed = format_report_table(report).splitlines()[1].split("\t")
    assert printed[-2:] == ["0.758", "0.766"]


# ---------------------------------------------------------------------------
# 10. Determinism of file-producing commands


@criterion("determinism: repeated commands produce byte-identical files")
def test_command_determinism(tmp_path):
    corpus = generate_corpus(n=30, seed=55)
    corpus_path = tmp_path / "corpus.tsv"
    write_simple_corpus(corpus, corpus_path)
    base = ["--corpus", str(corpus_path), "--format", "simple"]

    partition = tmp_path / "partition.tsv"
    assert cli_main(["make-folds", *base, "--seed", "2", "--out", str(partition)]) == 0

    def run_twice(argv_fn, outputs):
        blobs = []
        for tag in ("a", "b"):
            assert cli_main(argv_fn(tag)) == 0
            blobs.append([(tmp_path / name.format(tag)).read_bytes() for name in outputs])
        for one, two in zip(*blobs):
            assert one == two

    run_twice(
        lambda tag: ["stub-export", *base, "--dim", "8", "--seed", "4",
                     "--out-semantic", str(tmp_path / f"sem_{tag}.tsv"),
                     "--out-nsp", str(tmp_path / f"nsp_{tag}.tsv")],
        ["sem_{}.tsv", "nsp_{}.tsv"],
    )
    assert cli_main(["stub-export", *base, "--dim", "8", "--seed", "4",
                     "--out-semantic", str(tmp_path / "semantic.tsv"),
                     "--out-nsp", str(tmp_path / "nsp.tsv")]) == 0
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        run_twice(
            lambda tag: ["build-embeddings", *base, "--space", "syntactic",
                         "--prompt", "1", "--fold", "0", "--partition", str(partition),
                         "--transe-epochs", "80", "--seed", "6",
                         "--out", str(tmp_path / f"space_{tag}.tsv")],
            ["space_{}.tsv"],
        )
        assert cli_main(["build-embeddings", *base, "--space", "syntactic",
                         "--prompt", "1", "--fold", "0", "--partition", str(partition),
                         "--transe-epochs", "80", "--seed", "6",
                         "--out", str(tmp_path / "space.tsv")]) == 0
        run_twice(
            lambda tag: ["train", *base, "--model", "syntactic", "--prompt", "1",
                         "--fold", "0", "--partition", str(partition),
                         "--semantic", str(tmp_path / "semantic.tsv"),
                         "--syn-space", str(tmp_path / "space.tsv"),
                         "--epochs", "3", "--seed", "8",
                         "--out", str(tmp_path / f"run_{tag}")],
            ["run_{}/checkpoint.tsv", "run_{}/trainlog.tsv", "run_{}/predictions.tsv"],
        )
