"""Command-line surface for batch experiments.

Every command reads an optional key=value config file plus flags (flags
win), writes files in the documented formats, exits 0 on success, 2 on
usage errors (unknown flag, missing input file), and 1 otherwise.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from . import coherence as coh
from . import combine as comb
from . import corpus as corpus_mod
from . import dense_embedding as emb
from . import encoder_io
from . import evaluation as ev
from . import features as feat
from . import scoring

MODELS = ("semantic", "cohe", "cohe-stat", "syntactic", "concat")

MODEL_CHANNELS = {
    "semantic": ("semantic",),
    "cohe": ("semantic", "coherence"),
    "cohe-stat": ("semantic", "coherence"),
    "syntactic": ("semantic", "syntactic"),
    "concat": ("semantic", "coherence", "syntactic"),
}


class UsageError(Exception):
    pass


def load_config(path) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}: malformed config line {line!r}")
            cfg[key.strip()] = value.strip()
    return cfg


def _opt(args, cfg: dict[str, str], name: str, default=None, cast=str):
    value = getattr(args, name.replace("-", "_"), None)
    if value is None:
        value = cfg.get(name)
    if value is None:
        return default
    return cast(value)


def _require(args, cfg, name, cast=str):
    value = _opt(args, cfg, name, cast=cast)
    if value is None:
        raise UsageError(f"missing required option --{name}")
    return value


def _input_file(path, label: str) -> str:
    if not os.path.exists(path):
        raise UsageError(f"missing input file for {label}: {path}")
    return path


def _load_corpus(args, cfg) -> corpus_mod.Corpus:
    path = _input_file(_require(args, cfg, "corpus"), "--corpus")
    fmt = _opt(args, cfg, "format", default="asap")
    corpus = corpus_mod.load_corpus(path, format=fmt)
    for lineno, reason in corpus.row_errors:
        print(f"warning: {path}:{lineno}: {reason}", file=sys.stderr)
    return corpus


def _prompt_essays(corpus, prompt_id):
    essays = corpus.for_prompt(prompt_id)
    if not essays:
        raise UsageError(f"corpus has no essays for prompt {prompt_id}")
    return essays


def _fold_for(args, cfg, corpus, prompt_id) -> corpus_mod.FoldPartition:
    path = _input_file(_require(args, cfg, "partition"), "--partition")
    fold_id = _require(args, cfg, "fold", cast=int)
    partitions = corpus_mod.load_partition(path, corpus)
    if prompt_id not in partitions:
        raise UsageError(f"partition file lacks prompt {prompt_id}")
    folds = partitions[prompt_id]
    if not 0 <= fold_id < len(folds):
        raise UsageError(f"fold {fold_id} out of range (have {len(folds)})")
    return folds[fold_id]


# ---------------------------------------------------------------------------
# Commands


def cmd_make_folds(args, cfg) -> int:
    corpus = _load_corpus(args, cfg)
    seed = _opt(args, cfg, "seed", default=0, cast=int)
    out = _require(args, cfg, "out")
    partitions = {
        pid: corpus_mod.make_folds([e.id for e in corpus.for_prompt(pid)], seed=seed)
        for pid in sorted(corpus.prompts)
    }
    corpus_mod.write_partition(partitions, out)
    print(f"wrote {out}: {len(partitions)} prompt(s), 5 folds")
    return 0


def cmd_extract_features(args, cfg) -> int:
    corpus = _load_corpus(args, cfg)
    prompt_id = _opt(args, cfg, "prompt", cast=int)
    essays = _prompt_essays(corpus, prompt_id) if prompt_id else corpus.essays
    matrix = feat.extract_feature_matrix(essays)
    out = _require(args, cfg, "out")
    feat.write_feature_file(out, [e.id for e in essays], matrix)
    print(f"wrote {out}: {len(essays)} essays x {feat.N_FEATURES} features")
    return 0


def cmd_coherence_stats(args, cfg) -> int:
    corpus = _load_corpus(args, cfg)
    nsp_path = _input_file(_require(args, cfg, "nsp"), "--nsp")
    vectors = coh.ingest_nsp(nsp_path, corpus)
    prompt_id = _opt(args, cfg, "prompt", cast=int)
    essays = _prompt_essays(corpus, prompt_id) if prompt_id else corpus.essays
    stats = {e.id: coh.coherence_stats(vectors[e.id].probs) for e in essays if e.id in vectors}
    out = _require(args, cfg, "out")
    coh.write_stats_file(out, stats)
    print(f"wrote {out}: {len(stats)} essays x 5 statistics")
    return 0


def _build_space(X_train: np.ndarray, bins: int, tau: float, transe_cfg, meta) -> emb.EmbeddingSpace:
    standardizer = feat.fit_standardizer(X_train)
    Z = feat.apply_standardizer(X_train, standardizer)
    graph = emb.build_correlation_graph(Z, tau=tau)
    init = emb.gaussian_bin_init(Z, k=bins)
    matrix = emb.train_transe(graph, init, transe_cfg)
    meta = dict(meta)
    meta["edges"] = str(len(graph.edges))
    return emb.EmbeddingSpace(matrix=matrix, standardizer=standardizer, meta=meta)


def cmd_build_embeddings(args, cfg) -> int:
    space_kind = _require(args, cfg, "space")
    if space_kind not in ("syntactic", "cohe-stat"):
        raise UsageError("--space must be syntactic or cohe-stat")
    corpus = _load_corpus(args, cfg)
    prompt_id = _require(args, cfg, "prompt", cast=int)
    essays = _prompt_essays(corpus, prompt_id)
    fold = _fold_for(args, cfg, corpus, prompt_id)
    train_ids = [e.id for e in essays if e.id in fold.train_ids]

    if space_kind == "syntactic":
        features_path = _opt(args, cfg, "features")
        if features_path:
            ids, matrix = feat.read_feature_file(_input_file(features_path, "--features"))
            rows = dict(zip(ids, matrix))
        else:
            rows = {e.id: feat.extract_features(e) for e in essays}
        X = np.stack([rows[i] for i in train_ids])
        default_bins = 10
    else:
        nsp_path = _input_file(_require(args, cfg, "nsp"), "--nsp")
        vectors = coh.ingest_nsp(nsp_path, corpus)
        X = np.stack([coh.coherence_stats(vectors[i].probs).as_array() for i in train_ids])
        default_bins = 5

    bins = _opt(args, cfg, "bins", default=default_bins, cast=int)
    tau = _opt(args, cfg, "tau", default=0.2, cast=float)
    seed = _opt(args, cfg, "seed", default=0, cast=int)
    epochs = _opt(args, cfg, "transe-epochs", default=500, cast=int)
    gamma = _opt(args, cfg, "gamma", default=1.0, cast=float)
    lr = _opt(args, cfg, "transe-lr", default=0.01, cast=float)
    transe_cfg = emb.TranseConfig(gamma=gamma, learning_rate=lr, epochs=epochs, seed=seed)
    meta = {
        "space": space_kind,
        "prompt": str(prompt_id),
        "fold": str(fold.fold_id),
        "seed": str(seed),
        "tau": f"{tau:.17g}",
        "gamma": f"{gamma:.17g}",
        "lr": f"{lr:.17g}",
        "epochs": str(epochs),
        "bins": str(bins),
    }
    space = _build_space(X, bins, tau, transe_cfg, meta)
    out = _require(args, cfg, "out")
    emb.save_embedding_space(out, space)
    print(f"wrote {out}: {space.matrix.entity_embeddings.shape[0]} features -> d={bins}")
    return 0


def _channel_inputs(model, essays, corpus, prompt, args, cfg):
    """Assemble per-channel (n, dim) matrices for the given essays."""
    ids = [e.id for e in essays]
    inputs: dict[str, np.ndarray] = {}
    channels = MODEL_CHANNELS[model]

    sem_path = _input_file(_require(args, cfg, "semantic"), "--semantic")
    sem = encoder_io.ingest_semantic(sem_path, corpus)
    inputs["semantic"] = np.stack([sem[i] for i in ids])

    if "coherence" in channels:
        nsp_path = _input_file(_require(args, cfg, "nsp"), "--nsp")
        vectors = coh.ingest_nsp(nsp_path, corpus)
        rep = "stat" if model == "cohe-stat" else _opt(args, cfg, "concat-coherence", default="padded")
        if model == "cohe":
            rep = "padded"
        if rep == "stat":
            stat_path = _input_file(_require(args, cfg, "stat-space"), "--stat-space")
            space = emb.load_embedding_space(stat_path)
            stats = np.stack([coh.coherence_stats(vectors[i].probs).as_array() for i in ids])
            inputs["coherence"] = space.embed(stats)
        else:
            inputs["coherence"] = np.stack(
                [coh.pad_vector(vectors[i].probs, prompt.max_sentence_count) for i in ids]
            )

    if "syntactic" in channels:
        syn_path = _input_file(_require(args, cfg, "syn-space"), "--syn-space")
        space = emb.load_embedding_space(syn_path)
        features_path = _opt(args, cfg, "features")
        if features_path:
            fids, matrix = feat.read_feature_file(_input_file(features_path, "--features"))
            rows = dict(zip(fids, matrix))
            raw = np.stack([rows[i] for i in ids])
        else:
            raw = np.stack([feat.extract_features(corpus.by_id()[i]) for i in ids])
        inputs["syntactic"] = space.embed(raw)
    return inputs


def _write_predictions(path, header_meta, rows):
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("#" + "\t".join(f"{k}={v}" for k, v in header_meta.items()) + "\n")
        f.write("essay_id\tsplit\tgold_raw\tpred_norm\tpred_raw\n")
        for essay_id, split, gold, pnorm, praw in rows:
            f.write(f"{essay_id}\t{split}\t{gold}\t{pnorm:.17g}\t{praw}\n")


def read_predictions(path):
    meta: dict[str, str] = {}
    rows = []
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
        if first.startswith("#"):
            meta = dict(pair.split("=", 1) for pair in first[1:].split("\t"))
            f.readline()  # column header
        for line in f:
            if not line.strip():
                continue
            essay_id, split, gold, pnorm, praw = line.rstrip("\n").split("\t")
            rows.append((essay_id, split, int(gold), float(pnorm), int(praw)))
    return meta, rows


def cmd_train(args, cfg) -> int:
    model = _require(args, cfg, "model")
    if model not in MODELS:
        raise UsageError(f"--model must be one of {', '.join(MODELS)}")
    corpus = _load_corpus(args, cfg)
    prompt_id = _require(args, cfg, "prompt", cast=int)
    essays = _prompt_essays(corpus, prompt_id)
    prompt = corpus.prompts[prompt_id]
    fold = _fold_for(args, cfg, corpus, prompt_id)

    config = scoring.TrainConfig(
        alpha=_opt(args, cfg, "alpha", default=0.7, cast=float),
        batch_size=_opt(args, cfg, "batch-size", default=32, cast=int),
        dropout=_opt(args, cfg, "dropout", default=0.5, cast=float),
        learning_rate=_opt(args, cfg, "learning-rate", default=0.001, cast=float),
        epochs=_opt(args, cfg, "epochs", default=100, cast=int),
        seed=_opt(args, cfg, "seed", default=0, cast=int),
        channels=MODEL_CHANNELS[model],
        semantic_width=_opt(args, cfg, "semantic-width", default=256, cast=int),
        fusion_width=_opt(args, cfg, "fusion-width", default=128, cast=int),
    )

    by_split = {
        "train": [e for e in essays if e.id in fold.train_ids],
        "dev": [e for e in essays if e.id in fold.dev_ids],
        "test": [e for e in essays if e.id in fold.test_ids],
    }
    split_inputs = {
        split: _channel_inputs(model, subset, corpus, prompt, args, cfg)
        for split, subset in by_split.items()
    }
    data = scoring.FoldData(
        train_inputs=split_inputs["train"],
        train_gold_raw=np.array([e.gold_score for e in by_split["train"]]),
        dev_inputs=split_inputs["dev"],
        dev_gold_raw=np.array([e.gold_score for e in by_split["dev"]]),
        prompt=prompt,
    )
    result = scoring.train_and_select(data, config)

    out_dir = _require(args, cfg, "out")
    os.makedirs(out_dir, exist_ok=True)
    extra = {"model": model, "prompt": str(prompt_id), "fold": str(fold.fold_id),
             "best_epoch": str(result.best_epoch)}
    scoring.save_checkpoint(os.path.join(out_dir, "checkpoint.tsv"), result.net, extra)
    scoring.write_train_log(os.path.join(out_dir, "trainlog.tsv"), result.log)

    header = {
        "model": model, "prompt_id": str(prompt_id), "fold": str(fold.fold_id),
        "score_min": str(prompt.score_min), "score_max": str(prompt.score_max),
        "seed": str(config.seed), "alpha": f"{config.alpha:.17g}",
    }
    rows = []
    for split in ("train", "dev", "test"):
        subset = by_split[split]
        if not subset:
            continue
        pred = result.net.forward(split_inputs[split], train_mode=False)
        for essay, p in zip(subset, pred):
            rows.append((essay.id, split, essay.gold_score, float(p),
                         corpus_mod.denormalize_score(p, prompt)))
    _write_predictions(os.path.join(out_dir, "predictions.tsv"), header, rows)
    test_qwk = _qwk_of_rows(rows, "test", prompt.score_min, prompt.score_max)
    print(f"model={model} prompt={prompt_id} fold={fold.fold_id} "
          f"best_epoch={result.best_epoch} dev_qwk={result.best_dev_qwk:.4f} "
          f"test_qwk={'nan' if test_qwk is None else f'{test_qwk:.4f}'}")
    return 0


def _qwk_of_rows(rows, split, score_min, score_max):
    gold = [r[2] for r in rows if r[1] == split]
    pred = [r[4] for r in rows if r[1] == split]
    if not gold:
        return None
    try:
        return ev.qwk(gold, pred, score_min, score_max)
    except ev.UndefinedMetric:
        return None


def cmd_combine(args, cfg) -> int:
    strategy = _require(args, cfg, "strategy")
    if strategy not in ("add", "linear", "ensemble"):
        raise UsageError("--strategy must be add, linear, or ensemble (concat = train --model concat)")
    pred_paths = args.pred or (cfg.get("pred", "").split() if cfg.get("pred") else None)
    if not pred_paths or len(pred_paths) != 3:
        raise UsageError("need exactly 3 prediction files (--pred A B C)")
    loaded = [read_predictions(_input_file(p, "--pred")) for p in pred_paths]
    metas = [m for m, _ in loaded]
    lo, hi = int(metas[0]["score_min"]), int(metas[0]["score_max"])
    if any(int(m["score_min"]) != lo or int(m["score_max"]) != hi for m in metas):
        raise UsageError("prediction files disagree on the score range")
    prompt = corpus_mod.PromptSpec(int(metas[0]["prompt_id"]), lo, hi)

    tables = []
    for _, rows in loaded:
        tables.append({(r[0], r[1]): r for r in rows})
    keys = set(tables[0])
    if any(set(t) != keys for t in tables[1:]):
        raise UsageError("prediction files cover different essays")

    header = {"model": strategy, "prompt_id": str(prompt.prompt_id),
              "fold": metas[0].get("fold", "?"), "score_min": str(lo), "score_max": str(hi)}
    out_rows = []
    if strategy == "ensemble":
        for key in sorted(keys):
            essay_id, split = key
            gold = tables[0][key][2]
            raw = comb.ensemble([t[key][4] for t in tables], prompt)
            out_rows.append((essay_id, split, gold, corpus_mod.normalize_score(raw, prompt), raw))
    elif strategy == "add":
        for key in sorted(keys):
            essay_id, split = key
            gold = tables[0][key][2]
            mean = comb.add_combine(np.array([[t[key][3] for t in tables]]))[0]
            out_rows.append((essay_id, split, gold, float(mean),
                             corpus_mod.denormalize_score(mean, prompt)))
    else:  # linear
        dev_keys = sorted(k for k in keys if k[1] == "dev")
        if not dev_keys:
            raise UsageError("linear combine needs dev rows to fit on")
        dev_preds = np.array([[t[k][3] for t in tables] for k in dev_keys])
        dev_gold = np.array([corpus_mod.normalize_score(tables[0][k][2], prompt) for k in dev_keys])
        all_keys = sorted(keys)
        all_preds = np.array([[t[k][3] for t in tables] for k in all_keys])
        fused, _ = comb.linear_combine(dev_preds, dev_gold, all_preds)
        for key, value in zip(all_keys, fused):
            essay_id, split = key
            gold = tables[0][key][2]
            out_rows.append((essay_id, split, gold, float(value),
                             corpus_mod.denormalize_score(value, prompt)))
    out = _require(args, cfg, "out")
    _write_predictions(out, header, out_rows)
    test_qwk = _qwk_of_rows(out_rows, "test", lo, hi)
    print(f"strategy={strategy} test_qwk={'nan' if test_qwk is None else f'{test_qwk:.4f}'}")
    return 0


def cmd_evaluate(args, cfg) -> int:
    path = _input_file(_require(args, cfg, "pred"), "--pred")
    split = _opt(args, cfg, "split", default="test")
    meta, rows = read_predictions(path)
    gold = [r[2] for r in rows if r[1] == split]
    pred = [r[4] for r in rows if r[1] == split]
    if not gold:
        raise UsageError(f"{path}: no rows for split {split!r}")
    value = ev.qwk(gold, pred, int(meta["score_min"]), int(meta["score_max"]))
    print(f"qwk={value:.6f} n={len(gold)} split={split}")
    return 0


def cmd_report(args, cfg) -> int:
    runs_dir = _require(args, cfg, "runs")
    if not os.path.isdir(runs_dir):
        raise UsageError(f"missing runs directory: {runs_dir}")
    runs = []
    for dirpath, _, filenames in sorted(os.walk(runs_dir)):
        if "predictions.tsv" not in filenames:
            continue
        meta, rows = read_predictions(os.path.join(dirpath, "predictions.tsv"))
        value = _qwk_of_rows(rows, "test", int(meta["score_min"]), int(meta["score_max"]))
        if value is None:
            continue
        runs.append(ev.RunResult(model=meta["model"], prompt_id=int(meta["prompt_id"]),
                                 fold_id=int(meta.get("fold", 0)), qwk=value))
    if not runs:
        raise UsageError(f"no completed runs under {runs_dir}")

    correlations = None
    features_path = _opt(args, cfg, "features")
    if features_path and _opt(args, cfg, "corpus"):
        corpus = _load_corpus(args, cfg)
        ids, matrix = feat.read_feature_file(_input_file(features_path, "--features"))
        by_id = corpus.by_id()
        keep = [i for i, essay_id in enumerate(ids) if essay_id in by_id]
        gold = np.array([by_id[ids[i]].gold_score for i in keep], dtype=float)
        correlations = {}
        for col, name in enumerate(feat.FEATURE_NAMES):
            try:
                correlations[name] = ev.spearman(matrix[keep, col], gold)
            except ev.UndefinedMetric:
                continue
    baseline = _opt(args, cfg, "baseline", default="semantic")
    report = ev.assemble_report(runs, baseline=baseline, feature_correlations=correlations)
    table = ev.format_report_table(report)
    sys.stdout.write(table)
    out = _opt(args, cfg, "out")
    if out:
        ev.write_report_tsv(out, report)
        print(f"wrote {out}")
    return 0


def cmd_stub_export(args, cfg) -> int:
    corpus = _load_corpus(args, cfg)
    dim = _opt(args, cfg, "dim", default=32, cast=int)
    seed = _opt(args, cfg, "seed", default=0, cast=int)
    sem = _opt(args, cfg, "out-semantic")
    nsp = _opt(args, cfg, "out-nsp")
    manifest = _opt(args, cfg, "out-manifest")
    if not (sem or nsp or manifest):
        raise UsageError("nothing to do: give --out-semantic, --out-nsp, or --out-manifest")
    encoder_io.stub_export(corpus, dim=dim, seed=seed,
                           semantic_path=sem, nsp_path=nsp, manifest_path=manifest)
    for path in (sem, nsp, manifest):
        if path:
            print(f"wrote {path}")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aesfuse",
                                     description="essay scoring experiment pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, func, flags):
        p = sub.add_parser(name)
        p.add_argument("--config")
        for flag, kwargs in flags:
            p.add_argument(flag, **kwargs)
        p.set_defaults(func=func)
        return p

    corpus_flags = [("--corpus", {}), ("--format", {"choices": ["asap", "simple"]})]
    add("make-folds", cmd_make_folds, corpus_flags + [("--seed", {}), ("--out", {})])
    add("extract-features", cmd_extract_features,
        corpus_flags + [("--prompt", {}), ("--out", {})])
    add("coherence-stats", cmd_coherence_stats,
        corpus_flags + [("--nsp", {}), ("--prompt", {}), ("--out", {})])
    add("build-embeddings", cmd_build_embeddings, corpus_flags + [
        ("--space", {"choices": ["syntactic", "cohe-stat"]}),
        ("--prompt", {}), ("--fold", {}), ("--partition", {}),
        ("--features", {}), ("--nsp", {}), ("--bins", {}), ("--tau", {}),
        ("--seed", {}), ("--transe-epochs", {}), ("--gamma", {}), ("--transe-lr", {}),
        ("--out", {}),
    ])
    add("train", cmd_train, corpus_flags + [
        ("--model", {"choices": list(MODELS)}),
        ("--prompt", {}), ("--fold", {}), ("--partition", {}),
        ("--semantic", {}), ("--nsp", {}), ("--features", {}),
        ("--syn-space", {}), ("--stat-space", {}), ("--concat-coherence", {"choices": ["padded", "stat"]}),
        ("--alpha", {}), ("--seed", {}), ("--epochs", {}), ("--batch-size", {}),
        ("--dropout", {}), ("--learning-rate", {}),
        ("--semantic-width", {}), ("--fusion-width", {}),
        ("--out", {}),
    ])
    add("combine", cmd_combine, [
        ("--strategy", {"choices": ["add", "linear", "ensemble"]}),
        ("--pred", {"nargs": "+"}), ("--out", {}),
    ])
    add("evaluate", cmd_evaluate, [("--pred", {}), ("--split", {})])
    add("report", cmd_report, corpus_flags + [
        ("--runs", {}), ("--baseline", {}), ("--features", {}), ("--out", {}),
    ])
    add("stub-export", cmd_stub_export, corpus_flags + [
        ("--dim", {}), ("--seed", {}),
        ("--out-semantic", {}), ("--out-nsp", {}), ("--out-manifest", {}),
    ])
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    cfg: dict[str, str] = {}
    try:
        if args.config:
            cfg = load_config(_input_file(args.config, "--config"))
        return args.func(args, cfg)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: missing file: {exc}", file=sys.stderr)
        return 2
    except (ValueError, scoring.TrainingDiverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
