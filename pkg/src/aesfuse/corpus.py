"""Essay corpus loading, score normalization, and cross-validation folds.

Reads the ASAP release TSV (or a simple 4-column synthetic format), keeps
per-prompt score ranges, segments essays into sentences, and builds
seeded 60/20/20 train/dev/test partitions over 5 folds.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .segmentation import segment_sentences

# Published per-prompt statistics of the ASAP release:
# prompt -> (essay_count, score_min, score_max)
ASAP_PROMPTS = {
    1: (1783, 2, 12),
    2: (1800, 1, 6),
    3: (1726, 0, 3),
    4: (1772, 0, 3),
    5: (1805, 0, 4),
    6: (1800, 0, 4),
    7: (1569, 0, 30),
    8: (723, 0, 60),
}

SPLITS = ("train", "dev", "test")


@dataclass
class Essay:
    id: str
    prompt_id: int
    text: str
    gold_score: int
    sentences: list[str] = field(default_factory=list)


@dataclass
class PromptSpec:
    prompt_id: int
    score_min: int
    score_max: int
    essay_count: int = 0
    max_sentence_count: int = 1


@dataclass
class FoldPartition:
    fold_id: int
    train_ids: set[str]
    dev_ids: set[str]
    test_ids: set[str]


@dataclass
class Corpus:
    essays: list[Essay]
    prompts: dict[int, PromptSpec]
    row_errors: list[tuple[int, str]] = field(default_factory=list)

    def for_prompt(self, prompt_id: int) -> list[Essay]:
        return [e for e in self.essays if e.prompt_id == prompt_id]

    def by_id(self) -> dict[str, Essay]:
        return {e.id: e for e in self.essays}


def _read_text(path) -> str:
    with open(path, "rb") as f:
        raw = f.read()
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _finish_corpus(essays: list[Essay], specs: dict[int, PromptSpec],
                   row_errors: list[tuple[int, str]]) -> Corpus:
    for essay in essays:
        essay.sentences = segment_sentences(essay.text)
        spec = specs[essay.prompt_id]
        spec.essay_count += 1
        spec.max_sentence_count = max(spec.max_sentence_count, len(essay.sentences))
    return Corpus(essays=essays, prompts=specs, row_errors=row_errors)


def load_corpus(path, format: str = "asap", ranges: dict[int, tuple[int, int]] | None = None) -> Corpus:
    """Load essays and per-prompt specs from a TSV file.

    format="asap": the official release layout, header-driven, with
    essay_id / essay_set / essay / domain1_score columns.
    format="simple": header essay_id / prompt_id / score / text, with
    optional "#range <pid> <min> <max>" lines before the header for
    prompts outside the ASAP table.

    Malformed rows are skipped and collected on corpus.row_errors with
    their line number; an unknown prompt id is fatal.
    """
    if format not in ("asap", "simple"):
        raise ValueError(f"unknown corpus format {format!r}")
    known_ranges = {pid: (lo, hi) for pid, (_, lo, hi) in ASAP_PROMPTS.items()}
    if ranges:
        known_ranges.update(ranges)

    text = _read_text(path)
    lines = text.splitlines()
    essays: list[Essay] = []
    specs: dict[int, PromptSpec] = {}
    row_errors: list[tuple[int, str]] = []

    header: list[str] | None = None
    col: dict[str, int] = {}
    seen_ids: set[str] = set()
    for lineno, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if format == "simple" and len(parts) == 4 and parts[0] == "range":
                known_ranges[int(parts[1])] = (int(parts[2]), int(parts[3]))
            continue
        if header is None:
            header = line.rstrip("\n").split("\t")
            col = {name.strip().lower(): idx for idx, name in enumerate(header)}
            needed = (
                ("essay_id", "essay_set", "essay", "domain1_score")
                if format == "asap"
                else ("essay_id", "prompt_id", "score", "text")
            )
            missing = [c for c in needed if c not in col]
            if missing:
                raise ValueError(f"{path}: header lacks column(s) {', '.join(missing)}")
            continue
        fields = line.split("\t")
        try:
            if format == "asap":
                essay_id = fields[col["essay_id"]].strip()
                prompt_id = int(fields[col["essay_set"]])
                body = fields[col["essay"]].strip()
                score = int(fields[col["domain1_score"]])
            else:
                essay_id = fields[col["essay_id"]].strip()
                prompt_id = int(fields[col["prompt_id"]])
                score = int(fields[col["score"]])
                body = fields[col["text"]].strip()
        except (IndexError, ValueError) as exc:
            row_errors.append((lineno, f"malformed row: {exc}"))
            continue
        if prompt_id not in known_ranges or not 1 <= prompt_id <= 8:
            raise ValueError(f"{path}:{lineno}: unknown prompt id {prompt_id}")
        lo, hi = known_ranges[prompt_id]
        if not essay_id:
            row_errors.append((lineno, "empty essay_id"))
            continue
        if essay_id in seen_ids:
            row_errors.append((lineno, f"duplicate essay_id {essay_id}"))
            continue
        if not body:
            row_errors.append((lineno, "empty essay text"))
            continue
        if not lo <= score <= hi:
            row_errors.append((lineno, f"score {score} outside range {lo}-{hi}"))
            continue
        if prompt_id not in specs:
            specs[prompt_id] = PromptSpec(prompt_id, lo, hi, essay_count=0, max_sentence_count=1)
        seen_ids.add(essay_id)
        essays.append(Essay(id=essay_id, prompt_id=prompt_id, text=body, gold_score=score))
    return _finish_corpus(essays, specs, row_errors)


def normalize_score(raw: int, prompt: PromptSpec) -> float:
    """Map a raw integer score to [0, 1] over the prompt's range."""
    if not prompt.score_min <= raw <= prompt.score_max:
        raise ValueError(
            f"score {raw} outside prompt {prompt.prompt_id} range "
            f"{prompt.score_min}-{prompt.score_max}"
        )
    return (raw - prompt.score_min) / (prompt.score_max - prompt.score_min)


def denormalize_score(u: float, prompt: PromptSpec) -> int:
    """Map a [0, 1] prediction back to the raw integer scale (half-up)."""
    u = min(1.0, max(0.0, float(u)))
    span = prompt.score_max - prompt.score_min
    return int(math.floor(u * span + prompt.score_min + 0.5))


def make_folds(essay_ids, seed: int, n_folds: int = 5) -> list[FoldPartition]:
    """Seeded near-equal split into n_folds; fold k tests chunk k, devs chunk k+1."""
    ids = sorted(str(i) for i in essay_ids)
    if len(ids) < n_folds:
        raise ValueError(f"need at least {n_folds} essays, got {len(ids)}")
    rng = np.random.default_rng(seed)
    rng.shuffle(ids)
    base, extra = divmod(len(ids), n_folds)
    chunks = []
    pos = 0
    for k in range(n_folds):
        size = base + (1 if k < extra else 0)
        chunks.append(ids[pos:pos + size])
        pos += size
    folds = []
    for k in range(n_folds):
        test = set(chunks[k])
        dev = set(chunks[(k + 1) % n_folds])
        train = set(ids) - test - dev
        folds.append(FoldPartition(fold_id=k, train_ids=train, dev_ids=dev, test_ids=test))
    return folds


def write_partition(partitions: dict[int, list[FoldPartition]], path) -> None:
    """Write (essay_id, fold_id, split) rows for every prompt's folds."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("essay_id\tfold_id\tsplit\n")
        for prompt_id in sorted(partitions):
            for fold in partitions[prompt_id]:
                for split, ids in (("train", fold.train_ids),
                                   ("dev", fold.dev_ids),
                                   ("test", fold.test_ids)):
                    for essay_id in sorted(ids):
                        f.write(f"{essay_id}\t{fold.fold_id}\t{split}\n")


def load_partition(path, corpus: Corpus) -> dict[int, list[FoldPartition]]:
    """Read a partition file back into per-prompt folds, validating coverage."""
    by_id = corpus.by_id()
    rows: dict[int, dict[str, dict[str, set[str]]]] = {}
    n_folds = 0
    with open(path, encoding="utf-8") as f:
        header = f.readline()
        if not header.startswith("essay_id"):
            raise ValueError(f"{path}: missing partition header")
        for lineno, line in enumerate(f, start=2):
            if not line.strip():
                continue
            try:
                essay_id, fold_s, split = line.rstrip("\n").split("\t")
                fold_id = int(fold_s)
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed row: {exc}") from None
            if split not in SPLITS:
                raise ValueError(f"{path}:{lineno}: unknown split {split!r}")
            if essay_id not in by_id:
                continue  # partition may cover a superset corpus
            prompt_id = by_id[essay_id].prompt_id
            fold = rows.setdefault(prompt_id, {}).setdefault(fold_id, {s: set() for s in SPLITS})
            fold[split].add(essay_id)
            n_folds = max(n_folds, fold_id + 1)
    partitions: dict[int, list[FoldPartition]] = {}
    for prompt_id, folds in rows.items():
        prompt_ids = {e.id for e in corpus.for_prompt(prompt_id)}
        out = []
        test_cover: list[str] = []
        for fold_id in range(n_folds):
            if fold_id not in folds:
                raise ValueError(f"{path}: prompt {prompt_id} lacks fold {fold_id}")
            sets = folds[fold_id]
            if sets["train"] & sets["dev"] or sets["train"] & sets["test"] or sets["dev"] & sets["test"]:
                raise ValueError(f"{path}: prompt {prompt_id} fold {fold_id} splits overlap")
            union = sets["train"] | sets["dev"] | sets["test"]
            if union != prompt_ids:
                raise ValueError(
                    f"{path}: prompt {prompt_id} fold {fold_id} does not cover the corpus"
                )
            test_cover.extend(sets["test"])
            out.append(FoldPartition(fold_id, sets["train"], sets["dev"], sets["test"]))
        if sorted(test_cover) != sorted(prompt_ids):
            raise ValueError(f"{path}: prompt {prompt_id} test folds are not a partition")
        partitions[prompt_id] = out
    return partitions
