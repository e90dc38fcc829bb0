"""Coherence representations built from next-sentence probabilities.

An essay with e sentences has e-1 sliding-window sentence pairs and an
e-1 probability vector; the vector is zero-padded to the prompt's
maximum length for the network channel, and summarized by 5 statistics
(max, min, mean, population std, geometric mean) for the embedding
pipeline. Statistics are always computed on the unpadded vector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Corpus

# Floor applied to probabilities inside the geometric mean only, so a
# single zero cannot annihilate the statistic.
GEOMEAN_FLOOR = 1e-8

STAT_NAMES = ("max", "min", "mean", "std", "perplexity")


@dataclass
class CoherenceVector:
    essay_id: str
    probs: np.ndarray  # shape (e-1,), values in [0, 1]


@dataclass
class CoherenceStats:
    max: float
    min: float
    mean: float
    std: float
    perplexity: float
    degenerate: bool = False

    def as_array(self) -> np.ndarray:
        return np.array([self.max, self.min, self.mean, self.std, self.perplexity])


def pair_windows(sentences: list[str]) -> list[tuple[str, str]]:
    """Consecutive sentence pairs (s1,s2),(s2,s3),...; empty for e <= 1."""
    return list(zip(sentences, sentences[1:]))


def pad_vector(probs: np.ndarray, max_sentence_count: int) -> np.ndarray:
    """Zero-pad an e-1 probability vector to length max_sentence_count - 1."""
    probs = np.asarray(probs, dtype=np.float64)
    target = max_sentence_count - 1
    if probs.shape[0] > target:
        raise ValueError(
            f"vector of length {probs.shape[0]} exceeds padded length {target} "
            "(segmentation inconsistency)"
        )
    out = np.zeros(target, dtype=np.float64)
    out[: probs.shape[0]] = probs
    return out


def coherence_stats(probs: np.ndarray) -> CoherenceStats:
    """The 5 summary statistics of an unpadded probability vector."""
    probs = np.asarray(probs, dtype=np.float64)
    if probs.size == 0:
        return CoherenceStats(0.0, 0.0, 0.0, 0.0, 0.0, degenerate=True)
    geo = float(np.exp(np.mean(np.log(np.maximum(probs, GEOMEAN_FLOOR)))))
    return CoherenceStats(
        max=float(probs.max()),
        min=float(probs.min()),
        mean=float(probs.mean()),
        std=float(probs.std()),
        perplexity=geo,
    )


def ingest_nsp(path, corpus: Corpus) -> dict[str, CoherenceVector]:
    """Read an NSP probability file and validate it against the corpus.

    Each row is "essay_id<TAB>p1,p2,...". Every essay present must carry
    exactly e-1 probabilities in [0, 1]; essays with one sentence carry
    an empty list.
    """
    by_id = corpus.by_id()
    vectors: dict[str, CoherenceVector] = {}
    errors: list[str] = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                errors.append(f"line {lineno}: expected 2 tab-separated fields")
                continue
            essay_id, payload = parts
            if essay_id not in by_id:
                errors.append(f"line {lineno}: unknown essay_id {essay_id}")
                continue
            if essay_id in vectors:
                errors.append(f"line {lineno}: duplicate essay_id {essay_id}")
                continue
            probs = (
                np.array([float(v) for v in payload.split(",")], dtype=np.float64)
                if payload
                else np.empty(0, dtype=np.float64)
            )
            expected = max(0, len(by_id[essay_id].sentences) - 1)
            if probs.shape[0] != expected:
                errors.append(
                    f"essay {essay_id}: expected {expected} probabilities, got {probs.shape[0]}"
                )
                continue
            if probs.size and (probs.min() < 0.0 or probs.max() > 1.0):
                errors.append(f"essay {essay_id}: probability outside [0, 1]")
                continue
            vectors[essay_id] = CoherenceVector(essay_id=essay_id, probs=probs)
    if errors:
        raise ValueError(f"{path}: " + "; ".join(errors))
    return vectors


def write_nsp_file(path, probs_by_id: dict[str, np.ndarray]) -> None:
    """Write NSP rows "essay_id<TAB>p1,p2,..." (empty payload for e=1 essays)."""
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for essay_id in sorted(probs_by_id):
            payload = ",".join(f"{p:.17g}" for p in np.asarray(probs_by_id[essay_id]))
            f.write(f"{essay_id}\t{payload}\n")


def write_stats_file(path, stats_by_id: dict[str, CoherenceStats]) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("essay_id\t" + "\t".join(STAT_NAMES) + "\tdegenerate\n")
        for essay_id in sorted(stats_by_id):
            st = stats_by_id[essay_id]
            row = "\t".join(f"{v:.17g}" for v in st.as_array())
            f.write(f"{essay_id}\t{row}\t{int(st.degenerate)}\n")


def read_stats_file(path) -> dict[str, CoherenceStats]:
    out: dict[str, CoherenceStats] = {}
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        if header[1:6] != list(STAT_NAMES):
            raise ValueError(f"{path}: unexpected stats header")
        for line in f:
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            values = [float(v) for v in fields[1:6]]
            degenerate = bool(int(fields[6])) if len(fields) > 6 else False
            out[fields[0]] = CoherenceStats(*values, degenerate=degenerate)
    return out
