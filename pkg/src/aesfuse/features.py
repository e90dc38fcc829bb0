"""The 25 handcrafted essay-level features and their train-split standardizer.

Registry order is fixed: 6 length-based, 6 syntactic, 7 word-based,
6 readability features. All denominators are clamped so every value is
finite for any input, including degenerate one-word essays.
"""

from __future__ import annotations

import math
import re
import string
from dataclasses import dataclass, field

import numpy as np

from . import lexicons
from .corpus import Essay
from .segmentation import count_syllables

FEATURE_NAMES = (
    # length-based
    "log_char_count",
    "log_word_count",
    "sentence_count",
    "mean_word_length",
    "mean_sentence_length",
    "sentence_length_std",
    # syntactic
    "commas_per_sentence",
    "punctuation_density",
    "subordinating_conjunctions",
    "coordinating_conjunctions",
    "prepositions",
    "paired_quotes_parens",
    # word-based
    "unique_word_count",
    "type_token_ratio",
    "stopword_ratio",
    "long_word_ratio",
    "out_of_lexicon_ratio",
    "mean_frequency_rank",
    "hapax_ratio",
    # readability
    "flesch_reading_ease",
    "flesch_kincaid_grade",
    "gunning_fog",
    "smog_index",
    "coleman_liau_index",
    "automated_readability_index",
)

CATEGORY_SLICES = {
    "length": slice(0, 6),
    "syntactic": slice(6, 12),
    "word": slice(12, 19),
    "readability": slice(19, 25),
}

N_FEATURES = 25

_WORD_RE = re.compile(r"[A-Za-z]+(?:'[A-Za-z]+)?")
_PUNCT = set(string.punctuation)


def tokenize_words(text: str) -> list[str]:
    return _WORD_RE.findall(text)


def extract_features(essay: Essay) -> np.ndarray:
    """25-vector in registry order; requires essay.sentences to be filled."""
    text = essay.text
    sentences = essay.sentences
    tokens = tokenize_words(text)
    lower = [t.lower() for t in tokens]

    n_chars = sum(1 for c in text if not c.isspace())
    n_words = len(tokens)
    n_sents = len(sentences)
    w = max(1, n_words)  # clamped denominators
    s = max(1, n_sents)

    letters = sum(sum(c.isalpha() for c in t) for t in tokens)
    sent_lengths = [len(tokenize_words(snt)) for snt in sentences]
    mean_sent_len = n_words / s
    if len(sent_lengths) > 1:
        sent_std = float(np.std(sent_lengths))
    else:
        sent_std = 0.0

    commas = text.count(",")
    punct_chars = sum(1 for c in text if c in _PUNCT)
    sub_conj = sum(1 for t in lower if t in lexicons.subordinating_conjunctions())
    coord_conj = sum(1 for t in lower if t in lexicons.coordinating_conjunctions())
    preps = sum(1 for t in lower if t in lexicons.prepositions())
    pairs = (
        text.count('"') // 2
        + min(text.count("“"), text.count("”"))
        + min(text.count("("), text.count(")"))
        + min(text.count("["), text.count("]"))
    )

    types = set(lower)
    n_types = len(types)
    stop = lexicons.stopwords()
    stop_ratio = sum(1 for t in lower if t in stop) / w
    long_ratio = sum(1 for t in lower if len(t) >= 7) / w
    lexicon = lexicons.spelling_lexicon()
    oov_ratio = sum(1 for t in lower if t not in lexicon) / w
    ranks = lexicons.frequency_ranks()
    oov_rank = len(ranks) + 1
    mean_rank = sum(ranks.get(t, oov_rank) for t in lower) / w
    counts: dict[str, int] = {}
    for t in lower:
        counts[t] = counts.get(t, 0) + 1
    hapax_ratio = sum(1 for c in counts.values() if c == 1) / max(1, n_types)

    syllables = [count_syllables(t) for t in tokens]
    n_syll = max(1, sum(syllables))
    complex_words = sum(1 for k in syllables if k >= 3)
    asl = n_words / s  # words per sentence (clamped)
    asw = n_syll / w  # syllables per word
    fre = 206.835 - 1.015 * asl - 84.6 * asw
    fkg = 0.39 * asl + 11.8 * asw - 15.59
    fog = 0.4 * (asl + 100.0 * complex_words / w)
    smog = 1.0430 * math.sqrt(complex_words * 30.0 / s) + 3.1291
    cli = 0.0588 * (100.0 * letters / w) - 0.296 * (100.0 * s / w) - 15.8
    ari_chars = sum(sum(c.isalnum() for c in t) for t in tokens)
    ari = 4.71 * (ari_chars / w) + 0.5 * asl - 21.43

    return np.array(
        [
            math.log(max(1, n_chars)),
            math.log(max(1, n_words)),
            float(n_sents),
            letters / w,
            mean_sent_len,
            sent_std,
            commas / s,
            punct_chars / w,
            float(sub_conj),
            float(coord_conj),
            float(preps),
            float(pairs),
            float(n_types),
            n_types / w,
            stop_ratio,
            long_ratio,
            oov_ratio,
            mean_rank,
            hapax_ratio,
            fre,
            fkg,
            fog,
            smog,
            cli,
            ari,
        ],
        dtype=np.float64,
    )


def extract_feature_matrix(essays: list[Essay]) -> np.ndarray:
    return np.stack([extract_features(e) for e in essays]) if essays else np.empty((0, N_FEATURES))


@dataclass
class FeatureStandardizer:
    means: np.ndarray
    stds: np.ndarray
    zero_variance: list[int] = field(default_factory=list)


def zero_variance_mask(means: np.ndarray, stds: np.ndarray) -> np.ndarray:
    """Columns whose spread is at floating-point noise level."""
    return stds <= 1e-12 * np.maximum(1.0, np.abs(means))


def fit_standardizer(train_matrix: np.ndarray) -> FeatureStandardizer:
    """Per-column mean/std over the training split only; flags zero-variance columns."""
    X = np.asarray(train_matrix, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("standardizer needs at least 2 training vectors")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    dead = zero_variance_mask(means, stds)
    flagged = [int(i) for i in np.nonzero(dead)[0]]
    stds = np.where(dead, 1.0, stds)
    return FeatureStandardizer(means=means, stds=stds, zero_variance=flagged)


def apply_standardizer(vectors: np.ndarray, standardizer: FeatureStandardizer) -> np.ndarray:
    """Standardize a single vector or a matrix of row vectors.

    Zero-variance columns come out exactly 0 (their residual spread is
    floating-point noise)."""
    out = (np.asarray(vectors, dtype=np.float64) - standardizer.means) / standardizer.stds
    if standardizer.zero_variance:
        out[..., standardizer.zero_variance] = 0.0
    return out


def write_feature_file(path, essay_ids: list[str], matrix: np.ndarray) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write("essay_id\t" + "\t".join(FEATURE_NAMES) + "\n")
        for essay_id, row in zip(essay_ids, matrix):
            f.write(essay_id + "\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def read_feature_file(path) -> tuple[list[str], np.ndarray]:
    ids: list[str] = []
    rows: list[list[float]] = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().rstrip("\n").split("\t")
        if header[1:] != list(FEATURE_NAMES):
            raise ValueError(f"{path}: feature header does not match the registry")
        for line in f:
            if not line.strip():
                continue
            fields = line.rstrip("\n").split("\t")
            ids.append(fields[0])
            rows.append([float(v) for v in fields[1:]])
    matrix = np.array(rows, dtype=np.float64) if rows else np.empty((0, N_FEATURES))
    if matrix.size and matrix.shape[1] != N_FEATURES:
        raise ValueError(f"{path}: expected {N_FEATURES} feature columns")
    return ids, matrix
