"""File-based boundary for semantic embeddings plus a deterministic stub
embedder, so the whole pipeline runs without any external encoder.

Formats (UTF-8, LF endings, 17-significant-digit decimals):
  semantic file:  header "dim=D", rows "essay_id<TAB>v1,v2,..."
  NSP file:       rows "essay_id<TAB>p1,p2,..." with e-1 probabilities
  sentence manifest: JSON lines {"essay_id": ..., "sentences": [...]}
"""

from __future__ import annotations

import hashlib
import json

import numpy as np

from .coherence import pair_windows, write_nsp_file
from .corpus import Corpus, Essay
from .features import tokenize_words


def write_semantic_file(path, vectors: dict[str, np.ndarray], dim: int) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"dim={dim}\n")
        for essay_id in sorted(vectors):
            v = np.asarray(vectors[essay_id], dtype=np.float64)
            if v.shape != (dim,):
                raise ValueError(f"essay {essay_id}: expected dim {dim}, got {v.shape}")
            f.write(f"{essay_id}\t" + ",".join(f"{x:.17g}" for x in v) + "\n")


def ingest_semantic(path, corpus: Corpus) -> dict[str, np.ndarray]:
    """Read a semantic embedding file; every corpus essay must appear
    exactly once with the declared dimension."""
    vectors: dict[str, np.ndarray] = {}
    errors: list[str] = []
    with open(path, encoding="utf-8") as f:
        header = f.readline().strip()
        if not header.startswith("dim="):
            raise ValueError(f"{path}: missing 'dim=' header")
        dim = int(header[4:])
        for lineno, line in enumerate(f, start=2):
            if not line.strip() or line.startswith("#"):
                continue
            parts = line.rstrip("\n").split("\t")
            if len(parts) != 2:
                errors.append(f"line {lineno}: expected 2 tab-separated fields")
                continue
            essay_id, payload = parts
            if essay_id in vectors:
                errors.append(f"duplicate essay_id {essay_id}")
                continue
            values = (
                np.array([float(v) for v in payload.split(",")], dtype=np.float64)
                if payload
                else np.empty(0, dtype=np.float64)
            )
            if values.shape[0] != dim:
                errors.append(f"essay {essay_id}: dim {values.shape[0]} != declared {dim}")
                continue
            if values.size and not np.all(np.isfinite(values)):
                errors.append(f"essay {essay_id}: non-finite values")
                continue
            vectors[essay_id] = values
    missing = sorted(set(e.id for e in corpus.essays) - set(vectors))
    if missing:
        errors.append(f"missing essay id(s): {', '.join(missing)}")
    if errors:
        raise ValueError(f"{path}: " + "; ".join(errors))
    return {e.id: vectors[e.id] for e in corpus.essays}


# ---------------------------------------------------------------------------
# Deterministic stub encoder (test double for the real exporter)


def _hash_rng(*parts) -> np.random.Generator:
    digest = hashlib.sha256("\x1f".join(str(p) for p in parts).encode("utf-8")).digest()
    return np.random.default_rng(int.from_bytes(digest[:8], "big"))


def stub_embed(essay: Essay, dim: int, seed: int) -> np.ndarray:
    """Hash-seeded pseudo-random projection of token-count statistics."""
    if dim == 0:
        return np.empty(0, dtype=np.float64)
    tokens = tokenize_words(essay.text)
    stats = np.array(
        [
            len(tokens),
            len({t.lower() for t in tokens}),
            sum(1 for c in essay.text if not c.isspace()),
            (sum(len(t) for t in tokens) / len(tokens)) if tokens else 0.0,
            max(1, len(essay.sentences)),
        ],
        dtype=np.float64,
    )
    proj = np.random.default_rng(seed).normal(0.0, 1.0 / np.sqrt(stats.size), size=(dim, stats.size))
    noise = _hash_rng("stub-embed", seed, essay.id, essay.text).normal(0.0, 1.0, size=dim)
    return proj @ np.log1p(stats) + 0.5 * noise


def stub_nsp(first: str, second: str, seed: int) -> float:
    """Probability in [0, 1] that rises with the pair's lexical overlap."""
    t1 = {t.lower() for t in tokenize_words(first)}
    t2 = {t.lower() for t in tokenize_words(second)}
    union = t1 | t2
    jaccard = len(t1 & t2) / len(union) if union else 0.0
    u = _hash_rng("stub-nsp", seed, first, second).random()
    return 0.15 + 0.7 * jaccard + 0.1 * u


def stub_export(corpus: Corpus, dim: int, seed: int,
                semantic_path=None, nsp_path=None, manifest_path=None) -> None:
    """Produce stub semantic/NSP files (and a sentence manifest) for a corpus."""
    if semantic_path is not None:
        vectors = {e.id: stub_embed(e, dim, seed) for e in corpus.essays}
        write_semantic_file(semantic_path, vectors, dim)
    if nsp_path is not None:
        probs = {
            e.id: np.array([stub_nsp(a, b, seed) for a, b in pair_windows(e.sentences)])
            for e in corpus.essays
        }
        write_nsp_file(nsp_path, probs)
    if manifest_path is not None:
        write_sentence_manifest(manifest_path, corpus)


def write_sentence_manifest(path, corpus: Corpus) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        for essay in sorted(corpus.essays, key=lambda e: e.id):
            f.write(json.dumps({"essay_id": essay.id, "sentences": essay.sentences},
                               ensure_ascii=False) + "\n")


def read_sentence_manifest(path) -> dict[str, list[str]]:
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["essay_id"]] = list(record["sentences"])
    return out
