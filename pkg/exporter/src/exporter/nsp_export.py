"""Export next-sentence probabilities for consecutive sentence pairs.

Sentences come from the scoring pipeline's manifest file, never from a
re-implemented splitter, so the e-1 count contract holds bit-exactly.
Pairs are fed to a frozen pretrained NSP head as raw sentence pairs (no
prompt template); that choice is recorded in the output header. Output
rows are "essay_id<TAB>p1,p2,..." sorted by essay id, one probability per
consecutive pair, empty payload for single-sentence essays.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import torch
from transformers import AutoTokenizer, BertForNextSentencePrediction

logger = logging.getLogger("exporter.nsp")


@dataclass
class NspExportResult:
    n_essays: int
    n_pairs: int
    aborted_ids: list[str] = field(default_factory=list)


def export_nsp(
    sentences_by_id: dict[str, list[str]],
    model_dir: str,
    out_path,
    max_length: int | None = None,
    batch_size: int = 16,
) -> NspExportResult:
    """Write e-1 "is next sentence" probabilities per essay."""
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = BertForNextSentencePrediction.from_pretrained(model_dir)
    model.eval()
    window = max_length or int(model.config.max_position_embeddings)

    rows: dict[str, list[float]] = {}
    aborted: list[str] = []
    n_pairs = 0
    with torch.no_grad():
        for essay_id in sorted(sentences_by_id):
            sentences = sentences_by_id[essay_id]
            pairs = list(zip(sentences, sentences[1:]))
            try:
                probs: list[float] = []
                for start in range(0, len(pairs), batch_size):
                    chunk = pairs[start : start + batch_size]
                    enc = tokenizer(
                        [a for a, _ in chunk],
                        [b for _, b in chunk],
                        truncation=True,
                        max_length=window,
                        padding=True,
                        return_tensors="pt",
                    )
                    logits = model(**enc).logits
                    # class 0 = "sentence B continues sentence A"
                    probs.extend(torch.softmax(logits.double(), dim=-1)[:, 0].tolist())
                if len(probs) != max(0, len(sentences) - 1):
                    raise RuntimeError(
                        f"count mismatch: {len(probs)} probabilities for "
                        f"{len(sentences)} sentences"
                    )
                rows[essay_id] = probs
                n_pairs += len(probs)
            except Exception as exc:  # abort this essay only, keep the rest
                aborted.append(essay_id)
                logger.warning("essay %s: aborted (%s)", essay_id, exc)

    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"#model={model_dir}\ttemplate=none\twindow={window}\n")
        f.write(f"#aborted_count={len(aborted)}\n")
        for essay_id in sorted(rows):
            payload = ",".join(f"{p:.17g}" for p in rows[essay_id])
            f.write(f"{essay_id}\t{payload}\n")
    return NspExportResult(n_essays=len(rows), n_pairs=n_pairs, aborted_ids=aborted)
