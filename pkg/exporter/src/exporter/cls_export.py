"""Export per-essay [CLS] embeddings from a local transformer checkpoint.

Output format matches the scoring pipeline's semantic file: a "dim=D"
first line, "#" comment lines recording the export settings, then
"essay_id<TAB>v1,v2,..." rows sorted by essay id. Essays longer than the
encoder window are head-truncated deterministically and flagged in the
log and the file header.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import torch
from transformers import AutoModel, AutoTokenizer

logger = logging.getLogger("exporter.cls")


@dataclass
class ClsExportResult:
    dim: int
    n_records: int
    truncated_ids: list[str] = field(default_factory=list)
    skipped_ids: list[str] = field(default_factory=list)


def resolve_window(tokenizer, model, max_length: int | None) -> int:
    if max_length is not None:
        return max_length
    window = int(model.config.max_position_embeddings)
    declared = getattr(tokenizer, "model_max_length", None)
    if declared and declared < 10**9:  # tokenizers use a huge sentinel for "unset"
        window = min(window, int(declared))
    return window


def export_cls(
    essays: list[tuple[str, str]],
    model_dir: str,
    out_path,
    max_length: int | None = None,
    batch_size: int = 8,
) -> ClsExportResult:
    """Write one [CLS] record per (essay_id, text); returns export stats."""
    tokenizer = AutoTokenizer.from_pretrained(model_dir)
    model = AutoModel.from_pretrained(model_dir)
    model.eval()
    window = resolve_window(tokenizer, model, max_length)
    dim = int(model.config.hidden_size)

    vectors: dict[str, torch.Tensor] = {}
    truncated: list[str] = []
    skipped: list[str] = []
    ordered = sorted(essays, key=lambda pair: pair[0])
    with torch.no_grad():
        for start in range(0, len(ordered), batch_size):
            batch = ordered[start : start + batch_size]
            encoded = []
            for essay_id, text in batch:
                try:
                    full = tokenizer(text, truncation=False)["input_ids"]
                    if len(full) > window:
                        truncated.append(essay_id)
                        logger.info("essay %s: %d tokens head-truncated to %d",
                                    essay_id, len(full), window)
                    encoded.append((essay_id, text))
                except Exception as exc:  # tokenizer failure: skip with log entry
                    skipped.append(essay_id)
                    logger.warning("essay %s: tokenizer failure, skipped (%s)", essay_id, exc)
            if not encoded:
                continue
            enc = tokenizer(
                [text for _, text in encoded],
                truncation=True,
                max_length=window,
                padding=True,
                return_tensors="pt",
            )
            hidden = model(**enc).last_hidden_state
            for (essay_id, _), vec in zip(encoded, hidden[:, 0, :]):
                vectors[essay_id] = vec.double()

    with open(out_path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"dim={dim}\n")
        f.write(f"#model={model_dir}\ttruncation=head\twindow={window}\n")
        f.write(f"#truncated_count={len(truncated)}\tskipped_count={len(skipped)}\n")
        for essay_id in sorted(vectors):
            payload = ",".join(f"{v:.17g}" for v in vectors[essay_id].tolist())
            f.write(f"{essay_id}\t{payload}\n")
    return ClsExportResult(
        dim=dim, n_records=len(vectors), truncated_ids=truncated, skipped_ids=skipped
    )
