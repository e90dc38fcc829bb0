"""Readers for the scoring pipeline's file formats.

The exporter talks to the scoring package only through files: it reads
the corpus TSV and the sentence manifest the pipeline wrote, and writes
semantic/NSP files back in the documented formats.
"""

from __future__ import annotations

import json


def read_corpus(path, format: str = "asap") -> list[tuple[str, str]]:
    """(essay_id, text) pairs from an 'asap' or 'simple' corpus TSV."""
    if format not in ("asap", "simple"):
        raise ValueError(f"unknown corpus format {format!r}")
    with open(path, "rb") as f:
        raw = f.read()
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        text = raw.decode("latin-1")
    id_col, text_col = ("essay_id", "essay") if format == "asap" else ("essay_id", "text")
    header = None
    col: dict[str, int] = {}
    out: list[tuple[str, str]] = []
    for line in text.splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        fields = line.split("\t")
        if header is None:
            header = fields
            col = {name.strip().lower(): i for i, name in enumerate(header)}
            for need in (id_col, text_col):
                if need not in col:
                    raise ValueError(f"{path}: header lacks column {need!r}")
            continue
        essay_id = fields[col[id_col]].strip()
        body = fields[col[text_col]].strip()
        if essay_id and body:
            out.append((essay_id, body))
    return out


def read_sentence_manifest(path) -> dict[str, list[str]]:
    """essay_id -> sentences, as segmented by the scoring pipeline."""
    out: dict[str, list[str]] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            if not line.strip():
                continue
            record = json.loads(line)
            out[record["essay_id"]] = list(record["sentences"])
    return out
