"""Encoder exporter: transformer CLS embeddings and NSP probabilities in
the scoring pipeline's file formats."""

from .cls_export import ClsExportResult, export_cls
from .corpus_io import read_corpus, read_sentence_manifest
from .nsp_export import NspExportResult, export_nsp

__all__ = [
    "ClsExportResult",
    "NspExportResult",
    "export_cls",
    "export_nsp",
    "read_corpus",
    "read_sentence_manifest",
]

__version__ = "0.1.0"
