"""Essay scoring from fused semantic, coherence, and syntactic channels."""

from .coherence import coherence_stats, pad_vector, pair_windows
from .corpus import (
    Corpus,
    Essay,
    FoldPartition,
    PromptSpec,
    denormalize_score,
    load_corpus,
    make_folds,
    normalize_score,
)
from .dense_embedding import (
    EmbeddingSpace,
    build_correlation_graph,
    gaussian_bin_init,
    project,
    train_transe,
)
from .evaluation import paired_ttest, qwk, spearman
from .features import apply_standardizer, extract_features, fit_standardizer
from .scoring import (
    ScoringNetwork,
    TrainConfig,
    combined_loss,
    listnet_loss,
    mse_loss,
    top_one_probability,
    train_and_select,
)
from .segmentation import segment_sentences

__all__ = [
    "Corpus",
    "Essay",
    "EmbeddingSpace",
    "FoldPartition",
    "PromptSpec",
    "ScoringNetwork",
    "TrainConfig",
    "apply_standardizer",
    "build_correlation_graph",
    "coherence_stats",
    "combined_loss",
    "denormalize_score",
    "extract_features",
    "fit_standardizer",
    "gaussian_bin_init",
    "listnet_loss",
    "load_corpus",
    "make_folds",
    "mse_loss",
    "normalize_score",
    "pad_vector",
    "pair_windows",
    "paired_ttest",
    "project",
    "qwk",
    "segment_sentences",
    "spearman",
    "top_one_probability",
    "train_and_select",
    "train_transe",
]

__version__ = "0.1.0"
