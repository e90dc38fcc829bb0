"""Fusion strategies over the three base models: score averaging, a
dev-fitted affine map, a jointly trained three-channel network, and
integer-vote ensembling.
"""

from __future__ import annotations

import math
import warnings

import numpy as np

from .corpus import PromptSpec
from .scoring import FoldData, TrainConfig, TrainResult, train_and_select


def add_combine(preds: np.ndarray) -> np.ndarray:
    """Mean of the per-model normalized predictions (kept in [0, 1]).

    preds: (n, 3) columns = semantic, coherence-enhanced, syntactic-enhanced.
    """
    p = np.asarray(preds, dtype=np.float64)
    if p.ndim != 2 or p.shape[1] != 3:
        raise ValueError("expected (n, 3) prediction matrix")
    return p.mean(axis=1)


def linear_combine(dev_preds: np.ndarray, dev_gold_norm: np.ndarray,
                   test_preds: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares affine 3 -> 1 map fit on dev, applied to test.

    Returns (test_out clipped to [0, 1], coefficients [w1, w2, w3, bias]).
    Falls back to add_combine when the dev design matrix is singular.
    """
    dev = np.asarray(dev_preds, dtype=np.float64)
    test = np.asarray(test_preds, dtype=np.float64)
    y = np.asarray(dev_gold_norm, dtype=np.float64)
    if dev.ndim != 2 or dev.shape[1] != 3 or test.shape[1] != 3:
        raise ValueError("expected (n, 3) prediction matrices")
    if dev.shape[0] != y.shape[0] or dev.shape[0] == 0:
        raise ValueError("dev predictions and gold lengths differ")
    design = np.hstack([dev, np.ones((dev.shape[0], 1))])
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < min(design.shape):
        warnings.warn("singular dev design matrix: falling back to add_combine")
        coef = np.array([1 / 3, 1 / 3, 1 / 3, 0.0])
    out = test @ coef[:3] + coef[3]
    return np.clip(out, 0.0, 1.0), coef


def ensemble(raw_preds, prompt: PromptSpec) -> int:
    """Half-up round of the mean of three raw-scale integer predictions."""
    p = [int(v) for v in raw_preds]
    if len(p) != 3:
        raise ValueError("expected exactly 3 integer predictions")
    rounded = int(math.floor(sum(p) / 3.0 + 0.5))
    return min(prompt.score_max, max(prompt.score_min, rounded))


def concat_combine(data: FoldData, config: TrainConfig) -> TrainResult:
    """Three-channel joint model: same training/selection protocol with
    every channel enabled."""
    missing = {"semantic", "coherence", "syntactic"} - set(data.train_inputs)
    if missing:
        raise ValueError(f"concat_combine needs all three channels, missing {sorted(missing)}")
    if set(config.channels) != {"semantic", "coherence", "syntactic"}:
        config = TrainConfig(**{**config.__dict__, "channels": ("semantic", "coherence", "syntactic")})
    return train_and_select(data, config)
