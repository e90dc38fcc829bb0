"""Latent feature-space embeddings learned from a feature correlation graph.

Pipeline: Pearson correlation graph over standardized feature columns,
gaussian-binning initial embeddings, translational (h + r ~ t) embedding
training with margin ranking loss and negative sampling, then projection
of an essay's standardized vector into the learned space by matrix
multiplication. Applied to both the 25-feature space and the 5-stat
coherence space.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .features import FeatureStandardizer, zero_variance_mask

RELATION_BINS = ("strong-", "weak-", "weak+", "strong+")
STRONG_THRESHOLD = 0.6


def relation_bin(rho: float) -> int:
    """Signed-strength bin index; boundary at |rho| = 0.6."""
    if rho < 0:
        return 0 if rho <= -STRONG_THRESHOLD else 1
    return 3 if rho >= STRONG_THRESHOLD else 2


@dataclass
class GraphEdge:
    head: int
    tail: int
    relation: int  # index into RELATION_BINS
    weight: float  # the correlation value


@dataclass
class CorrelationGraph:
    n_features: int
    edges: list[GraphEdge]
    tau: float
    zero_variance: list[int] = field(default_factory=list)


@dataclass
class FeatureEmbeddingMatrix:
    entity_embeddings: np.ndarray  # (F, d)
    relation_embeddings: np.ndarray  # (R, d)
    epoch_losses: list[float] = field(default_factory=list)

    @property
    def dim(self) -> int:
        return self.entity_embeddings.shape[1]


@dataclass
class TranseConfig:
    gamma: float = 1.0
    learning_rate: float = 0.01
    epochs: int = 500
    seed: int = 0


def build_correlation_graph(X: np.ndarray, tau: float = 0.2) -> CorrelationGraph:
    """Edges (h,t) and (t,h) for every feature pair with |pearson| >= tau.

    Zero-variance columns stay as nodes but contribute no edges.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[0] < 3:
        raise ValueError("correlation graph needs at least 3 rows")
    n_features = X.shape[1]
    dead = [int(i) for i in np.nonzero(zero_variance_mask(X.mean(axis=0), X.std(axis=0)))[0]]
    if dead:
        warnings.warn(f"zero-variance feature column(s) {dead}: incident edges skipped")
    with np.errstate(invalid="ignore", divide="ignore"):
        corr = np.corrcoef(X, rowvar=False)
    dead_set = set(dead)
    edges: list[GraphEdge] = []
    for i in range(n_features):
        for j in range(i + 1, n_features):
            if i in dead_set or j in dead_set:
                continue  # correlations against noise-level columns are spurious
            rho = corr[i, j]
            if not np.isfinite(rho) or abs(rho) < tau:
                continue
            rho = float(np.clip(rho, -1.0, 1.0))
            r = relation_bin(rho)
            edges.append(GraphEdge(i, j, r, rho))
            edges.append(GraphEdge(j, i, r, rho))
    return CorrelationGraph(n_features=n_features, edges=edges, tau=tau, zero_variance=dead)


def gaussian_bin_init(X: np.ndarray, k: int) -> np.ndarray:
    """Initial (F, k) embeddings: per feature, the mean soft bin-membership
    vector of its standardized values over the corpus.

    k equal-width bins over [-3, 3], centers at bin midpoints, sigma =
    half the bin width; memberships are normalized to sum to 1 per value.
    """
    X = np.asarray(X, dtype=np.float64)
    if k < 2:
        raise ValueError("need at least 2 bins")
    width = 6.0 / k
    centers = -3.0 + (np.arange(k) + 0.5) * width
    sigma = width / 2.0
    init = np.empty((X.shape[1], k), dtype=np.float64)
    for f in range(X.shape[1]):
        m = soft_bin_memberships(X[:, f], centers, sigma)
        init[f] = m.mean(axis=0)
    return init


def soft_bin_memberships(values: np.ndarray, centers: np.ndarray, sigma: float) -> np.ndarray:
    """(N, k) gaussian memberships, each row normalized to sum to 1."""
    values = np.atleast_1d(np.asarray(values, dtype=np.float64))
    logm = -((values[:, None] - centers[None, :]) ** 2) / (2.0 * sigma**2)
    logm -= logm.max(axis=1, keepdims=True)  # keeps far outliers from underflowing
    m = np.exp(logm)
    return m / m.sum(axis=1, keepdims=True)


def bin_centers(k: int) -> np.ndarray:
    width = 6.0 / k
    return -3.0 + (np.arange(k) + 0.5) * width


def train_transe(
    graph: CorrelationGraph,
    init_embeddings: np.ndarray,
    config: TranseConfig | None = None,
) -> FeatureEmbeddingMatrix:
    """Margin-ranking training of entity/relation embeddings on the graph.

    Each epoch draws one uniform negative per positive triple (corrupting
    head or tail with a different entity), applies one SGD step on
    sum(max(0, gamma + d_pos - d_neg)), and renormalizes entities onto
    the unit ball.
    """
    config = config or TranseConfig()
    ent = np.array(init_embeddings, dtype=np.float64, copy=True)
    n_ent, dim = ent.shape
    rng = np.random.default_rng(config.seed)
    rel = rng.normal(0.0, 0.1 / np.sqrt(dim), size=(len(RELATION_BINS), dim))
    if not graph.edges:
        warnings.warn("empty edge set: returning initial embeddings untrained")
        return FeatureEmbeddingMatrix(ent, rel, epoch_losses=[])
    if n_ent < 2:
        raise ValueError("negative sampling needs at least 2 entities")

    H = np.array([e.head for e in graph.edges])
    T = np.array([e.tail for e in graph.edges])
    R = np.array([e.relation for e in graph.edges])
    m = len(H)
    eps = 1e-12
    losses: list[float] = []
    for _ in range(config.epochs):
        corrupt_head = rng.random(m) < 0.5
        orig = np.where(corrupt_head, H, T)
        repl = (orig + rng.integers(1, n_ent, size=m)) % n_ent
        Hn = np.where(corrupt_head, repl, H)
        Tn = np.where(corrupt_head, T, repl)

        pos_diff = ent[H] + rel[R] - ent[T]
        neg_diff = ent[Hn] + rel[R] - ent[Tn]
        pos_d = np.linalg.norm(pos_diff, axis=1)
        neg_d = np.linalg.norm(neg_diff, axis=1)
        margin = config.gamma + pos_d - neg_d
        viol = margin > 0
        losses.append(float(np.sum(np.maximum(0.0, margin))))
        if viol.any():
            gpos = pos_diff[viol] / (pos_d[viol, None] + eps)
            gneg = neg_diff[viol] / (neg_d[viol, None] + eps)
            grad_ent = np.zeros_like(ent)
            grad_rel = np.zeros_like(rel)
            np.add.at(grad_ent, H[viol], gpos)
            np.add.at(grad_ent, T[viol], -gpos)
            np.add.at(grad_rel, R[viol], gpos - gneg)
            np.add.at(grad_ent, Hn[viol], -gneg)
            np.add.at(grad_ent, Tn[viol], gneg)
            ent -= config.learning_rate * grad_ent
            rel -= config.learning_rate * grad_rel
        norms = np.linalg.norm(ent, axis=1)
        over = norms > 1.0
        if over.any():
            ent[over] /= norms[over, None]
    return FeatureEmbeddingMatrix(ent, rel, epoch_losses=losses)


def project(standardized: np.ndarray, matrix: FeatureEmbeddingMatrix) -> np.ndarray:
    """Project standardized feature vectors into the latent space.

    A single (F,) vector gives (d,); an (N, F) matrix gives (N, d).
    """
    v = np.asarray(standardized, dtype=np.float64)
    n_ent = matrix.entity_embeddings.shape[0]
    if v.shape[-1] != n_ent:
        raise ValueError(f"expected {n_ent}-dim feature vector, got {v.shape[-1]}")
    return v @ matrix.entity_embeddings


@dataclass
class EmbeddingSpace:
    """A trained latent space plus the standardizer that feeds it."""

    matrix: FeatureEmbeddingMatrix
    standardizer: FeatureStandardizer
    meta: dict[str, str] = field(default_factory=dict)

    def embed(self, raw_vectors: np.ndarray) -> np.ndarray:
        std = (np.asarray(raw_vectors, dtype=np.float64) - self.standardizer.means) / self.standardizer.stds
        return project(std, self.matrix)


def save_embedding_space(path, space: EmbeddingSpace) -> None:
    ent = space.matrix.entity_embeddings
    rel = space.matrix.relation_embeddings
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        f.write(f"F={ent.shape[0]}\n")
        f.write(f"R={rel.shape[0]}\n")
        f.write(f"d={ent.shape[1]}\n")
        for key in sorted(space.meta):
            f.write(f"{key}={space.meta[key]}\n")
        f.write("mean\t" + "\t".join(f"{v:.17g}" for v in space.standardizer.means) + "\n")
        f.write("std\t" + "\t".join(f"{v:.17g}" for v in space.standardizer.stds) + "\n")
        zv = ",".join(str(i) for i in space.standardizer.zero_variance)
        f.write(f"zero_variance\t{zv}\n")
        for i, row in enumerate(ent):
            f.write(f"e\t{i}\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")
        for i, row in enumerate(rel):
            f.write(f"r\t{i}\t" + "\t".join(f"{v:.17g}" for v in row) + "\n")


def load_embedding_space(path) -> EmbeddingSpace:
    meta: dict[str, str] = {}
    means = stds = None
    zero_variance: list[int] = []
    ent_rows: dict[int, np.ndarray] = {}
    rel_rows: dict[int, np.ndarray] = {}
    with open(path, encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line:
                continue
            if "\t" not in line:
                key, _, value = line.partition("=")
                meta[key] = value
                continue
            fields = line.split("\t")
            tag = fields[0]
            if tag == "mean":
                means = np.array([float(v) for v in fields[1:]])
            elif tag == "std":
                stds = np.array([float(v) for v in fields[1:]])
            elif tag == "zero_variance":
                zero_variance = [int(v) for v in fields[1].split(",") if v]
            elif tag == "e":
                ent_rows[int(fields[1])] = np.array([float(v) for v in fields[2:]])
            elif tag == "r":
                rel_rows[int(fields[1])] = np.array([float(v) for v in fields[2:]])
            else:
                raise ValueError(f"{path}: unknown row tag {tag!r}")
    n_ent, n_rel = int(meta["F"]), int(meta["R"])
    if means is None or stds is None:
        raise ValueError(f"{path}: missing standardizer rows")
    if len(ent_rows) != n_ent or len(rel_rows) != n_rel:
        raise ValueError(f"{path}: embedding row count does not match header")
    ent = np.stack([ent_rows[i] for i in range(n_ent)])
    rel = np.stack([rel_rows[i] for i in range(n_rel)])
    standardizer = FeatureStandardizer(means=means, stds=stds, zero_variance=zero_variance)
    return EmbeddingSpace(
        matrix=FeatureEmbeddingMatrix(ent, rel),
        standardizer=standardizer,
        meta={k: v for k, v in meta.items() if k not in ("F", "R", "d")},
    )
