"""Classifiers: the whitened-cosine nearest-class-mean detector plus KNN and
PCA-projection baselines.

The detector compares a test vector against the two stored class means under
whitened cosine similarity; whichever mean it resembles more decides the
label, and both scores are kept so every decision can be inspected.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import NORMAL, ROSACEA, PreprocessSpec, RAW_VECTORS
from .linalg import (
    DEFAULT_TRUNCATION,
    TruncationPolicy,
    WhiteningMatrix,
    as_matrix,
    as_vector,
    column_mean,
    center_columns,
    pca_gram_trick,
    whitening_matrix,
)
from .similarity import WhitenedNullSpaceError, whitened_cosine

__all__ = [
    "Prediction",
    "WhitenedCosineModel",
    "KnnModel",
    "NearestMeanHead",
    "PcaPipelineModel",
    "KNN_METRICS",
    "train_whitened_cosine",
    "predict",
    "train_knn",
    "predict_knn",
    "train_pca_pipeline",
    "predict_pca",
    "predict_any",
    "method_name",
]

KNN_METRICS = ("l1", "l2", "cosine")


@dataclass(frozen=True)
class Prediction:
    """Label plus both per-class scores.

    For the whitened-cosine detector the scores are similarities (larger is
    closer) and the label follows strictly from comparing them. For KNN the
    label comes from the majority vote and the scores are the mean metric
    value per class among the k neighbors (NaN when a class is absent from
    the neighborhood); for the distance metrics smaller is closer.
    """

    label: str
    sim_normal: float
    sim_rosacea: float


@dataclass(frozen=True)
class WhitenedCosineModel:
    grand_mean: np.ndarray
    mean_normal: np.ndarray
    mean_rosacea: np.ndarray
    whitening: WhiteningMatrix
    preprocess: PreprocessSpec
    train_counts: tuple[int, int]  # (n normal, m rosacea)

    @property
    def dimension(self) -> int:
        return self.grand_mean.size


@dataclass(frozen=True)
class KnnModel:
    """Lazy learner: stores its training columns verbatim."""

    training_columns: np.ndarray  # (d, n)
    labels: tuple[str, ...]
    k: int
    metric: str
    preprocess: PreprocessSpec = RAW_VECTORS

    @property
    def dimension(self) -> int:
        return self.training_columns.shape[0]


@dataclass(frozen=True)
class NearestMeanHead:
    """Nearest-class-mean under L2 in the projected space."""

    mean_normal: np.ndarray
    mean_rosacea: np.ndarray


@dataclass(frozen=True)
class PcaPipelineModel:
    projection: np.ndarray  # (d, k), orthonormal columns, unwhitened
    grand_mean: np.ndarray
    inner: KnnModel | NearestMeanHead
    preprocess: PreprocessSpec = RAW_VECTORS

    @property
    def dimension(self) -> int:
        return self.projection.shape[0]

    @property
    def n_components(self) -> int:
        return self.projection.shape[1]

    def transform(self, x: np.ndarray) -> np.ndarray:
        return self.projection.T @ (x - self.grand_mean)


def train_whitened_cosine(
    x_normal,
    x_rosacea,
    policy: TruncationPolicy = DEFAULT_TRUNCATION,
    preprocess: PreprocessSpec = RAW_VECTORS,
) -> WhitenedCosineModel:
    """Train the whitened-cosine nearest-class-mean detector.

    The two sample matrices are concatenated; class means and the grand mean
    are taken; all columns are centered by the grand mean; the covariance
    spectrum comes from the small-Gram-matrix route (the d x d covariance is
    never materialized); and the whitening transform is built from the
    retained eigenpairs. The stored class means are the raw (uncentered)
    ones: centering here only serves the covariance estimate.
    """
    x_n = as_matrix(x_normal)
    x_r = as_matrix(x_rosacea)
    if x_n.shape[0] != x_r.shape[0]:
        raise ValueError(
            f"class matrices disagree on dimension: {x_n.shape[0]} vs {x_r.shape[0]}"
        )
    n, m = x_n.shape[1], x_r.shape[1]
    if n < 1 or m < 1:
        raise ValueError("both classes need at least one training sample")
    if n + m < 2:
        raise ValueError("need at least two training samples in total")

    x = np.concatenate([x_n, x_r], axis=1)
    mean_normal = column_mean(x_n)
    mean_rosacea = column_mean(x_r)
    grand_mean = column_mean(x)
    centered = center_columns(x, grand_mean)
    spectrum = pca_gram_trick(centered, policy)
    w = whitening_matrix(spectrum, policy)
    return WhitenedCosineModel(
        grand_mean=grand_mean,
        mean_normal=mean_normal,
        mean_rosacea=mean_rosacea,
        whitening=w,
        preprocess=preprocess,
        train_counts=(n, m),
    )


def _score_against_mean(x, mean, whitening, operand: str) -> float:
    try:
        return whitened_cosine(x, mean, whitening)
    except WhitenedNullSpaceError as exc:
        which = "test vector" if exc.operand == "first argument" else operand
        raise WhitenedNullSpaceError(which) from None


def predict(model: WhitenedCosineModel, x, center_at_predict: bool = False) -> Prediction:
    """Classify one vector against the stored class means.

    The label is rosacea exactly when the rosacea-mean similarity strictly
    exceeds the normal-mean similarity; an exact tie stays normal. With
    ``center_at_predict`` the test vector and both means are shifted by the
    grand mean before scoring (off by default; the standard rule scores them
    as-is).
    """
    x = as_vector(x)
    if x.size != model.dimension:
        raise ValueError(
            f"vector length {x.size} does not match model dimension {model.dimension}"
        )
    mean_n, mean_r = model.mean_normal, model.mean_rosacea
    if center_at_predict:
        x = x - model.grand_mean
        mean_n = mean_n - model.grand_mean
        mean_r = mean_r - model.grand_mean
    sim_normal = _score_against_mean(x, mean_n, model.whitening, "mean of normal class")
    sim_rosacea = _score_against_mean(x, mean_r, model.whitening, "mean of rosacea class")
    label = ROSACEA if sim_normal < sim_rosacea else NORMAL
    return Prediction(label, sim_normal, sim_rosacea)


def train_knn(x, labels, k: int = 1, metric: str = "l2",
              preprocess: PreprocessSpec = RAW_VECTORS) -> KnnModel:
    """Store the training data for k-nearest-neighbor classification."""
    x = as_matrix(x)
    labels = tuple(labels)
    if len(labels) != x.shape[1]:
        raise ValueError(
            f"label count {len(labels)} does not match sample count {x.shape[1]}"
        )
    for lab in labels:
        if lab not in (NORMAL, ROSACEA):
            raise ValueError(f"unknown label {lab!r}")
    if metric not in KNN_METRICS:
        raise ValueError(f"unknown metric {metric!r} (expected one of {KNN_METRICS})")
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > x.shape[1]:
        raise ValueError(f"k={k} exceeds sample count {x.shape[1]}")
    if k % 2 == 0:
        warnings.warn(f"k={k} is even; vote ties resolve to {NORMAL!r}", stacklevel=2)
    return KnnModel(x.copy(), labels, k, metric, preprocess)


def predict_knn(model: KnnModel, x) -> Prediction:
    """Majority vote among the k nearest training columns.

    Neighbors rank ascending by L1/L2 distance or descending by cosine
    similarity; rank ties break by lower training index. A tied vote resolves
    to normal. The returned scores are the mean metric value per class within
    the neighborhood.
    """
    x = as_vector(x)
    cols = model.training_columns
    if x.size != cols.shape[0]:
        raise ValueError(
            f"vector length {x.size} does not match model dimension {cols.shape[0]}"
        )
    if model.metric == "l1":
        values = np.abs(cols - x[:, None]).sum(axis=0)
        order = np.argsort(values, kind="stable")
    elif model.metric == "l2":
        values = np.sqrt(((cols - x[:, None]) ** 2).sum(axis=0))
        order = np.argsort(values, kind="stable")
    else:
        nx = np.linalg.norm(x)
        col_norms = np.linalg.norm(cols, axis=0)
        if nx == 0.0 or np.any(col_norms == 0.0):
            raise ValueError("cosine similarity undefined for a zero vector")
        values = (cols.T @ x) / (col_norms * nx)
        order = np.argsort(-values, kind="stable")

    top = order[: model.k]
    top_labels = [model.labels[i] for i in top]
    votes_rosacea = sum(1 for lab in top_labels if lab == ROSACEA)
    label = ROSACEA if votes_rosacea > model.k - votes_rosacea else NORMAL

    per_class = {}
    for cls in (NORMAL, ROSACEA):
        vals = [values[i] for i, lab in zip(top, top_labels) if lab == cls]
        per_class[cls] = float(np.mean(vals)) if vals else float("nan")
    return Prediction(label, per_class[NORMAL], per_class[ROSACEA])


def train_pca_pipeline(
    x_normal,
    x_rosacea,
    n_components: int | None = None,
    inner: str = "knn-l2",
    knn_k: int = 1,
    policy: TruncationPolicy = DEFAULT_TRUNCATION,
    variance_target: float = 0.95,
    preprocess: PreprocessSpec = RAW_VECTORS,
) -> PcaPipelineModel:
    """Class-independent PCA projection with a pluggable classifier head.

    The basis comes from the pooled centered training data. With
    ``n_components=None`` the smallest count capturing ``variance_target`` of
    the retained variance is used. Heads: ``knn-l2`` (KNN on the projected
    training data) or ``nearest-mean`` (class means in the projected space
    under L2).
    """
    x_n = as_matrix(x_normal)
    x_r = as_matrix(x_rosacea)
    if x_n.shape[0] != x_r.shape[0]:
        raise ValueError(
            f"class matrices disagree on dimension: {x_n.shape[0]} vs {x_r.shape[0]}"
        )
    if inner not in ("knn-l2", "nearest-mean"):
        raise ValueError(f"unknown pipeline head {inner!r}")
    n, m = x_n.shape[1], x_r.shape[1]
    pooled = np.concatenate([x_n, x_r], axis=1)
    grand_mean = column_mean(pooled)
    centered = center_columns(pooled, grand_mean)
    spectrum = pca_gram_trick(centered, policy)
    available = spectrum.values.size

    if n_components is None:
        fractions = np.cumsum(spectrum.values) / spectrum.values.sum()
        n_components = int(np.searchsorted(fractions, variance_target) + 1)
        n_components = min(n_components, available)
    if n_components < 1:
        raise ValueError("need at least one component")
    if n_components > available:
        raise ValueError(
            f"requested {n_components} components but only {available} are available"
        )

    projection = spectrum.vectors[:, :n_components].copy()
    projected = projection.T @ centered  # (k, n+m)
    labels = [NORMAL] * n + [ROSACEA] * m
    head: KnnModel | NearestMeanHead
    if inner == "knn-l2":
        head = train_knn(projected, labels, k=knn_k, metric="l2")
    else:
        head = NearestMeanHead(
            mean_normal=projected[:, :n].mean(axis=1),
            mean_rosacea=projected[:, n:].mean(axis=1),
        )
    return PcaPipelineModel(projection, grand_mean, head, preprocess)


def predict_pca(model: PcaPipelineModel, x) -> Prediction:
    """Project the vector and apply the pipeline's classifier head."""
    x = as_vector(x)
    if x.size != model.dimension:
        raise ValueError(
            f"vector length {x.size} does not match model dimension {model.dimension}"
        )
    z = model.transform(x)
    if isinstance(model.inner, KnnModel):
        return predict_knn(model.inner, z)
    dist_normal = float(np.linalg.norm(z - model.inner.mean_normal))
    dist_rosacea = float(np.linalg.norm(z - model.inner.mean_rosacea))
    label = ROSACEA if dist_rosacea < dist_normal else NORMAL
    return Prediction(label, dist_normal, dist_rosacea)


AnyModel = WhitenedCosineModel | KnnModel | PcaPipelineModel


def predict_any(model: AnyModel, x, center_at_predict: bool = False) -> Prediction:
    """Dispatch prediction over the model kinds."""
    if isinstance(model, WhitenedCosineModel):
        return predict(model, x, center_at_predict=center_at_predict)
    if isinstance(model, KnnModel):
        return predict_knn(model, x)
    if isinstance(model, PcaPipelineModel):
        return predict_pca(model, x)
    raise TypeError(f"not a model: {type(model).__name__}")


def method_name(model: AnyModel) -> str:
    """Human-readable method label for reports."""
    if isinstance(model, WhitenedCosineModel):
        return "Whitened cosine similarity"
    if isinstance(model, KnnModel):
        pretty = {"l1": "L1", "l2": "L2", "cosine": "cosine"}[model.metric]
        return f"KNN with {pretty} metric"
    if isinstance(model, PcaPipelineModel):
        if isinstance(model.inner, KnnModel):
            return "KNN-L2 after PCA"
        return "Class independent PCA"
    raise TypeError(f"not a model: {type(model).__name__}")
