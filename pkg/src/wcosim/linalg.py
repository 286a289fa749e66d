"""Dense linear-algebra core: column statistics, symmetric eigendecomposition,
the small-Gram-matrix PCA route for d >> c data, and whitening construction.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "TruncationPolicy",
    "DEFAULT_TRUNCATION",
    "EigenSystem",
    "WhiteningMatrix",
    "as_vector",
    "as_matrix",
    "column_mean",
    "center_columns",
    "covariance_unbiased",
    "eigh_symmetric",
    "pca_gram_trick",
    "whitening_matrix",
]


@dataclass(frozen=True)
class TruncationPolicy:
    """Eigenvalue retention policy.

    Eigenvalues above ``rel_tol`` times the largest one are retained; the rest
    (numerically zero variance directions) are dropped. A spectrum whose
    largest eigenvalue does not clear the tiny absolute floor is treated as
    zero variance outright, since whitening by 1/sqrt of such values is
    meaningless. Slightly negative eigenvalues caused by round-off are clamped
    to zero as long as they stay above ``-clamp_tol`` times the largest
    magnitude; anything more negative is rejected as genuinely indefinite.
    """

    rel_tol: float = 1e-10
    clamp_tol: float = 1e-8
    abs_floor: float = 1e-20

    def __post_init__(self):
        if not (0.0 < self.rel_tol < 1.0):
            raise ValueError("rel_tol must be in (0, 1)")
        if self.clamp_tol <= 0.0:
            raise ValueError("clamp_tol must be positive")
        if self.abs_floor <= 0.0:
            raise ValueError("abs_floor must be positive")

    def threshold(self, largest: float) -> float:
        return max(self.rel_tol * largest, self.abs_floor)


DEFAULT_TRUNCATION = TruncationPolicy()


@dataclass(frozen=True)
class EigenSystem:
    """Eigenvalues (descending, non-negative) and orthonormal eigenvectors."""

    values: np.ndarray  # shape (k,)
    vectors: np.ndarray  # shape (d, k), columns are eigenvectors

    def __post_init__(self):
        if self.vectors.ndim != 2 or self.values.ndim != 1:
            raise ValueError("EigenSystem expects 1-D values and 2-D vectors")
        if self.vectors.shape[1] != self.values.size:
            raise ValueError("eigenvalue / eigenvector count mismatch")


@dataclass(frozen=True)
class WhiteningMatrix:
    """Transform whose columns are covariance eigenvectors scaled by 1/sqrt(eigenvalue).

    Projecting data through ``w.T`` makes the retained subspace have identity
    covariance.
    """

    w: np.ndarray  # shape (d, k)
    eigenvalues: np.ndarray  # the k retained covariance eigenvalues

    @property
    def rows(self) -> int:
        return self.w.shape[0]

    @property
    def retained_rank(self) -> int:
        return self.w.shape[1]


def as_vector(x) -> np.ndarray:
    """Validate and convert to a finite, non-empty 1-D float64 array."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("expected a non-empty 1-D vector")
    if not np.isfinite(v).all():
        raise ValueError("vector contains NaN or Inf")
    return v


def as_matrix(x) -> np.ndarray:
    """Validate and convert to a finite 2-D float64 array (columns are samples)."""
    m = np.asarray(x, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] == 0:
        raise ValueError("expected a 2-D matrix with at least one row")
    if not np.isfinite(m).all():
        raise ValueError("matrix contains NaN or Inf")
    return m


def column_mean(x) -> np.ndarray:
    """Arithmetic mean of the columns of ``x``."""
    x = as_matrix(x)
    if x.shape[1] == 0:
        raise ValueError("empty sample set")
    return x.mean(axis=1)


def center_columns(x, mu) -> np.ndarray:
    """Subtract ``mu`` from every column of ``x``."""
    x = as_matrix(x)
    mu = as_vector(mu)
    if mu.size != x.shape[0]:
        raise ValueError(
            f"dimension mismatch: matrix has {x.shape[0]} rows, mean has {mu.size}"
        )
    return x - mu[:, None]


def covariance_unbiased(x_centered) -> np.ndarray:
    """Materialized unbiased covariance ``X X^T / (c - 1)`` of centered columns.

    This forms the full d x d matrix, so it is only for small dimensions
    (tests, oracles). The training path goes through :func:`pca_gram_trick`
    instead, which never materializes this matrix.
    """
    x = as_matrix(x_centered)
    c = x.shape[1]
    if c < 2:
        raise ValueError("need at least two samples")
    return x @ x.T / (c - 1)


def eigh_symmetric(a, policy: TruncationPolicy = DEFAULT_TRUNCATION) -> EigenSystem:
    """Eigendecomposition of a symmetric positive-semidefinite matrix.

    Returns eigenvalues in descending order with their eigenvectors as columns.
    Small negative eigenvalues from round-off are clamped to zero per
    ``policy``; a significantly negative eigenvalue is an error, as is an
    asymmetric or non-square input.
    """
    a = as_matrix(a)
    d = a.shape[0]
    if a.shape[1] != d:
        raise ValueError(f"matrix is not square: {a.shape[0]}x{a.shape[1]}")
    scale = np.abs(a).max()
    if scale > 0.0 and np.abs(a - a.T).max() > 1e-10 * scale:
        raise ValueError("matrix is not symmetric within 1e-10 relative tolerance")
    try:
        values, vectors = np.linalg.eigh(a)
    except np.linalg.LinAlgError as exc:
        raise ValueError(f"symmetric eigendecomposition did not converge: {exc}") from exc

    # eigh returns ascending order
    values = values[::-1].copy()
    vectors = vectors[:, ::-1].copy()

    vmax = np.abs(values).max() if values.size else 0.0
    if vmax > 0.0:
        if values.min() < -policy.clamp_tol * vmax:
            raise ValueError(
                f"matrix has a significantly negative eigenvalue ({values.min():.3e}); "
                "expected positive semidefinite input"
            )
    np.clip(values, 0.0, None, out=values)
    return EigenSystem(values, vectors)


def pca_gram_trick(x_centered, policy: TruncationPolicy = DEFAULT_TRUNCATION) -> EigenSystem:
    """Leading eigenpairs of the covariance ``X X^T / (c - 1)`` via the c x c Gram matrix.

    For ``d >> c`` the d x d covariance is intractable, but ``X^T X`` is only
    c x c and shares its nonzero spectrum with ``X X^T``: if ``X^T X v = g v``
    then ``(X X^T)(X v) = g (X v)``. Each Gram eigenvector ``v`` is therefore
    mapped to ``X v`` and re-normalized (``X v`` is generally not unit length
    even when ``v`` is), and the eigenvalue is rescaled by ``1/(c - 1)`` so the
    result is the spectrum of the unbiased covariance, not of the raw scatter.

    Only eigenvalues above the truncation threshold are retained, and never
    more than ``c - 1`` of them (centering removes one degree of freedom).

    Raises if every eigenvalue falls below the threshold, i.e. the centered
    data has no variance.
    """
    x = as_matrix(x_centered)
    c = x.shape[1]
    if c < 2:
        raise ValueError("need at least two samples")

    gram = x.T @ x
    es = eigh_symmetric(gram, policy)

    sigma_values = es.values / (c - 1)
    vmax = sigma_values[0]
    if vmax <= policy.abs_floor:
        raise ValueError("degenerate data (zero variance)")
    n_keep = int(np.count_nonzero(sigma_values > policy.threshold(vmax)))
    n_keep = min(n_keep, c - 1)
    if n_keep == 0:
        raise ValueError("degenerate data (zero variance)")

    mapped = x @ es.vectors[:, :n_keep]
    norms = np.linalg.norm(mapped, axis=0)
    mapped = mapped / norms
    return EigenSystem(sigma_values[:n_keep], mapped)


def whitening_matrix(
    es: EigenSystem, policy: TruncationPolicy = DEFAULT_TRUNCATION
) -> WhiteningMatrix:
    """Build the whitening transform from an eigensystem of the covariance.

    Column i is ``vectors[:, i] / sqrt(values[i])`` for every retained
    eigenvalue; retention uses the policy's threshold.
    """
    if es.values.size == 0 or es.values[0] <= policy.abs_floor:
        raise ValueError("no eigenvalue survives truncation")
    n_keep = int(np.count_nonzero(es.values > policy.threshold(es.values[0])))
    if n_keep == 0:
        raise ValueError("no eigenvalue survives truncation")
    values = es.values[:n_keep].copy()
    w = es.vectors[:, :n_keep] / np.sqrt(values)
    return WhiteningMatrix(w, values)
