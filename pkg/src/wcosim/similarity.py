"""Similarity and distance measures: whitened cosine, plain cosine, L1, L2."""

from __future__ import annotations

import numpy as np

from .linalg import WhiteningMatrix, as_vector

__all__ = [
    "WhitenedNullSpaceError",
    "whitened_cosine",
    "cosine",
    "manhattan",
    "euclidean",
]


class WhitenedNullSpaceError(ValueError):
    """A vector projects to zero under the whitening transform.

    The similarity is undefined for such a vector; callers decide how to
    surface the failure (the classifier reports which operand was degenerate
    rather than silently mislabeling).
    """

    def __init__(self, operand: str):
        self.operand = operand
        super().__init__(f"vector in whitened null space: {operand}")


def whitened_cosine(u, v, whitening: WhiteningMatrix) -> float:
    """Cosine similarity of ``u`` and ``v`` after whitening both.

    Computes ``a = W^T u`` and ``b = W^T v`` and returns
    ``(a . b) / (|a| |b|)``. Working in the k-dimensional projected space
    avoids ever inverting the covariance matrix, which the equivalent
    inverse-covariance formulation would require.
    """
    u = as_vector(u)
    v = as_vector(v)
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    if u.size != whitening.rows:
        raise ValueError(
            f"vector length {u.size} does not match whitening rows {whitening.rows}"
        )
    a = whitening.w.T @ u
    b = whitening.w.T @ v
    na = np.linalg.norm(a)
    nb = np.linalg.norm(b)
    if na == 0.0:
        raise WhitenedNullSpaceError("first argument")
    if nb == 0.0:
        raise WhitenedNullSpaceError("second argument")
    return float((a @ b) / (na * nb))


def cosine(u, v) -> float:
    """Plain cosine similarity ``(u . v) / (|u| |v|)``."""
    u = as_vector(u)
    v = as_vector(v)
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine similarity undefined for a zero vector")
    return float((u @ v) / (nu * nv))


def manhattan(u, v) -> float:
    """L1 distance."""
    u = as_vector(u)
    v = as_vector(v)
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    return float(np.abs(u - v).sum())


def euclidean(u, v) -> float:
    """L2 distance."""
    u = as_vector(u)
    v = as_vector(v)
    if u.size != v.size:
        raise ValueError(f"length mismatch: {u.size} vs {v.size}")
    return float(np.linalg.norm(u - v))
